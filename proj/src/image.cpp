#include "xmsmo/image.hpp"

#include "xmsmo/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

#ifdef XMSMO_HAVE_OPENCV
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#endif

namespace xmsmo {

namespace fs = std::filesystem;

RgbImage RgbImage::filled(int w, int h, float r, float g, float b) {
  RgbImage image(w, h);
  image.pixels.col(0).setConstant(r);
  image.pixels.col(1).setConstant(g);
  image.pixels.col(2).setConstant(b);
  return image;
}

namespace {

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int parse_header_int(std::istream& in, const fs::path& path) {
  std::string token = next_token(in);
  try {
    std::size_t used = 0;
    int value = std::stoi(token, &used);
    if (used == token.size() && value > 0) return value;
  } catch (const std::exception&) {
  }
  fail(ErrorKind::Format, "bad PPM header in " + path.string());
}

RgbImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::Io, "cannot open " + path.string());
  std::string magic = next_token(in);
  require(magic == "P6" || magic == "P3", ErrorKind::Format,
          "not a PPM file: " + path.string());
  int width = parse_header_int(in, path);
  int height = parse_header_int(in, path);
  int maxval = parse_header_int(in, path);
  require(maxval < 65536, ErrorKind::Format, "bad PPM maxval in " + path.string());

  RgbImage image(width, height);
  const float scale = 1.0f / static_cast<float>(maxval);
  const Eigen::Index count = image.size() * 3;
  float* out = image.pixels.data();
  if (magic == "P3") {
    for (Eigen::Index i = 0; i < count; ++i) {
      std::string token = next_token(in);
      require(!token.empty(), ErrorKind::Format, "truncated PPM: " + path.string());
      out[i] = static_cast<float>(std::stoi(token)) * scale;
    }
    return image;
  }
  const int bytes_per_sample = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(static_cast<std::size_t>(count) * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(in.gcount() == static_cast<std::streamsize>(raw.size()), ErrorKind::Format,
          "truncated PPM: " + path.string());
  for (Eigen::Index i = 0; i < count; ++i) {
    unsigned value = bytes_per_sample == 1
                         ? raw[i]
                         : (unsigned(raw[2 * i]) << 8) | raw[2 * i + 1];
    out[i] = static_cast<float>(value) * scale;
  }
  return image;
}

#ifdef XMSMO_HAVE_OPENCV
RgbImage read_with_opencv(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  require(!bgr.empty(), ErrorKind::Format, "cannot decode image " + path.string());
  RgbImage image(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      image.at(x, y) << row[x][2] / 255.0f, row[x][1] / 255.0f, row[x][0] / 255.0f;
    }
  }
  return image;
}
#endif

}  // namespace

bool is_image_file(const fs::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm" || ext == ".pnm") return true;
#ifdef XMSMO_HAVE_OPENCV
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
#else
  return false;
#endif
}

RgbImage read_image(const fs::path& path) {
  require(fs::exists(path), ErrorKind::Io, "no such file: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".ppm" || ext == ".pnm") return read_ppm(path);
#ifdef XMSMO_HAVE_OPENCV
  return read_with_opencv(path);
#else
  fail(ErrorKind::Format, "unsupported image format (built without OpenCV): " + path.string());
#endif
}

void write_ppm(const RgbImage& image, const fs::path& path) {
  require(!image.empty(), ErrorKind::InvalidArgument, "cannot write an empty image");
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> raw(static_cast<std::size_t>(image.size()) * 3);
  const float* in = image.pixels.data();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    float v = std::clamp(in[i], 0.0f, 1.0f);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  require(bool(out), ErrorKind::Io, "write failed: " + path.string());
}

RgbImage resize(const RgbImage& image, int width, int height) {
  require(!image.empty(), ErrorKind::InvalidArgument, "cannot resize an empty image");
  require(width > 0 && height > 0, ErrorKind::InvalidArgument, "target size must be positive");
  if (width == image.width && height == image.height) return image;

  RgbImage out(width, height);
  const double sx = double(image.width) / width;
  const double sy = double(image.height) / height;

  if (sx >= 1.0 && sy >= 1.0) {
    // Box filter: each target pixel averages the source area it covers.
    for (int y = 0; y < height; ++y) {
      const double y0 = y * sy, y1 = (y + 1) * sy;
      for (int x = 0; x < width; ++x) {
        const double x0 = x * sx, x1 = (x + 1) * sx;
        Eigen::Array3d acc = Eigen::Array3d::Zero();
        double area = 0.0;
        for (int yy = int(y0); yy < std::min(image.height, int(std::ceil(y1))); ++yy) {
          const double wy = std::min(y1, yy + 1.0) - std::max(y0, double(yy));
          if (wy <= 0) continue;
          for (int xx = int(x0); xx < std::min(image.width, int(std::ceil(x1))); ++xx) {
            const double wx = std::min(x1, xx + 1.0) - std::max(x0, double(xx));
            if (wx <= 0) continue;
            acc += image.at(xx, yy).transpose().cast<double>() * (wx * wy);
            area += wx * wy;
          }
        }
        out.at(x, y) = (acc / area).cast<float>().transpose();
      }
    }
    return out;
  }

  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = int(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const float ty = float(fy - y0);
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = int(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const float tx = float(fx - x0);
      out.at(x, y) = (1 - ty) * ((1 - tx) * image.at(x0, y0) + tx * image.at(x1, y0)) +
                     ty * ((1 - tx) * image.at(x0, y1) + tx * image.at(x1, y1));
    }
  }
  return out;
}

}  // namespace xmsmo
