#ifndef XMSMO_IMAGE_HPP
#define XMSMO_IMAGE_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <string>

namespace xmsmo {

/// Pixels stored one per row in scanline order, channels R,G,B in [0,1].
using PixelArray = Eigen::Array<float, Eigen::Dynamic, 3, Eigen::RowMajor>;

struct RgbImage {
  int width = 0;
  int height = 0;
  PixelArray pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(PixelArray::Zero(Eigen::Index(w) * h, 3)) {}

  bool empty() const { return width <= 0 || height <= 0; }
  Eigen::Index size() const { return pixels.rows(); }

  auto at(int x, int y) { return pixels.row(Eigen::Index(y) * width + x); }
  auto at(int x, int y) const { return pixels.row(Eigen::Index(y) * width + x); }

  static RgbImage filled(int w, int h, float r, float g, float b);
};

/// Decodes PPM (P3/P6) natively; PNG/JPEG when built with OpenCV.
RgbImage read_image(const std::filesystem::path& path);

/// Writes binary PPM (P6), 8 bits per channel.
void write_ppm(const RgbImage& image, const std::filesystem::path& path);

/// Area-averaging resample when shrinking, bilinear when enlarging.
RgbImage resize(const RgbImage& image, int width, int height);

bool is_image_file(const std::filesystem::path& path);

}  // namespace xmsmo

#endif  // XMSMO_IMAGE_HPP
