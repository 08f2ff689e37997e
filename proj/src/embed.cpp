#include "xmsmo/embed.hpp"

#include "xmsmo/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>

namespace xmsmo {

static_assert(std::endian::native == std::endian::little,
              "XMEB I/O assumes a little-endian host");

EmbeddingMatrix::EmbeddingMatrix(Eigen::Index dim) : data_(0, dim), dim_(dim) {
  require(dim >= 0, ErrorKind::InvalidArgument, "embedding dim must be non-negative");
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf data)
    : ids_(std::move(ids)), data_(std::move(data)), dim_(data_.cols()) {
  require(Eigen::Index(ids_.size()) == data_.rows(), ErrorKind::InvalidArgument,
          "embedding ids/rows mismatch");
  require(data_.allFinite(), ErrorKind::InvalidArgument, "embedding matrix has non-finite entries");
  index_.reserve(ids_.size());
  for (Eigen::Index i = 0; i < Eigen::Index(ids_.size()); ++i) {
    require(!ids_[i].empty(), ErrorKind::InvalidArgument, "empty embedding id");
    require(ids_[i].size() <= 0xFFFF, ErrorKind::InvalidArgument, "embedding id too long");
    auto [it, inserted] = index_.emplace(ids_[i], i);
    require(inserted, ErrorKind::InvalidArgument, "duplicate embedding id '" + ids_[i] + "'");
  }
}

std::optional<Eigen::Index> EmbeddingMatrix::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  if (a.ids_ != b.ids_ || a.dim_ != b.dim_ || a.rows() != b.rows()) return false;
  // Bitwise comparison so NaN payloads and signed zeros count.
  return std::memcmp(a.data_.data(), b.data_.data(), sizeof(float) * a.data_.size()) == 0;
}

namespace {

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T get(const char* what) {
    T value;
    bytes(reinterpret_cast<char*>(&value), sizeof(T), what);
    return value;
  }

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      fail(ErrorKind::Format, std::string("truncated XMEB reading ") + what + " at offset " +
                                  std::to_string(offset_ + in_.gcount()));
    }
    offset_ += n;
  }

  std::size_t offset() const { return offset_; }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

}  // namespace

std::size_t write_embeddings(const EmbeddingMatrix& matrix, std::ostream& sink) {
  std::size_t written = 16;
  sink.write("XMEB", 4);
  put<std::uint32_t>(sink, kXmebVersion);
  put<std::uint32_t>(sink, static_cast<std::uint32_t>(matrix.rows()));
  put<std::uint32_t>(sink, static_cast<std::uint32_t>(matrix.dim()));
  const auto& data = matrix.data();
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    const std::string& id = matrix.ids()[i];
    put<std::uint16_t>(sink, static_cast<std::uint16_t>(id.size()));
    sink.write(id.data(), static_cast<std::streamsize>(id.size()));
    sink.write(reinterpret_cast<const char*>(data.row(i).data()),
               static_cast<std::streamsize>(sizeof(float) * matrix.dim()));
    written += 2 + id.size() + sizeof(float) * matrix.dim();
  }
  require(bool(sink), ErrorKind::Io, "XMEB write failed");
  return written;
}

EmbeddingMatrix read_embeddings(std::istream& source) {
  Reader reader(source);
  std::array<char, 4> magic{};
  reader.bytes(magic.data(), 4, "magic");
  require(std::memcmp(magic.data(), "XMEB", 4) == 0, ErrorKind::Format,
          "bad XMEB magic at offset 0");
  const auto version = reader.get<std::uint32_t>("version");
  require(version == kXmebVersion, ErrorKind::Format,
          "unsupported XMEB version " + std::to_string(version) + " at offset 4");
  const auto n = reader.get<std::uint32_t>("row count");
  const auto d = reader.get<std::uint32_t>("dim");

  std::vector<std::string> ids;
  ids.reserve(std::min<std::uint32_t>(n, 1u << 20));
  RowMatrixXf data(0, d);
  std::vector<float> values;
  values.reserve(std::size_t(std::min<std::uint32_t>(n, 1u << 16)) * d);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t record_offset = reader.offset();
    const auto len = reader.get<std::uint16_t>("id length");
    std::string id(len, '\0');
    reader.bytes(id.data(), len, "id");
    require(!id.empty(), ErrorKind::Format,
            "empty id in record at offset " + std::to_string(record_offset));
    require(seen.emplace(id, i).second, ErrorKind::Format,
            "duplicate id '" + id + "' at offset " + std::to_string(record_offset));
    const std::size_t old = values.size();
    values.resize(old + d);
    reader.bytes(reinterpret_cast<char*>(values.data() + old), sizeof(float) * d, "row data");
    for (std::size_t j = old; j < values.size(); ++j) {
      require(std::isfinite(values[j]), ErrorKind::Format,
              "non-finite value in record at offset " + std::to_string(record_offset));
    }
    ids.push_back(std::move(id));
  }
  require(source.peek() == std::char_traits<char>::eof(), ErrorKind::Format,
          "trailing bytes after XMEB data at offset " + std::to_string(reader.offset()));
  data = Eigen::Map<RowMatrixXf>(values.data(), n, d);
  if (n == 0) return EmbeddingMatrix(d);
  return EmbeddingMatrix(std::move(ids), std::move(data));
}

std::size_t write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  return write_embeddings(matrix, out);
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::Io, "cannot open " + path.string());
  try {
    return read_embeddings(in);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Format) throw;
    fail(ErrorKind::Format, path.string() + ": " + e.what());
  }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

// Box-Muller over mt19937_64 draws: both are fully specified, so vectors are
// identical across standard libraries.
class PortableGaussian {
 public:
  explicit PortableGaussian(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform_open();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  double uniform_open() { return ((engine_() >> 11) + 0.5) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

Eigen::VectorXd normalized_or_basis(Eigen::VectorXd v) {
  const double norm = v.norm();
  if (norm < 1e-12) {
    v.setZero();
    v(0) = 1.0;
    return v;
  }
  return v / norm;
}

constexpr int kFrameGrid = 4;
constexpr int kFrameFeatures = kFrameGrid * kFrameGrid * 3 + 1;

}  // namespace

Eigen::VectorXd toy_embed_token(std::string_view token, int dim, std::uint64_t seed) {
  require(dim >= 1, ErrorKind::InvalidArgument, "embedding dim must be >= 1");
  std::uint64_t key = fnv1a64(token, fnv1a64(std::to_string(seed)));
  PortableGaussian gauss(key);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = gauss();
  return normalized_or_basis(std::move(v));
}

Eigen::VectorXd toy_embed_frame(const RgbImage& frame, int dim) {
  require(dim >= 1, ErrorKind::InvalidArgument, "embedding dim must be >= 1");
  require(!frame.empty(), ErrorKind::InvalidArgument, "cannot embed an empty frame");

  // Centred cell means plus a constant bias feature; never all-zero.
  Eigen::VectorXd features = Eigen::VectorXd::Zero(kFrameFeatures);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(kFrameGrid * kFrameGrid);
  for (int y = 0; y < frame.height; ++y) {
    const int gy = y * kFrameGrid / frame.height;
    for (int x = 0; x < frame.width; ++x) {
      const int cell = gy * kFrameGrid + x * kFrameGrid / frame.width;
      features.segment<3>(3 * cell) += frame.at(x, y).matrix().transpose().cast<double>();
      counts(cell) += 1.0;
    }
  }
  for (int cell = 0; cell < kFrameGrid * kFrameGrid; ++cell) {
    if (counts(cell) > 0) features.segment<3>(3 * cell) /= counts(cell);
    features.segment<3>(3 * cell).array() -= 0.5;
  }
  features(kFrameFeatures - 1) = 1.0;

  PortableGaussian gauss(0x5eed'f4a3'e000'0001ULL + static_cast<std::uint64_t>(dim));
  Eigen::MatrixXd projection(dim, kFrameFeatures);
  for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = gauss();
  return normalized_or_basis(projection * features);
}

}  // namespace xmsmo
