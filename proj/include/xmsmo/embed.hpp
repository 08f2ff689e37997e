#ifndef XMSMO_EMBED_HPP
#define XMSMO_EMBED_HPP

#include "xmsmo/image.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace xmsmo {

using RowMatrixXf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Named rows of float32 embeddings. Immutable once constructed; the
/// constructor enforces unique ids, matching row count and finite values.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, RowMatrixXf data);
  /// Empty matrix with a declared width.
  explicit EmbeddingMatrix(Eigen::Index dim);

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index dim() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const RowMatrixXf& data() const { return data_; }

  std::optional<Eigen::Index> find(std::string_view id) const;
  Eigen::VectorXd row(Eigen::Index i) const { return data_.row(i).transpose().cast<double>(); }

  /// Rows as doubles, one embedding per row.
  Eigen::MatrixXd to_double() const { return data_.cast<double>(); }

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);

 private:
  std::vector<std::string> ids_;
  RowMatrixXf data_;
  Eigen::Index dim_ = 0;
  std::unordered_map<std::string, Eigen::Index> index_;
};

inline constexpr std::uint32_t kXmebVersion = 1;

// XMEB layout, all integers little-endian, no padding:
//   "XMEB" | u32 version | u32 n | u32 d | n x (u16 id_len | id bytes | d x f32)
std::size_t write_embeddings(const EmbeddingMatrix& matrix, std::ostream& sink);
EmbeddingMatrix read_embeddings(std::istream& source);

std::size_t write_embeddings(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

inline constexpr int kDefaultEmbeddingDim = 512;

/// Deterministic pseudo-random unit vector keyed by (token, seed).
Eigen::VectorXd toy_embed_token(std::string_view token, int dim, std::uint64_t seed);

/// Grid-downsampled colour layout projected to `dim` and normalised.
Eigen::VectorXd toy_embed_frame(const RgbImage& frame, int dim);

/// Stable 64-bit FNV-1a; toy embeddings must not depend on std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace xmsmo

#endif  // XMSMO_EMBED_HPP
