#ifndef XMSMO_CORPUS_HPP
#define XMSMO_CORPUS_HPP

#include "xmsmo/embed.hpp"
#include "xmsmo/image.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace xmsmo {

using Index = Eigen::Index;
using TokenList = std::vector<std::string>;
using Tokenizer = std::function<TokenList(std::string_view)>;

/// Inclusive, 0-based range of consecutive items.
struct Span {
  Index start = 0;
  Index end = 0;

  Index length() const { return end - start + 1; }
  friend bool operator==(const Span&, const Span&) = default;
};

using SentenceSpan = Span;
using SceneSpan = Span;

struct ManifestEntry {
  std::string id;
  std::filesystem::path frames_dir;
  std::filesystem::path document_path;
  std::optional<std::string> ref_title;
  std::optional<std::filesystem::path> ref_cover_path;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

/// JSON Lines, one entry per line. Relative paths resolve against the
/// manifest's own directory.
Manifest read_manifest(const std::filesystem::path& path);

struct VideoDocPair {
  std::string id;
  std::vector<RgbImage> frames;
  std::vector<std::filesystem::path> frame_paths;
  std::size_t source_frame_count = 0;
  std::vector<SceneSpan> scenes;
  TokenList words;
  std::vector<SentenceSpan> sentences;
  std::optional<TokenList> ref_title;
  std::optional<RgbImage> ref_cover;
  std::optional<std::filesystem::path> ref_cover_path;

  Index frame_count() const { return Index(frames.size()); }
  Index word_count() const { return Index(words.size()); }
};

/// Lowercases ASCII, removes punctuation, splits on whitespace.
TokenList tokenize(std::string_view text);

struct SplitText {
  TokenList tokens;
  std::vector<SentenceSpan> sentences;
};

/// Sentences end at chunks terminated by '.', '!' or '?'; any trailing
/// tokens form a final sentence.
SplitText split_sentences(std::string_view text, const Tokenizer& tokenizer = tokenize);

std::string read_text(const std::filesystem::path& path);

/// Tokenised, sentence-split document of a manifest entry; empty-input when
/// it has no words.
SplitText read_document(const ManifestEntry& entry, const Tokenizer& tokenizer = tokenize);

inline constexpr double kDefaultSceneThreshold = 0.35;

/// Opens a new scene after row i when 1 - cos(e_i, e_{i+1}) > threshold.
std::vector<SceneSpan> segment_scenes(const Eigen::MatrixXd& frame_embeddings, double threshold);

/// Throws invalid-argument unless spans tile [0, count) in order.
void validate_partition(const std::vector<Span>& spans, Index count, std::string_view what);

struct EmbeddingSource {
  /// Empty means toy embeddings; otherwise <dir>/<id>/{frames,words,tokens}.xmeb.
  std::filesystem::path directory;
  int dim = kDefaultEmbeddingDim;
  std::uint64_t seed = 0;

  bool toy() const { return directory.empty(); }
};

struct LoadOptions {
  std::size_t frame_stride = 360;
  std::size_t frame_cap = 120;
  /// Zero keeps the native resolution.
  int width = 640;
  int height = 360;
  double scene_threshold = kDefaultSceneThreshold;
  EmbeddingSource embeddings;
  Tokenizer tokenizer = tokenize;
};

/// Sorted image files of a frames directory.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

VideoDocPair load_pair(const ManifestEntry& entry, const LoadOptions& options);

/// Token-keyed cost-model embeddings: a loaded matrix or the toy embedder.
class TokenEmbeddings {
 public:
  static TokenEmbeddings toy(int dim, std::uint64_t seed);
  static TokenEmbeddings from_matrix(EmbeddingMatrix matrix);

  /// nullopt when the token is outside the dictionary.
  std::optional<Eigen::VectorXd> lookup(std::string_view token) const;
  int dim() const { return dim_; }

 private:
  std::optional<EmbeddingMatrix> matrix_;
  int dim_ = 0;
  std::uint64_t seed_ = 0;
};

struct PairEmbeddings {
  Eigen::MatrixXd frames;  // T x d
  Eigen::MatrixXd words;   // U x d
  TokenEmbeddings tokens;
};

Eigen::MatrixXd embed_frames(const VideoDocPair& pair, const EmbeddingSource& source);
PairEmbeddings load_embeddings(const VideoDocPair& pair, const EmbeddingSource& source);

/// Toy embedding files for one pair, in the same layout as external ones.
void write_toy_embeddings(const VideoDocPair& pair, const EmbeddingSource& source,
                          const std::filesystem::path& out_dir);

}  // namespace xmsmo

#endif  // XMSMO_CORPUS_HPP
