#ifndef XMSMO_OBJECTIVE_HPP
#define XMSMO_OBJECTIVE_HPP

#include "xmsmo/corpus.hpp"
#include "xmsmo/image.hpp"
#include "xmsmo/lm.hpp"
#include "xmsmo/transport.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace xmsmo {

struct SemanticDistribution {
  TokenList support;  // first-occurrence order
  DiscreteMeasure weights;
};

using Dictionary = std::function<bool(const std::string&)>;

/// Normalised term frequency over the in-dictionary tokens.
SemanticDistribution tf_distribution(const TokenList& tokens, const Dictionary& in_dictionary = {});

/// Wasserstein distance between TF(summary) and TF(document) under cosine
/// token costs. Tokens without an embedding fall outside the dictionary.
double document_coverage(const TokenList& document, const TokenList& summary,
                         const TokenEmbeddings& embeddings, const SolverConfig& solver = {});

struct ColorSignature {
  Eigen::Matrix<double, Eigen::Dynamic, 3> points;
  Eigen::VectorXd weights;
};

inline constexpr int kDefaultClusters = 8;

struct ColorOptions {
  int clusters = kDefaultClusters;
  std::uint64_t seed = 0;
  /// k-means fits on at most this many pixels (even stride); weights always
  /// come from assigning every pixel.
  Eigen::Index sample_limit = 4096;
  int max_iter = 100;
};

/// k-means++ / Lloyd in RGB; coincident centroids are merged.
ColorSignature color_signature(const RgbImage& frame, const ColorOptions& options = {});

/// Pixel-wise mean, accumulated in double.
RgbImage mean_frame(const std::vector<RgbImage>& frames);

/// Wasserstein distance between two colour signatures, Euclidean RGB cost.
double signature_distance(const ColorSignature& a, const ColorSignature& b,
                          const SolverConfig& solver = {});

/// Colour-signature distance between the mean frame and the cover frame.
double video_coverage(const std::vector<RgbImage>& frames, const RgbImage& cover,
                      const ColorOptions& colors = {}, const SolverConfig& solver = {});

/// 1 - cos(frame, sentence).
double cross_modal(const Eigen::VectorXd& frame_emb, const Eigen::VectorXd& sentence_emb);

struct LossWeights {
  double document = 1.0;
  double video = 1.0;
  double fluency = 1.0;
  double cross_modal = 1.0;

  LossWeights scaled(double gamma) const {
    return {document * gamma, video * gamma, fluency * gamma, cross_modal * gamma};
  }
};

struct LossBreakdown {
  double document = 0.0;
  double video = 0.0;
  double fluency = 0.0;
  double cross_modal = 0.0;
  double total = 0.0;
};

/// total = l_d * document + l_v * video + l_f * fluency + l_c * cross_modal
LossBreakdown quartet_loss(const LossBreakdown& parts, const LossWeights& weights);

/// Per-pair caches for evaluating the quartet loss of many candidate
/// summaries: document TF and token costs, colour signatures, embeddings.
/// Signature caching is internally synchronised; everything else is const.
class QuartetObjective {
 public:
  struct Inputs {
    const VideoDocPair* pair = nullptr;
    const PairEmbeddings* embeddings = nullptr;
    const NgramLM* lm = nullptr;
    ColorOptions colors;
    SolverConfig solver;
  };

  explicit QuartetObjective(const Inputs& inputs);

  Index frame_count() const { return pair_->frame_count(); }
  Index word_count() const { return pair_->word_count(); }

  /// word_indices must be strictly increasing and nonempty.
  double document_loss(const std::vector<Index>& word_indices) const;
  double fluency_loss(const std::vector<Index>& word_indices) const;
  double video_loss(Index frame) const;
  double cross_modal_loss(Index frame, const std::vector<Index>& word_indices) const;

  LossBreakdown parts(Index frame, const std::vector<Index>& word_indices) const;

  TokenList tokens(const std::vector<Index>& word_indices) const;

 private:
  void check_words(const std::vector<Index>& word_indices) const;

  const VideoDocPair* pair_;
  const PairEmbeddings* embeddings_;
  const NgramLM* lm_;
  ColorOptions colors_;
  SolverConfig solver_;

  // Document side: support = in-dictionary types in first-occurrence order.
  std::vector<Index> word_type_;  // word index -> support index, -1 if out of dictionary
  DiscreteMeasure document_tf_;
  CostMatrix type_cost_;

  ColorSignature mean_signature_;
  mutable std::mutex signature_mutex_;
  mutable std::map<Index, ColorSignature> frame_signatures_;
};

}  // namespace xmsmo

#endif  // XMSMO_OBJECTIVE_HPP
