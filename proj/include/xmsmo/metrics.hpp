#ifndef XMSMO_METRICS_HPP
#define XMSMO_METRICS_HPP

#include "xmsmo/embed.hpp"
#include "xmsmo/image.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace xmsmo {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeScore make_rouge(double precision, double recall);

/// Clipped n-gram overlap.
RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n);

/// Longest-common-subsequence overlap.
RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference);

inline constexpr double kDefaultFrameThreshold = 0.3;

/// Mean per-pixel RGB Euclidean distance, in [0, sqrt(3)]. The candidate is
/// resized to the reference resolution when they differ.
double frame_distance(const RgbImage& candidate, const RgbImage& reference);

bool frame_accuracy(const RgbImage& candidate, const RgbImage& reference,
                    double threshold = kDefaultFrameThreshold);

inline constexpr int kDefaultConcepts = 5;

/// Indices of the c concepts closest in cosine, ascending index order.
/// Ties in similarity go to the lower index.
std::vector<Eigen::Index> nearest_concepts(const Eigen::VectorXd& embedding,
                                           const EmbeddingMatrix& concepts, int c);

double iou(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b);

double iou_concepts(const Eigen::VectorXd& candidate, const Eigen::VectorXd& reference,
                    const EmbeddingMatrix& concepts, int c = kDefaultConcepts);

/// Frames are embedded with toy_embed_frame at the concept dimension.
double iou_concepts(const RgbImage& candidate, const RgbImage& reference,
                    const EmbeddingMatrix& concepts, int c = kDefaultConcepts);

/// Small fixed vocabulary of toy concept embeddings for when no concept file
/// is supplied.
EmbeddingMatrix toy_concepts(int dim, std::uint64_t seed);

double overall(double rouge_l, double iou, double best_rouge_l, double best_iou);

}  // namespace xmsmo

#endif  // XMSMO_METRICS_HPP
