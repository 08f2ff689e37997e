#include "xmsmo/metrics.hpp"

#include "xmsmo/error.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace xmsmo {

RougeScore make_rouge(double precision, double recall) {
  const double sum = precision + recall;
  return {precision, recall, sum > 0.0 ? 2.0 * precision * recall / sum : 0.0};
}

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, long> count_grams(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Gram, long> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[Gram(tokens.begin() + std::ptrdiff_t(i), tokens.begin() + std::ptrdiff_t(i + n))];
  }
  return counts;
}

long total(const std::map<Gram, long>& counts) {
  long sum = 0;
  for (const auto& [gram, c] : counts) sum += c;
  return sum;
}

}  // namespace

RougeScore rouge_n(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference, int n) {
  require(n >= 1, ErrorKind::InvalidArgument, "ROUGE-n needs n >= 1");
  const auto cand = count_grams(candidate, std::size_t(n));
  const auto ref = count_grams(reference, std::size_t(n));
  long overlap = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  const long cand_total = total(cand), ref_total = total(ref);
  return make_rouge(cand_total ? double(overlap) / double(cand_total) : 0.0,
                    ref_total ? double(overlap) / double(ref_total) : 0.0);
}

RougeScore rouge_l(const std::vector<std::string>& candidate,
                   const std::vector<std::string>& reference) {
  if (candidate.empty() || reference.empty()) return {};
  // Two-row LCS table.
  std::vector<std::size_t> prev(reference.size() + 1, 0), cur(reference.size() + 1, 0);
  for (const auto& c : candidate) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      cur[j + 1] = c == reference[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  const double lcs = double(prev.back());
  return make_rouge(lcs / double(candidate.size()), lcs / double(reference.size()));
}

double frame_distance(const RgbImage& candidate, const RgbImage& reference) {
  require(!candidate.empty() && !reference.empty(), ErrorKind::InvalidArgument,
          "frame accuracy needs two non-empty frames");
  const RgbImage resized = candidate.width == reference.width && candidate.height == reference.height
                               ? candidate
                               : resize(candidate, reference.width, reference.height);
  const Eigen::ArrayXd d =
      (resized.pixels.cast<double>() - reference.pixels.cast<double>()).matrix().rowwise().norm();
  return d.mean();
}

bool frame_accuracy(const RgbImage& candidate, const RgbImage& reference, double threshold) {
  return frame_distance(candidate, reference) < threshold;
}

std::vector<Eigen::Index> nearest_concepts(const Eigen::VectorXd& embedding,
                                           const EmbeddingMatrix& concepts, int c) {
  require(concepts.rows() > 0, ErrorKind::InvalidArgument, "concept vocabulary is empty");
  require(c >= 1, ErrorKind::InvalidArgument, "concept count c must be >= 1");
  require(c <= concepts.rows(), ErrorKind::InvalidArgument,
          "concept count c = " + std::to_string(c) + " exceeds vocabulary size " +
              std::to_string(concepts.rows()));
  require(embedding.size() == concepts.dim(), ErrorKind::InvalidArgument,
          "frame embedding dim " + std::to_string(embedding.size()) +
              " does not match concept dim " + std::to_string(concepts.dim()));

  const Eigen::MatrixXd vocab = concepts.to_double();
  const double en = embedding.norm();
  Eigen::VectorXd sim(vocab.rows());
  for (Eigen::Index i = 0; i < vocab.rows(); ++i) {
    const double denom = en * vocab.row(i).norm();
    sim(i) = denom > 0.0 ? vocab.row(i).dot(embedding) / denom : 0.0;
  }
  std::vector<Eigen::Index> order(std::size_t(vocab.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return sim(a) > sim(b); });
  order.resize(std::size_t(c));
  std::sort(order.begin(), order.end());
  return order;
}

double iou(const std::vector<Eigen::Index>& a, const std::vector<Eigen::Index>& b) {
  std::vector<Eigen::Index> sa = a, sb = b, both, either;
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(both));
  std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(either));
  return either.empty() ? 1.0 : double(both.size()) / double(either.size());
}

double iou_concepts(const Eigen::VectorXd& candidate, const Eigen::VectorXd& reference,
                    const EmbeddingMatrix& concepts, int c) {
  return iou(nearest_concepts(candidate, concepts, c), nearest_concepts(reference, concepts, c));
}

double iou_concepts(const RgbImage& candidate, const RgbImage& reference,
                    const EmbeddingMatrix& concepts, int c) {
  const int dim = int(concepts.dim());
  return iou_concepts(toy_embed_frame(candidate, dim), toy_embed_frame(reference, dim), concepts, c);
}

EmbeddingMatrix toy_concepts(int dim, std::uint64_t seed) {
  static const std::vector<std::string> kWords = {
      "person", "face",   "crowd",  "building", "street", "car",    "sky",    "water",
      "tree",   "grass",  "food",   "animal",   "text",   "screen", "stage",  "room",
      "night",  "sport",  "flag",   "map",      "fire",   "snow",   "beach",  "mountain"};
  RowMatrixXf data(Eigen::Index(kWords.size()), dim);
  for (std::size_t i = 0; i < kWords.size(); ++i) {
    data.row(Eigen::Index(i)) = toy_embed_token(kWords[i], dim, seed).cast<float>().transpose();
  }
  return EmbeddingMatrix(kWords, std::move(data));
}

double overall(double rouge_l, double iou, double best_rouge_l, double best_iou) {
  require(best_rouge_l > 0.0 && best_iou > 0.0, ErrorKind::InvalidArgument,
          "overall evaluation needs positive best ROUGE-L and IoU");
  return 0.5 * iou / best_iou + 0.5 * rouge_l / best_rouge_l;
}

}  // namespace xmsmo
