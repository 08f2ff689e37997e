#ifndef XMSMO_HIER_ENCODE_HPP
#define XMSMO_HIER_ENCODE_HPP

#include "xmsmo/corpus.hpp"
#include "xmsmo/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <functional>
#include <vector>

namespace xmsmo {

/// Rank weights of a generalized pooling operator. An empty weight vector
/// means uniform pooling (the arithmetic mean).
template <typename Scalar>
struct PoolParamsT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;

  bool uniform() const { return weights.size() == 0; }
  static PoolParamsT mean() { return {}; }
};
using PoolParams = PoolParamsT<double>;

/// Linear resampling of rank weights to `k` slots. The result is rescaled so
/// it keeps the total mass of the stored weights.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> resample_rank_weights(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weights, Eigen::Index k) {
  const Eigen::Index length = weights.size();
  if (length == k) return weights;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Scalar t = k == 1 ? Scalar(0) : Scalar(i) * Scalar(length - 1) / Scalar(k - 1);
    const Eigen::Index lo = std::min<Eigen::Index>(Eigen::Index(t), length - 1);
    const Eigen::Index hi = std::min<Eigen::Index>(lo + 1, length - 1);
    const Scalar frac = t - Scalar(lo);
    out(i) = (Scalar(1) - frac) * weights(lo) + frac * weights(hi);
  }
  const Scalar stored = weights.sum();
  const Scalar sampled = out.sum();
  if (sampled != Scalar(0)) out *= stored / sampled;
  return out;
}

/// Generalized pooling over the rows of `vectors` (k x d): per dimension, the
/// values are sorted in descending order and combined with rank weights.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> gpo_pool(
    const Eigen::MatrixBase<Derived>& vectors,
    const PoolParamsT<typename Derived::Scalar>& params) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index k = vectors.rows();
  require(k >= 1, ErrorKind::EmptyInput, "gpo_pool needs at least one vector");
  if (params.uniform()) return vectors.colwise().mean().transpose();

  const auto weights = resample_rank_weights<Scalar>(params.weights, k);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(vectors.cols());
  std::vector<Scalar> column(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < k; ++i) column[i] = vectors(i, j);
    std::sort(column.begin(), column.end(), std::greater<Scalar>());
    Scalar acc(0);
    for (Eigen::Index i = 0; i < k; ++i) acc += weights(i) * column[i];
    out(j) = acc;
  }
  return out;
}

template <typename Scalar>
struct HierEncodingT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix scene_embs;     // T' x d
  Vector video_emb;      // d
  Matrix sentence_embs;  // U' x d
  Vector doc_emb;        // d
};
using HierEncoding = HierEncodingT<double>;

template <typename Scalar>
struct LevelEncoding {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> parts;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> whole;
};

/// Two-level pooling: items -> spans -> whole. Shared by both modalities.
template <typename Derived>
LevelEncoding<typename Derived::Scalar> encode_levels(
    const Eigen::MatrixBase<Derived>& items, const std::vector<Span>& spans,
    const PoolParamsT<typename Derived::Scalar>& part_params,
    const PoolParamsT<typename Derived::Scalar>& whole_params) {
  require(!spans.empty(), ErrorKind::EmptyInput, "encoding needs at least one span");
  LevelEncoding<typename Derived::Scalar> out;
  out.parts.resize(Eigen::Index(spans.size()), items.cols());
  for (std::size_t j = 0; j < spans.size(); ++j) {
    const Span& span = spans[j];
    require(span.start >= 0 && span.start <= span.end && span.end < items.rows(),
            ErrorKind::InvalidArgument,
            "span [" + std::to_string(span.start) + ", " + std::to_string(span.end) +
                "] out of range for " + std::to_string(items.rows()) + " items");
    out.parts.row(Eigen::Index(j)) =
        gpo_pool(items.middleRows(span.start, span.length()), part_params).transpose();
  }
  out.whole = gpo_pool(out.parts, whole_params);
  return out;
}

template <typename Derived>
LevelEncoding<typename Derived::Scalar> encode_video(
    const Eigen::MatrixBase<Derived>& frame_embs, const std::vector<SceneSpan>& scenes,
    const PoolParamsT<typename Derived::Scalar>& scene_params,
    const PoolParamsT<typename Derived::Scalar>& video_params) {
  return encode_levels(frame_embs, scenes, scene_params, video_params);
}

template <typename Derived>
LevelEncoding<typename Derived::Scalar> encode_document(
    const Eigen::MatrixBase<Derived>& word_embs, const std::vector<SentenceSpan>& sentences,
    const PoolParamsT<typename Derived::Scalar>& sentence_params,
    const PoolParamsT<typename Derived::Scalar>& document_params) {
  return encode_levels(word_embs, sentences, sentence_params, document_params);
}

}  // namespace xmsmo

#endif  // XMSMO_HIER_ENCODE_HPP
