#ifndef XMSMO_FUSION_HPP
#define XMSMO_FUSION_HPP

#include "xmsmo/error.hpp"

#include <Eigen/Dense>

#include <utility>

namespace xmsmo {

/// Single-head graph attention: projection W (d x d), attention vector a
/// (2d) over [W q || W n], LeakyReLU slope.
template <typename Scalar>
struct GatParamsT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weight;
  Vector attention;
  Scalar leaky_slope = Scalar(0.2);

  static GatParamsT identity(Eigen::Index dim) {
    return {Matrix::Identity(dim, dim), Vector::Zero(2 * dim), Scalar(0.2)};
  }
};
using GatParams = GatParamsT<double>;

template <typename Scalar>
struct AttentionResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> output;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> alpha;
};

/// Attends `query` over the rows of `neighbors` (k x d).
/// e_j = LeakyReLU(a^T [W q || W n_j]), alpha = softmax(e), out = sum_j alpha_j W n_j.
template <typename DerivedQ, typename DerivedN>
AttentionResult<typename DerivedQ::Scalar> gat_attend_weights(
    const Eigen::MatrixBase<DerivedQ>& query, const Eigen::MatrixBase<DerivedN>& neighbors,
    const GatParamsT<typename DerivedQ::Scalar>& params) {
  using Scalar = typename DerivedQ::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index k = neighbors.rows();
  const Eigen::Index d = query.size();
  require(k >= 1, ErrorKind::EmptyInput, "gat_attend needs at least one neighbor");
  require(neighbors.cols() == d && params.weight.rows() == d && params.weight.cols() == d &&
              params.attention.size() == 2 * d,
          ErrorKind::InvalidArgument, "gat_attend shape mismatch");

  const Vector projected_query = params.weight * query;
  // Rows of W n_j.
  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> projected =
      neighbors * params.weight.transpose();
  const Scalar query_score = params.attention.head(d).dot(projected_query);
  Vector scores = (projected * params.attention.tail(d)).array() + query_score;
  scores = scores.unaryExpr([&](Scalar e) { return e > Scalar(0) ? e : params.leaky_slope * e; });

  AttentionResult<Scalar> result;
  result.alpha = (scores.array() - scores.maxCoeff()).exp();
  result.alpha /= result.alpha.sum();
  result.output = projected.transpose() * result.alpha;
  return result;
}

template <typename DerivedQ, typename DerivedN>
Eigen::Matrix<typename DerivedQ::Scalar, Eigen::Dynamic, 1> gat_attend(
    const Eigen::MatrixBase<DerivedQ>& query, const Eigen::MatrixBase<DerivedN>& neighbors,
    const GatParamsT<typename DerivedQ::Scalar>& params) {
  return gat_attend_weights(query, neighbors, params).output;
}

/// Update of `node` in the two-node graph {node, other} (self loop included).
template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, 1> attend_pair(
    const Eigen::MatrixBase<DerivedA>& node, const Eigen::MatrixBase<DerivedB>& other,
    const GatParamsT<typename DerivedA::Scalar>& params) {
  Eigen::Matrix<typename DerivedA::Scalar, 2, Eigen::Dynamic> graph(2, node.size());
  graph.row(0) = node.transpose();
  graph.row(1) = other.transpose();
  return gat_attend(node, graph, params);
}

template <typename Scalar>
struct FusedContextT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fused_scenes;     // T' x d
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> fused_sentences;  // U' x d
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fused_global;                  // d
};
using FusedContext = FusedContextT<double>;

/// Local fusion: each scene attends to every sentence separately and the
/// U' updates are averaged; sentences mirror this over scenes.
template <typename DerivedS, typename DerivedT>
std::pair<Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic>,
          Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic>>
fuse_local(const Eigen::MatrixBase<DerivedS>& scene_embs,
           const Eigen::MatrixBase<DerivedT>& sentence_embs,
           const GatParamsT<typename DerivedS::Scalar>& scene_params,
           const GatParamsT<typename DerivedS::Scalar>& sentence_params) {
  using Matrix = Eigen::Matrix<typename DerivedS::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(scene_embs.rows() >= 1 && sentence_embs.rows() >= 1, ErrorKind::EmptyInput,
          "local fusion needs at least one scene and one sentence");
  require(scene_embs.cols() == sentence_embs.cols(), ErrorKind::InvalidArgument,
          "scene and sentence embeddings differ in width");

  auto fuse_side = [](const auto& nodes, const auto& others, const auto& params) {
    Matrix out = Matrix::Zero(nodes.rows(), nodes.cols());
    for (Eigen::Index j = 0; j < nodes.rows(); ++j) {
      for (Eigen::Index n = 0; n < others.rows(); ++n) {
        out.row(j) += attend_pair(nodes.row(j).transpose(), others.row(n).transpose(), params)
                          .transpose();
      }
      out.row(j) /= typename DerivedS::Scalar(others.rows());
    }
    return out;
  };
  return {fuse_side(scene_embs, sentence_embs, scene_params),
          fuse_side(sentence_embs, scene_embs, sentence_params)};
}

/// Global fusion on the two-node graph {video, document}: the mean of both
/// attended node updates.
template <typename DerivedV, typename DerivedD>
Eigen::Matrix<typename DerivedV::Scalar, Eigen::Dynamic, 1> fuse_global(
    const Eigen::MatrixBase<DerivedV>& video_emb, const Eigen::MatrixBase<DerivedD>& doc_emb,
    const GatParamsT<typename DerivedV::Scalar>& params) {
  require(video_emb.allFinite() && doc_emb.allFinite(), ErrorKind::InvalidArgument,
          "global fusion inputs must be finite");
  using Scalar = typename DerivedV::Scalar;
  return Scalar(0.5) * (attend_pair(video_emb, doc_emb, params) +
                        attend_pair(doc_emb, video_emb, params));
}

}  // namespace xmsmo

#endif  // XMSMO_FUSION_HPP
