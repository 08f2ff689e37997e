#ifndef XMSMO_DECODE_HPP
#define XMSMO_DECODE_HPP

#include "xmsmo/corpus.hpp"
#include "xmsmo/error.hpp"
#include "xmsmo/fusion.hpp"
#include "xmsmo/hier_encode.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace xmsmo {

/// One GRU direction, PyTorch gate convention:
///   z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
///   n = tanh(Wn x + r * (Un h) + bn), h' = (1 - z) * n + z * h.
template <typename Scalar>
struct GruCellT {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix w_update, w_reset, w_candidate;  // h x in
  Matrix u_update, u_reset, u_candidate;  // h x h
  Vector b_update, b_reset, b_candidate;  // h

  Eigen::Index hidden() const { return u_update.rows(); }
  Eigen::Index input() const { return w_update.cols(); }

  static GruCellT zeros(Eigen::Index in, Eigen::Index h) {
    return {Matrix::Zero(h, in), Matrix::Zero(h, in), Matrix::Zero(h, in),
            Matrix::Zero(h, h),  Matrix::Zero(h, h),  Matrix::Zero(h, h),
            Vector::Zero(h),     Vector::Zero(h),     Vector::Zero(h)};
  }

  bool consistent() const {
    const Eigen::Index h = hidden(), in = input();
    auto shape = [](const Matrix& m, Eigen::Index r, Eigen::Index c) {
      return m.rows() == r && m.cols() == c;
    };
    return shape(w_update, h, in) && shape(w_reset, h, in) && shape(w_candidate, h, in) &&
           shape(u_update, h, h) && shape(u_reset, h, h) && shape(u_candidate, h, h) &&
           b_update.size() == h && b_reset.size() == h && b_candidate.size() == h;
  }

  template <typename DerivedX>
  Vector step(const Eigen::MatrixBase<DerivedX>& x, const Vector& state) const {
    auto sigmoid = [](Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); };
    const Vector z = (w_update * x + u_update * state + b_update).unaryExpr(sigmoid);
    const Vector r = (w_reset * x + u_reset * state + b_reset).unaryExpr(sigmoid);
    const Vector n =
        (w_candidate * x + r.cwiseProduct(u_candidate * state) + b_candidate).array().tanh().matrix();
    return (Vector::Ones(state.size()) - z).cwiseProduct(n) + z.cwiseProduct(state);
  }
};

/// Bi-directional GRU whose initial state in both directions is
/// tanh(G * guidance).
template <typename Scalar>
struct GruParamsT {
  GruCellT<Scalar> forward;
  GruCellT<Scalar> backward;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> guidance;  // h x g

  Eigen::Index hidden() const { return forward.hidden(); }

  static GruParamsT zeros(Eigen::Index in, Eigen::Index h, Eigen::Index guidance_dim) {
    return {GruCellT<Scalar>::zeros(in, h), GruCellT<Scalar>::zeros(in, h),
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(h, guidance_dim)};
  }
};
using GruParams = GruParamsT<double>;

/// Returns N x 2h: row t is [forward_t || backward_t].
template <typename DerivedX, typename DerivedG>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, Eigen::Dynamic> bigru_forward(
    const Eigen::MatrixBase<DerivedX>& inputs, const Eigen::MatrixBase<DerivedG>& guidance,
    const GruParamsT<typename DerivedX::Scalar>& params) {
  using Scalar = typename DerivedX::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = inputs.rows();
  const Eigen::Index h = params.hidden();
  require(n >= 1, ErrorKind::EmptyInput, "bigru_forward needs at least one input");
  require(params.forward.consistent() && params.backward.consistent() &&
              params.backward.hidden() == h && params.backward.input() == params.forward.input(),
          ErrorKind::InvalidArgument, "inconsistent GRU parameter shapes");
  require(inputs.cols() == params.forward.input(), ErrorKind::InvalidArgument,
          "GRU input width " + std::to_string(inputs.cols()) + " != " +
              std::to_string(params.forward.input()));
  require(params.guidance.rows() == h && params.guidance.cols() == guidance.size(),
          ErrorKind::InvalidArgument, "GRU guidance projection shape mismatch");

  const Vector initial = (params.guidance * guidance).array().tanh().matrix();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(n, 2 * h);
  Vector state = initial;
  for (Eigen::Index t = 0; t < n; ++t) {
    state = params.forward.step(inputs.row(t).transpose(), state);
    out.row(t).head(h) = state.transpose();
  }
  state = initial;
  for (Eigen::Index t = n - 1; t >= 0; --t) {
    state = params.backward.step(inputs.row(t).transpose(), state);
    out.row(t).tail(h) = state.transpose();
  }
  return out;
}

template <typename Scalar>
struct LinearParamsT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weight;
  Scalar bias = Scalar(0);
};

/// Three-stage guided decoder for one modality plus the item-wise linear
/// scorer. The scorer reads [local-stage latent || global-stage latent].
template <typename Scalar>
struct DecoderParamsT {
  GruParamsT<Scalar> local;   // per scene / per sentence
  GruParamsT<Scalar> level;   // whole video / whole document
  GruParamsT<Scalar> global;  // over level latents, cross-modal guidance
  LinearParamsT<Scalar> linear;

  static DecoderParamsT zeros(Eigen::Index dim, Eigen::Index h) {
    return {GruParamsT<Scalar>::zeros(dim, h, dim), GruParamsT<Scalar>::zeros(dim, h, dim),
            GruParamsT<Scalar>::zeros(2 * h, h, dim),
            {Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(4 * h), Scalar(0)}};
  }
};
using DecoderParams = DecoderParamsT<double>;

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> softmax(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& logits) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

/// Pre-softmax item logits of the three-stage decoder.
///   items: N x d, spans: local groups, local_guidance: one row per span,
///   level_guidance: unimodal whole embedding, global_guidance: fused context.
template <typename DerivedI, typename DerivedL>
Eigen::Matrix<typename DerivedI::Scalar, Eigen::Dynamic, 1> decode_logits(
    const Eigen::MatrixBase<DerivedI>& items, const std::vector<Span>& spans,
    const Eigen::MatrixBase<DerivedL>& local_guidance,
    const Eigen::Matrix<typename DerivedI::Scalar, Eigen::Dynamic, 1>& level_guidance,
    const Eigen::Matrix<typename DerivedI::Scalar, Eigen::Dynamic, 1>& global_guidance,
    const DecoderParamsT<typename DerivedI::Scalar>& params) {
  using Scalar = typename DerivedI::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(Eigen::Index(spans.size()) == local_guidance.rows(), ErrorKind::InvalidArgument,
          "one local guidance row per span required");
  validate_partition(spans, items.rows(), "decoder");
  const Eigen::Index h = params.local.hidden();
  require(params.level.hidden() == h && params.global.hidden() == h &&
              params.linear.weight.size() == 4 * h,
          ErrorKind::InvalidArgument, "decoder hidden sizes disagree");

  Matrix local(items.rows(), 2 * h);
  for (std::size_t j = 0; j < spans.size(); ++j) {
    local.middleRows(spans[j].start, spans[j].length()) =
        bigru_forward(items.middleRows(spans[j].start, spans[j].length()),
                      local_guidance.row(Eigen::Index(j)).transpose(), params.local);
  }
  const Matrix level = bigru_forward(items, level_guidance, params.level);
  const Matrix global = bigru_forward(level, global_guidance, params.global);
  return local * params.linear.weight.head(2 * h) + global * params.linear.weight.tail(2 * h) +
         Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Constant(items.rows(), params.linear.bias);
}

/// Cover-frame distribution over T frames.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> score_frames(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& frame_embs,
    const std::vector<SceneSpan>& scenes, const HierEncodingT<Scalar>& hier,
    const FusedContextT<Scalar>& fused, const DecoderParamsT<Scalar>& params) {
  return softmax<Scalar>(decode_logits(frame_embs, scenes, fused.fused_scenes, hier.video_emb,
                                       fused.fused_global, params));
}

/// Word-selection distribution over U words.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> score_words(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& word_embs,
    const std::vector<SentenceSpan>& sentences, const HierEncodingT<Scalar>& hier,
    const FusedContextT<Scalar>& fused, const DecoderParamsT<Scalar>& params) {
  return softmax<Scalar>(decode_logits(word_embs, sentences, fused.fused_sentences, hier.doc_emb,
                                       fused.fused_global, params));
}

/// argmax, lowest index on ties.
template <typename Derived>
Eigen::Index select_frame(const Eigen::MatrixBase<Derived>& scores) {
  require(scores.size() >= 1, ErrorKind::EmptyInput, "select_frame on empty scores");
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i) {
    if (scores(i) > scores(best)) best = i;
  }
  return best;
}

/// The k highest-scoring indices (lowest index on ties), in document order.
template <typename Derived>
std::vector<Eigen::Index> select_words(const Eigen::MatrixBase<Derived>& scores, Eigen::Index k) {
  require(k >= 1 && k <= scores.size(), ErrorKind::InvalidArgument,
          "select_words needs 1 <= k <= " + std::to_string(scores.size()) + ", got k = " +
              std::to_string(k));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });
  order.resize(static_cast<std::size_t>(k));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace xmsmo

#endif  // XMSMO_DECODE_HPP
