#ifndef XMSMO_PARAMS_HPP
#define XMSMO_PARAMS_HPP

#include "xmsmo/decode.hpp"
#include "xmsmo/embed.hpp"
#include "xmsmo/fusion.hpp"
#include "xmsmo/hier_encode.hpp"

#include <filesystem>

namespace xmsmo {

/// Every loadable weight of the encode/fuse/decode path.
///
/// On disk this is an XMEB matrix, one row per reserved id. Each row holds
/// [count, payload..., zero padding], where count is the payload length:
///
///   model.dims            d, h
///   gpo.{scene,video,sentence,document}   rank weights (count 0 = mean)
///   gat.{scene,sentence,global}           W (d*d, row-major), a (2d), slope
///   gru.{scene,video,video.global,sentence,document,document.global}
///       forward then backward cell, each Wz Wr Wn (h*in) Uz Ur Un (h*h)
///       bz br bn (h); then guidance projection G (h*d). in = d for the
///       local/level decoders and 2h for the *.global ones.
///   linear.{frame,word}   w (4h), bias
struct ModelParams {
  Eigen::Index dim = 0;
  Eigen::Index hidden = 0;

  PoolParams gpo_scene, gpo_video, gpo_sentence, gpo_document;
  GatParams gat_scene, gat_sentence, gat_global;
  DecoderParams visual;
  DecoderParams textual;

  /// Mean pooling, identity attention, zero GRUs and scorers.
  static ModelParams defaults(Eigen::Index dim, Eigen::Index hidden);
  /// Every stored number zero: mean pooling, zero attention projections.
  static ModelParams zeros(Eigen::Index dim, Eigen::Index hidden);
};

ModelParams params_from_matrix(const EmbeddingMatrix& matrix);
EmbeddingMatrix params_to_matrix(const ModelParams& params);

ModelParams load_model_params(const std::filesystem::path& path);
void save_model_params(const ModelParams& params, const std::filesystem::path& path);

}  // namespace xmsmo

#endif  // XMSMO_PARAMS_HPP
