#include "xmsmo/objective.hpp"

#include "xmsmo/error.hpp"
#include "xmsmo/hier_encode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

namespace xmsmo {

SemanticDistribution tf_distribution(const TokenList& tokens, const Dictionary& in_dictionary) {
  SemanticDistribution out;
  std::unordered_map<std::string, Index> slot;
  std::vector<double> counts;
  for (const auto& token : tokens) {
    if (in_dictionary && !in_dictionary(token)) continue;
    auto [it, inserted] = slot.emplace(token, Index(out.support.size()));
    if (inserted) {
      out.support.push_back(token);
      counts.push_back(0.0);
    }
    counts[std::size_t(it->second)] += 1.0;
  }
  require(!counts.empty(), ErrorKind::EmptyInput, "no in-dictionary tokens for a TF distribution");
  out.weights = Eigen::Map<Eigen::VectorXd>(counts.data(), Index(counts.size()));
  out.weights /= out.weights.sum();
  return out;
}

namespace {

Eigen::MatrixXd support_embeddings(const TokenList& support, const TokenEmbeddings& embeddings) {
  Eigen::MatrixXd out(Index(support.size()), embeddings.dim());
  for (std::size_t i = 0; i < support.size(); ++i) {
    out.row(Index(i)) = embeddings.lookup(support[i]).value().transpose();
  }
  return out;
}

}  // namespace

double document_coverage(const TokenList& document, const TokenList& summary,
                         const TokenEmbeddings& embeddings, const SolverConfig& solver) {
  const Dictionary known = [&](const std::string& t) { return embeddings.lookup(t).has_value(); };
  const SemanticDistribution doc = tf_distribution(document, known);
  const SemanticDistribution sum = tf_distribution(summary, known);
  const CostMatrix cost =
      cosine_cost(support_embeddings(doc.support, embeddings), support_embeddings(sum.support, embeddings));
  return solve_ot(doc.weights, sum.weights, cost, solver).objective;
}

namespace {

double uniform01(std::mt19937_64& engine) { return double(engine() >> 11) * 0x1.0p-53; }

Index nearest(const Eigen::Matrix<double, Eigen::Dynamic, 3>& centers, const Eigen::RowVector3d& p,
              double* distance2 = nullptr) {
  Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (distance2) *distance2 = best_d;
  return best;
}

}  // namespace

ColorSignature color_signature(const RgbImage& frame, const ColorOptions& options) {
  require(options.clusters >= 1, ErrorKind::InvalidArgument, "colour clusters must be >= 1");
  require(!frame.empty(), ErrorKind::InvalidArgument, "cannot build a signature of an empty frame");

  const Index total = frame.size();
  const Index stride = std::max<Index>(1, (total + options.sample_limit - 1) / std::max<Index>(1, options.sample_limit));
  Eigen::Matrix<double, Eigen::Dynamic, 3> sample((total + stride - 1) / stride, 3);
  for (Index i = 0, s = 0; i < total; i += stride, ++s) sample.row(s) = frame.pixels.row(i).cast<double>();
  const Index n = sample.rows();

  // k-means++ seeding; stops early once every sample coincides with a center.
  std::mt19937_64 engine(options.seed);
  Eigen::Matrix<double, Eigen::Dynamic, 3> centers(1, 3);
  centers.row(0) = sample.row(std::min<Index>(n - 1, Index(uniform01(engine) * double(n))));
  Eigen::VectorXd d2(n);
  while (centers.rows() < options.clusters) {
    for (Index i = 0; i < n; ++i) nearest(centers, sample.row(i), &d2(i));
    const double mass = d2.sum();
    if (mass <= 0.0) break;
    double target = uniform01(engine) * mass;
    Index pick = n - 1;
    for (Index i = 0; i < n; ++i) {
      if (d2(i) <= 0.0) continue;
      target -= d2(i);
      if (target < 0.0) {
        pick = i;
        break;
      }
    }
    while (d2(pick) <= 0.0) --pick;  // only reachable through rounding at the tail
    centers.conservativeResize(centers.rows() + 1, 3);
    centers.row(centers.rows() - 1) = sample.row(pick);
  }

  // Lloyd iterations; an emptied cluster keeps its previous center.
  std::vector<Index> assignment(std::size_t(n), -1);
  for (int iter = 0; iter < options.max_iter; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const Index c = nearest(centers, sample.row(i));
      if (c != assignment[std::size_t(i)]) {
        assignment[std::size_t(i)] = c;
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::Matrix<double, Eigen::Dynamic, 3> sums = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(centers.rows(), 3);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(centers.rows());
    for (Index i = 0; i < n; ++i) {
      sums.row(assignment[std::size_t(i)]) += sample.row(i);
      counts(assignment[std::size_t(i)]) += 1.0;
    }
    for (Index c = 0; c < centers.rows(); ++c) {
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
    }
  }

  Eigen::VectorXd weights = Eigen::VectorXd::Zero(centers.rows());
  for (Index i = 0; i < total; ++i) {
    weights(nearest(centers, frame.pixels.row(i).cast<double>())) += 1.0;
  }

  ColorSignature out;
  out.points.resize(0, 3);
  std::vector<double> kept;
  for (Index c = 0; c < centers.rows(); ++c) {
    if (weights(c) <= 0.0) continue;
    bool merged = false;
    for (Index k = 0; k < out.points.rows(); ++k) {
      if ((out.points.row(k) - centers.row(c)).norm() < 1e-9) {
        kept[std::size_t(k)] += weights(c);
        merged = true;
        break;
      }
    }
    if (merged) continue;
    out.points.conservativeResize(out.points.rows() + 1, 3);
    out.points.row(out.points.rows() - 1) = centers.row(c);
    kept.push_back(weights(c));
  }
  out.weights = Eigen::Map<Eigen::VectorXd>(kept.data(), Index(kept.size())) / double(total);
  return out;
}

RgbImage mean_frame(const std::vector<RgbImage>& frames) {
  require(!frames.empty(), ErrorKind::EmptyInput, "mean_frame needs at least one frame");
  const RgbImage& first = frames.front();
  Eigen::Array<double, Eigen::Dynamic, 3, Eigen::RowMajor> acc =
      Eigen::Array<double, Eigen::Dynamic, 3, Eigen::RowMajor>::Zero(first.size(), 3);
  for (const RgbImage& frame : frames) {
    require(frame.width == first.width && frame.height == first.height, ErrorKind::InvalidArgument,
            "mean_frame: frame resolutions differ");
    acc += frame.pixels.cast<double>();
  }
  RgbImage out(first.width, first.height);
  out.pixels = (acc / double(frames.size())).cast<float>();
  return out;
}

double signature_distance(const ColorSignature& a, const ColorSignature& b, const SolverConfig& solver) {
  return solve_ot(a.weights, b.weights, euclidean_cost(a.points, b.points), solver).objective;
}

double video_coverage(const std::vector<RgbImage>& frames, const RgbImage& cover,
                      const ColorOptions& colors, const SolverConfig& solver) {
  return signature_distance(color_signature(mean_frame(frames), colors), color_signature(cover, colors),
                            solver);
}

double cross_modal(const Eigen::VectorXd& frame_emb, const Eigen::VectorXd& sentence_emb) {
  require(frame_emb.size() == sentence_emb.size(), ErrorKind::InvalidArgument,
          "cross_modal: embedding widths differ");
  const double nf = frame_emb.norm(), ns = sentence_emb.norm();
  require(nf > 0.0 && ns > 0.0, ErrorKind::InvalidArgument, "cross_modal: zero embedding");
  return 1.0 - frame_emb.dot(sentence_emb) / (nf * ns);
}

LossBreakdown quartet_loss(const LossBreakdown& parts, const LossWeights& w) {
  for (double lambda : {w.document, w.video, w.fluency, w.cross_modal}) {
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::InvalidArgument,
            "loss weights must be finite and nonnegative");
  }
  LossBreakdown out = parts;
  out.total = w.document * parts.document + w.video * parts.video + w.fluency * parts.fluency +
              w.cross_modal * parts.cross_modal;
  return out;
}

QuartetObjective::QuartetObjective(const Inputs& inputs)
    : pair_(inputs.pair), embeddings_(inputs.embeddings), lm_(inputs.lm), colors_(inputs.colors),
      solver_(inputs.solver) {
  require(pair_ && embeddings_ && lm_, ErrorKind::InvalidArgument, "objective inputs incomplete");
  require(pair_->frame_count() >= 1 && pair_->word_count() >= 1, ErrorKind::EmptyInput,
          "objective needs frames and words");
  require(embeddings_->frames.rows() == pair_->frame_count() &&
              embeddings_->words.rows() == pair_->word_count(),
          ErrorKind::InvalidArgument, "embedding rows do not match the pair");

  std::unordered_map<std::string, Index> slot;
  TokenList support;
  std::vector<double> counts;
  word_type_.assign(std::size_t(pair_->word_count()), -1);
  for (Index i = 0; i < pair_->word_count(); ++i) {
    const std::string& w = pair_->words[std::size_t(i)];
    auto it = slot.find(w);
    if (it == slot.end()) {
      if (!embeddings_->tokens.lookup(w)) continue;
      it = slot.emplace(w, Index(support.size())).first;
      support.push_back(w);
      counts.push_back(0.0);
    }
    word_type_[std::size_t(i)] = it->second;
    counts[std::size_t(it->second)] += 1.0;
  }
  require(!support.empty(), ErrorKind::EmptyInput, pair_->id + ": no document token has an embedding");
  document_tf_ = Eigen::Map<Eigen::VectorXd>(counts.data(), Index(counts.size()));
  document_tf_ /= document_tf_.sum();
  const Eigen::MatrixXd type_embs = support_embeddings(support, embeddings_->tokens);
  type_cost_ = cosine_cost(type_embs, type_embs);

  mean_signature_ = color_signature(mean_frame(pair_->frames), colors_);
}

void QuartetObjective::check_words(const std::vector<Index>& word_indices) const {
  require(!word_indices.empty(), ErrorKind::EmptyInput, "summary has no words");
  for (std::size_t i = 0; i < word_indices.size(); ++i) {
    require(word_indices[i] >= 0 && word_indices[i] < word_count() &&
                (i == 0 || word_indices[i] > word_indices[i - 1]),
            ErrorKind::InvalidArgument, "word indices must be increasing and in range");
  }
}

TokenList QuartetObjective::tokens(const std::vector<Index>& word_indices) const {
  TokenList out;
  out.reserve(word_indices.size());
  for (Index i : word_indices) out.push_back(pair_->words[std::size_t(i)]);
  return out;
}

double QuartetObjective::document_loss(const std::vector<Index>& word_indices) const {
  check_words(word_indices);
  // Summary support in ascending document-type order.
  std::vector<Index> types;
  for (Index i : word_indices) {
    if (word_type_[std::size_t(i)] >= 0) types.push_back(word_type_[std::size_t(i)]);
  }
  require(!types.empty(), ErrorKind::EmptyInput, "summary has no in-dictionary token");
  std::sort(types.begin(), types.end());
  std::vector<Index> columns;
  std::vector<double> mass;
  for (Index t : types) {
    if (columns.empty() || columns.back() != t) {
      columns.push_back(t);
      mass.push_back(0.0);
    }
    mass.back() += 1.0;
  }
  DiscreteMeasure summary_tf = Eigen::Map<Eigen::VectorXd>(mass.data(), Index(mass.size()));
  summary_tf /= summary_tf.sum();
  CostMatrix cost(type_cost_.rows(), Index(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) cost.col(Index(j)) = type_cost_.col(columns[j]);
  return solve_ot(document_tf_, summary_tf, cost, solver_).objective;
}

double QuartetObjective::fluency_loss(const std::vector<Index>& word_indices) const {
  check_words(word_indices);
  return lm_->score(tokens(word_indices));
}

double QuartetObjective::video_loss(Index frame) const {
  require(frame >= 0 && frame < frame_count(), ErrorKind::InvalidArgument, "frame index out of range");
  std::unique_lock lock(signature_mutex_);
  auto it = frame_signatures_.find(frame);
  if (it == frame_signatures_.end()) {
    lock.unlock();
    ColorSignature signature = color_signature(pair_->frames[std::size_t(frame)], colors_);
    lock.lock();
    it = frame_signatures_.emplace(frame, std::move(signature)).first;
  }
  const ColorSignature& cover = it->second;
  lock.unlock();
  return signature_distance(mean_signature_, cover, solver_);
}

double QuartetObjective::cross_modal_loss(Index frame, const std::vector<Index>& word_indices) const {
  check_words(word_indices);
  require(frame >= 0 && frame < frame_count(), ErrorKind::InvalidArgument, "frame index out of range");
  Eigen::MatrixXd selected(Index(word_indices.size()), embeddings_->words.cols());
  for (std::size_t i = 0; i < word_indices.size(); ++i) {
    selected.row(Index(i)) = embeddings_->words.row(word_indices[i]);
  }
  const Eigen::VectorXd sentence = gpo_pool(selected, PoolParams::mean());
  return cross_modal(embeddings_->frames.row(frame).transpose(), sentence);
}

LossBreakdown QuartetObjective::parts(Index frame, const std::vector<Index>& word_indices) const {
  LossBreakdown out;
  out.document = document_loss(word_indices);
  out.video = video_loss(frame);
  out.fluency = fluency_loss(word_indices);
  out.cross_modal = cross_modal_loss(frame, word_indices);
  return out;
}

}  // namespace xmsmo
