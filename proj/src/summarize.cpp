#include "xmsmo/summarize.hpp"

#include "xmsmo/decode.hpp"
#include "xmsmo/error.hpp"
#include "xmsmo/fusion.hpp"
#include "xmsmo/hier_encode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace xmsmo {

Engine parse_engine(const std::string& name) {
  if (name == "neural") return Engine::Neural;
  if (name == "greedy") return Engine::Greedy;
  if (name == "beam") return Engine::Beam;
  if (name == "exhaustive") return Engine::Exhaustive;
  fail(ErrorKind::Config, "unknown engine '" + name + "' (neural, greedy, beam, exhaustive)");
}

const char* to_string(Engine engine) {
  switch (engine) {
    case Engine::Neural: return "neural";
    case Engine::Greedy: return "greedy";
    case Engine::Beam: return "beam";
    case Engine::Exhaustive: return "exhaustive";
  }
  return "?";
}

namespace {

using Subset = std::vector<Index>;

void check_config(const QuartetObjective& objective, const SummaryConfig& config) {
  require(config.k >= 1, ErrorKind::InvalidArgument, "summary length k must be >= 1");
  require(config.k <= objective.word_count(), ErrorKind::InvalidArgument,
          "summary length k = " + std::to_string(config.k) + " exceeds document length " +
              std::to_string(objective.word_count()));
  require(config.beam_width >= 1, ErrorKind::InvalidArgument, "beam width must be >= 1");
  quartet_loss({}, config.weights);  // validates the weights
}

std::string join(const TokenList& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

ExtremeSummary finish(const QuartetObjective& objective, Index frame, Subset words, LossBreakdown losses) {
  ExtremeSummary s;
  s.frame_index = frame;
  s.sentence_text = join(objective.tokens(words));
  s.word_indices = std::move(words);
  s.losses = losses;
  return s;
}

// Shared evaluation so every engine reports bit-identical totals for the
// same (subset, frame).
class Evaluator {
 public:
  Evaluator(const QuartetObjective& objective, const LossWeights& weights)
      : objective_(objective), weights_(weights),
        video_(std::size_t(objective.frame_count()), std::numeric_limits<double>::quiet_NaN()) {}

  double video(Index frame) {
    double& v = video_[std::size_t(frame)];
    if (std::isnan(v)) v = objective_.video_loss(frame);
    return v;
  }

  // Text-only terms, memoised per subset.
  std::pair<double, double> text(const Subset& s) {
    auto it = text_.find(s);
    if (it == text_.end()) {
      it = text_.emplace(s, std::make_pair(objective_.document_loss(s), objective_.fluency_loss(s))).first;
    }
    return it->second;
  }

  LossBreakdown full(Index frame, const Subset& s) {
    auto [document, fluency] = text(s);
    LossBreakdown parts;
    parts.document = document;
    parts.video = video(frame);
    parts.fluency = fluency;
    parts.cross_modal = objective_.cross_modal_loss(frame, s);
    return quartet_loss(parts, weights_);
  }

  // Growth score of a partial subset, optionally coupled to a fixed frame.
  double growth(const Subset& s, std::optional<Index> frame) {
    auto [document, fluency] = text(s);
    double score = weights_.document * document + weights_.fluency * fluency;
    if (frame) score += weights_.cross_modal * objective_.cross_modal_loss(*frame, s);
    return score;
  }

 private:
  const QuartetObjective& objective_;
  LossWeights weights_;
  std::vector<double> video_;
  std::map<Subset, std::pair<double, double>> text_;
};

struct Scored {
  double score;
  Subset subset;
};

bool better(const Scored& a, const Scored& b) {
  return std::tie(a.score, a.subset) < std::tie(b.score, b.subset);
}

std::vector<Subset> grow_subsets(Evaluator& eval, Index word_count, Index k, Index width,
                                 std::optional<Index> frame) {
  std::vector<Subset> beam{Subset{}};
  for (Index size = 1; size <= k; ++size) {
    std::set<Subset> children;
    for (const Subset& parent : beam) {
      for (Index w = 0; w < word_count; ++w) {
        if (std::binary_search(parent.begin(), parent.end(), w)) continue;
        Subset child = parent;
        child.insert(std::upper_bound(child.begin(), child.end(), w), w);
        children.insert(std::move(child));
      }
    }
    std::vector<Scored> scored;
    scored.reserve(children.size());
    for (const Subset& child : children) scored.push_back({eval.growth(child, frame), child});
    const std::size_t keep = std::min<std::size_t>(std::size_t(width), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(keep), scored.end(), better);
    beam.clear();
    for (std::size_t i = 0; i < keep; ++i) beam.push_back(std::move(scored[i].subset));
  }
  return beam;
}

struct Candidate {
  LossBreakdown losses;
  Subset subset;
  Index frame = 0;
};

bool better(const Candidate& a, const Candidate& b) {
  return std::tie(a.losses.total, a.subset, a.frame) < std::tie(b.losses.total, b.subset, b.frame);
}

Candidate best_pairing(Evaluator& eval, const std::vector<Subset>& subsets, Index frame_count) {
  std::optional<Candidate> best;
  for (const Subset& s : subsets) {
    for (Index f = 0; f < frame_count; ++f) {
      Candidate c{eval.full(f, s), s, f};
      if (!best || better(c, *best)) best = std::move(c);
    }
  }
  return *best;
}

double binomial(Index n, Index k) {
  double out = 1.0;
  for (Index i = 1; i <= k; ++i) out = out * double(n - k + i) / double(i);
  return std::round(out);
}

}  // namespace

ExtremeSummary summarize_search(const QuartetObjective& objective, const SummaryConfig& config) {
  check_config(objective, config);
  const Index width = config.engine == Engine::Greedy ? 1 : config.beam_width;
  Evaluator eval(objective, config.weights);

  Candidate best = best_pairing(
      eval, grow_subsets(eval, objective.word_count(), config.k, width, std::nullopt),
      objective.frame_count());
  for (int round = 0; round < config.refinement_rounds; ++round) {
    Candidate next = best_pairing(
        eval, grow_subsets(eval, objective.word_count(), config.k, width, best.frame),
        objective.frame_count());
    if (!better(next, best)) break;
    best = std::move(next);
  }
  return finish(objective, best.frame, std::move(best.subset), best.losses);
}

ExtremeSummary exhaustive_oracle(const QuartetObjective& objective, const SummaryConfig& config) {
  check_config(objective, config);
  const Index u = objective.word_count(), k = config.k, t = objective.frame_count();
  const double work = binomial(u, k) * double(t);
  require(work <= config.exhaustive_cap, ErrorKind::Capacity,
          "exhaustive search over C(" + std::to_string(u) + ", " + std::to_string(k) + ") x " +
              std::to_string(t) + " = " + std::to_string(std::llround(work)) +
              " candidates exceeds the cap of " + std::to_string(std::llround(config.exhaustive_cap)));

  Evaluator eval(objective, config.weights);
  std::optional<Candidate> best;
  Subset subset(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) subset[std::size_t(i)] = i;
  for (;;) {
    for (Index f = 0; f < t; ++f) {
      Candidate c{eval.full(f, subset), subset, f};
      if (!best || better(c, *best)) best = std::move(c);
    }
    // Next k-subset in lexicographic order.
    Index pos = k - 1;
    while (pos >= 0 && subset[std::size_t(pos)] == u - k + pos) --pos;
    if (pos < 0) break;
    ++subset[std::size_t(pos)];
    for (Index j = pos + 1; j < k; ++j) subset[std::size_t(j)] = subset[std::size_t(j - 1)] + 1;
  }
  return finish(objective, best->frame, std::move(best->subset), best->losses);
}

NeuralScores neural_scores(const VideoDocPair& pair, const PairEmbeddings& embeddings,
                           const ModelParams& params) {
  require(embeddings.frames.cols() == params.dim && embeddings.words.cols() == params.dim,
          ErrorKind::Config,
          "parameter dim " + std::to_string(params.dim) + " does not match embedding dim " +
              std::to_string(embeddings.frames.cols()));
  const auto video = encode_video(embeddings.frames, pair.scenes, params.gpo_scene, params.gpo_video);
  const auto document =
      encode_document(embeddings.words, pair.sentences, params.gpo_sentence, params.gpo_document);
  HierEncoding hier{video.parts, video.whole, document.parts, document.whole};

  FusedContext fused;
  std::tie(fused.fused_scenes, fused.fused_sentences) =
      fuse_local(hier.scene_embs, hier.sentence_embs, params.gat_scene, params.gat_sentence);
  fused.fused_global = fuse_global(hier.video_emb, hier.doc_emb, params.gat_global);

  NeuralScores out;
  out.frames = score_frames<double>(embeddings.frames, pair.scenes, hier, fused, params.visual);
  out.words = score_words<double>(embeddings.words, pair.sentences, hier, fused, params.textual);
  return out;
}

ExtremeSummary summarize_neural(const QuartetObjective& objective, const VideoDocPair& pair,
                                const PairEmbeddings& embeddings, const ModelParams& params,
                                const SummaryConfig& config) {
  check_config(objective, config);
  const NeuralScores scores = neural_scores(pair, embeddings, params);
  const Index frame = select_frame(scores.frames);
  Subset words = select_words(scores.words, config.k);
  const LossBreakdown losses = quartet_loss(objective.parts(frame, words), config.weights);
  return finish(objective, frame, std::move(words), losses);
}

ExtremeSummary summarize(const QuartetObjective& objective, const VideoDocPair& pair,
                         const PairEmbeddings& embeddings, const SummaryConfig& config,
                         const ModelParams* params) {
  switch (config.engine) {
    case Engine::Neural:
      require(params != nullptr, ErrorKind::Config, "the neural engine needs model parameters");
      return summarize_neural(objective, pair, embeddings, *params, config);
    case Engine::Exhaustive:
      return exhaustive_oracle(objective, config);
    case Engine::Greedy:
    case Engine::Beam:
      return summarize_search(objective, config);
  }
  fail(ErrorKind::Config, "unhandled engine");
}

LossBreakdown recompute_losses(const QuartetObjective& objective, const ExtremeSummary& summary,
                               const LossWeights& weights) {
  return quartet_loss(objective.parts(summary.frame_index, summary.word_indices), weights);
}

}  // namespace xmsmo
