#ifndef XMSMO_SUMMARIZE_HPP
#define XMSMO_SUMMARIZE_HPP

#include "xmsmo/corpus.hpp"
#include "xmsmo/objective.hpp"
#include "xmsmo/params.hpp"

#include <optional>
#include <string>
#include <vector>

namespace xmsmo {

enum class Engine { Neural, Greedy, Beam, Exhaustive };

Engine parse_engine(const std::string& name);
const char* to_string(Engine engine);

struct SummaryConfig {
  Index k = 12;
  Engine engine = Engine::Beam;
  Index beam_width = 4;
  LossWeights weights;
  ColorOptions colors;
  SolverConfig solver;
  /// Alternating s*/f* refinement rounds after the first pass.
  int refinement_rounds = 1;
  /// Largest C(U, k) * T the exhaustive oracle will enumerate.
  double exhaustive_cap = 1e6;
};

struct ExtremeSummary {
  Index frame_index = 0;
  std::vector<Index> word_indices;  // strictly increasing, document order
  std::string sentence_text;
  LossBreakdown losses;
};

/// Loss-minimising search. Greedy is the width-1 beam. Each pass grows word
/// subsets one index at a time scored by l_d * L_document + l_f * L_fluency
/// (plus l_c * L_cross-modal against the current frame during refinement),
/// then pairs every surviving k-subset with its best frame under the full
/// quartet loss.
ExtremeSummary summarize_search(const QuartetObjective& objective, const SummaryConfig& config);

/// Global minimum over all k-subsets x frames; ties go to the
/// lexicographically smallest (word_indices, frame_index).
ExtremeSummary exhaustive_oracle(const QuartetObjective& objective, const SummaryConfig& config);

/// Encode -> fuse -> score -> select; losses evaluated for the selection.
ExtremeSummary summarize_neural(const QuartetObjective& objective, const VideoDocPair& pair,
                                const PairEmbeddings& embeddings, const ModelParams& params,
                                const SummaryConfig& config);

struct NeuralScores {
  Eigen::VectorXd frames;
  Eigen::VectorXd words;
};

NeuralScores neural_scores(const VideoDocPair& pair, const PairEmbeddings& embeddings,
                           const ModelParams& params);

/// Dispatches on config.engine; `params` is required for the neural engine.
ExtremeSummary summarize(const QuartetObjective& objective, const VideoDocPair& pair,
                         const PairEmbeddings& embeddings, const SummaryConfig& config,
                         const ModelParams* params = nullptr);

/// Recomputes every loss term of a finished summary from scratch.
LossBreakdown recompute_losses(const QuartetObjective& objective, const ExtremeSummary& summary,
                               const LossWeights& weights);

}  // namespace xmsmo

#endif  // XMSMO_SUMMARIZE_HPP
