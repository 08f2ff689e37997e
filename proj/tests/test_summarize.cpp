#include "doctest.h"

#include "support.hpp"
#include "xmsmo/error.hpp"
#include "xmsmo/summarize.hpp"

#include <cmath>

using namespace xmsmo;

namespace {

struct Fixture {
  VideoDocPair pair;
  PairEmbeddings embeddings;
  NgramLM lm;
  std::unique_ptr<QuartetObjective> objective;

  Fixture(std::uint64_t seed, std::size_t words, std::size_t frames)
      : pair(testing::synthetic_pair(seed, words, frames)) {
    EmbeddingSource toy;
    toy.dim = 32;
    toy.seed = seed;
    embeddings = load_embeddings(pair, toy);
    lm = NgramLM::train(testing::sentences_of(pair), 3, 0.1);
    objective = std::make_unique<QuartetObjective>(
        QuartetObjective::Inputs{&pair, &embeddings, &lm, {}, {}});
  }
};

void check_summary(const ExtremeSummary& s, const Fixture& f, Index k, const LossWeights& w) {
  CHECK(Index(s.word_indices.size()) == k);
  CHECK(std::is_sorted(s.word_indices.begin(), s.word_indices.end()));
  CHECK(std::adjacent_find(s.word_indices.begin(), s.word_indices.end()) == s.word_indices.end());
  CHECK(s.frame_index >= 0);
  CHECK(s.frame_index < f.pair.frame_count());
  CHECK(std::abs(recompute_losses(*f.objective, s, w).total - s.losses.total) <= 1e-9);
}

}  // namespace

TEST_CASE("engines agree with the oracle on small pairs") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Fixture f(seed, 7, 4);
    SummaryConfig config;
    config.k = 3;
    const ExtremeSummary oracle = exhaustive_oracle(*f.objective, config);
    check_summary(oracle, f, 3, config.weights);

    config.engine = Engine::Beam;
    config.beam_width = 35;  // C(7, 3)
    const ExtremeSummary full = summarize_search(*f.objective, config);
    CHECK(full.losses.total == oracle.losses.total);
    CHECK(full.word_indices == oracle.word_indices);
    CHECK(full.frame_index == oracle.frame_index);

    config.engine = Engine::Greedy;
    const ExtremeSummary greedy = summarize_search(*f.objective, config);
    check_summary(greedy, f, 3, config.weights);
    CHECK(greedy.losses.total >= oracle.losses.total);

    config.engine = Engine::Beam;
    config.beam_width = 1;
    const ExtremeSummary narrow = summarize_search(*f.objective, config);
    CHECK(narrow.word_indices == greedy.word_indices);
    CHECK(narrow.frame_index == greedy.frame_index);
    CHECK(narrow.losses.total == greedy.losses.total);
  }
}

TEST_CASE("sentence text follows document order") {
  Fixture f(9, 12, 3);
  SummaryConfig config;
  config.k = 4;
  const ExtremeSummary s = summarize_search(*f.objective, config);
  std::string expected;
  for (Index i : s.word_indices) expected += (expected.empty() ? "" : " ") + f.pair.words[std::size_t(i)];
  CHECK(s.sentence_text == expected);
}

TEST_CASE("refinement never raises the loss") {
  Fixture f(21, 16, 5);
  SummaryConfig config;
  config.k = 4;
  config.beam_width = 2;
  config.refinement_rounds = 0;
  const double plain = summarize_search(*f.objective, config).losses.total;
  config.refinement_rounds = 3;
  CHECK(summarize_search(*f.objective, config).losses.total <= plain);
}

TEST_CASE("exhaustive oracle capacity guard") {
  Fixture f(3, 20, 6);
  SummaryConfig config;
  config.k = 10;  // C(20, 10) * 6 = 1,108,536 > 1e6
  try {
    exhaustive_oracle(*f.objective, config);
    FAIL("expected a capacity error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Capacity);
  }
  config.k = 2;
  config.exhaustive_cap = 100;  // 190 * 6 candidates
  CHECK_THROWS_AS(exhaustive_oracle(*f.objective, config), Error);
}

TEST_CASE("invalid summary lengths") {
  Fixture f(4, 6, 2);
  SummaryConfig config;
  config.k = 7;
  CHECK_THROWS_AS(summarize_search(*f.objective, config), Error);
  config.k = 0;
  CHECK_THROWS_AS(exhaustive_oracle(*f.objective, config), Error);
  CHECK_THROWS_AS(parse_engine("random"), Error);
  CHECK(parse_engine("greedy") == Engine::Greedy);
}

TEST_CASE("neural engine with zero parameters follows the tie rule") {
  Fixture f(6, 10, 5);
  SummaryConfig config;
  config.k = 4;
  config.engine = Engine::Neural;
  for (const ModelParams& params : {ModelParams::zeros(32, 8), ModelParams::defaults(32, 8)}) {
    const NeuralScores scores = neural_scores(f.pair, f.embeddings, params);
    CHECK((scores.frames.array() - 1.0 / 5).abs().maxCoeff() < 1e-9);
    CHECK((scores.words.array() - 1.0 / 10).abs().maxCoeff() < 1e-9);
    const ExtremeSummary s = summarize(*f.objective, f.pair, f.embeddings, config, &params);
    CHECK(s.frame_index == 0);
    CHECK(s.word_indices == std::vector<Index>{0, 1, 2, 3});
    check_summary(s, f, 4, config.weights);
  }
  CHECK_THROWS_AS(summarize(*f.objective, f.pair, f.embeddings, config, nullptr), Error);
  const ModelParams wrong = ModelParams::defaults(16, 4);
  CHECK_THROWS_AS(summarize(*f.objective, f.pair, f.embeddings, config, &wrong), Error);
}
