#include "doctest.h"

#include "support.hpp"
#include "xmsmo/error.hpp"
#include "xmsmo/lm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace xmsmo;

TEST_CASE("add-k unigram by hand") {
  const NgramLM lm = NgramLM::train({{"a", "a", "b"}}, 1, 0.0);
  CHECK(lm.score({"a"}) == doctest::Approx(-std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(lm.score({"b"}) == doctest::Approx(-std::log(1.0 / 3.0)).epsilon(1e-14));
  CHECK(std::isinf(lm.score({"c"})));
}

TEST_CASE("smoothed continuations sum to one") {
  const NgramLM lm = NgramLM::train({{"a", "b", "c"}, {"b", "c", "a"}}, 2, 0.5);
  for (const std::uint32_t context : {NgramLM::kStart, lm.id("a"), lm.id("b"), lm.id("never")}) {
    double sum = 0.0;
    for (std::uint32_t w = 0; w < lm.vocab_size() + 1; ++w) {
      if (w == NgramLM::kStart) continue;
      sum += lm.probability({context}, w);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("scores are positive and fall as add-k shrinks") {
  const std::vector<TokenList> corpus = {{"the", "cat", "sat"}, {"the", "dog", "ran"}};
  double previous = std::numeric_limits<double>::infinity();
  for (double k : {1.0, 0.5, 0.1, 0.01}) {
    const double s = NgramLM::train(corpus, 3, k).score({"the", "cat", "sat"});
    CHECK(s > 0.0);
    CHECK(s <= previous);
    previous = s;
  }
}

TEST_CASE("training sentences beat their shuffles") {
  std::mt19937_64 rng(17);
  std::vector<TokenList> corpus;
  for (std::uint64_t i = 0; i < 50; ++i) {
    corpus.push_back(tokenize(testing::random_document(rng, 8)));
  }
  const NgramLM lm = NgramLM::train(corpus, 3, 0.1);
  int wins = 0, trials = 0;
  for (const auto& sentence : corpus) {
    TokenList shuffled = sentence;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if (shuffled == sentence) continue;
    ++trials;
    wins += lm.score(sentence) < lm.score(shuffled);
  }
  CHECK(double(wins) >= 0.9 * double(trials));
}

TEST_CASE("language model persistence") {
  const NgramLM lm = NgramLM::train({{"a", "b"}, {"b", "c", "a"}}, 3, 0.1);
  std::stringstream buffer;
  lm.save(buffer);
  const NgramLM back = NgramLM::load(buffer);
  CHECK(back == lm);
  CHECK(back.score({"a", "b", "z"}) == lm.score({"a", "b", "z"}));

  std::stringstream bad("XMLX");
  CHECK_THROWS_AS(NgramLM::load(bad), Error);
  const std::string bytes = [&] {
    std::stringstream s;
    lm.save(s);
    return s.str();
  }();
  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(NgramLM::load(truncated), Error);
}

TEST_CASE("empty inputs") {
  CHECK_THROWS_AS(NgramLM::train({}, 3, 0.1), Error);
  CHECK_THROWS_AS(NgramLM::train({{}}, 3, 0.1), Error);
  CHECK_THROWS_AS(NgramLM::train({{"a"}}, 3, 0.1).score({}), Error);
  CHECK_THROWS_AS(NgramLM::train({{"a"}}, 0, 0.1), Error);
}
