// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include "support.hpp"
#include "xmsmo/cli.hpp"
#include "xmsmo/embed.hpp"
#include "xmsmo/metrics.hpp"
#include "xmsmo/objective.hpp"
#include "xmsmo/params.hpp"
#include "xmsmo/summarize.hpp"
#include "xmsmo/transport.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace xmsmo;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

struct OtCase {
  Eigen::VectorXd mu, nu;
  Eigen::MatrixXd cost;
  double objective;
};

std::vector<OtCase> ot_cases() {
  std::vector<OtCase> out;
  const auto fixtures = testing::load_fixtures();
  for (const auto& inst : fixtures["ot_instances"]) {
    out.push_back({testing::to_vector(inst["mu"]), testing::to_vector(inst["nu"]),
                   testing::to_matrix(inst["cost"]), inst["objective"].get<double>()});
  }
  return out;
}

Outcome ot_correctness() {
  Outcome o;
  const auto cases = ot_cases();
  o.expect(cases.size() == 50, "expected 50 fixture instances");
  const auto start = Clock::now();
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, std::abs(exact_ot(c.mu, c.nu, c.cost).objective - c.objective));
  const double elapsed = seconds_since(start);
  o.expect(worst <= 1e-8, fmt("max |exact - LP| = %.3g", worst));
  o.expect(elapsed < 1.0, fmt("runtime %.3f s", elapsed));
  if (o.pass) o.detail = fmt("max |exact - LP| = %.3g over 50 instances in %.3f s", worst, elapsed);
  return o;
}

Outcome sinkhorn_convergence() {
  Outcome o;
  double worst_gap = 0.0, worst_violation = 0.0;
  int monotone_breaks = 0;
  for (const auto& c : ot_cases()) {
    SinkhornOptions opts;
    opts.epsilon = 0.005;
    const TransportPlan s = sinkhorn(c.mu, c.nu, c.cost, opts);
    worst_gap = std::max(worst_gap, std::abs(s.objective - c.objective));
    worst_violation = std::max(worst_violation, marginal_violation(s.plan, c.mu, c.nu));
    double previous = std::numeric_limits<double>::infinity();
    for (double eps : {0.1, 0.05, 0.01}) {
      opts.epsilon = eps;
      const double value = sinkhorn(c.mu, c.nu, c.cost, opts).objective;
      if (value > previous) ++monotone_breaks;
      previous = value;
    }
  }
  o.expect(worst_gap <= 1e-2, fmt("max |sinkhorn - exact| = %.3g", worst_gap));
  o.expect(worst_violation <= 1e-9, fmt("marginal violation %.3g", worst_violation));
  o.expect(monotone_breaks == 0, fmt("%.0f monotonicity breaks over epsilon", monotone_breaks));
  if (o.pass) o.detail = fmt("max gap %.3g at eps=0.005, max violation %.3g, monotone", worst_gap, worst_violation);
  return o;
}

Outcome coverage_identities() {
  Outcome o;
  std::mt19937_64 rng(404);
  const TokenEmbeddings emb = TokenEmbeddings::toy(64, 7);
  double worst_doc = 0.0;
  for (int i = 0; i < 20; ++i) {
    const TokenList doc = tokenize(testing::random_document(rng, 10 + std::size_t(i) * 3));
    worst_doc = std::max(worst_doc, std::abs(document_coverage(doc, doc, emb)));
  }
  double worst_video = 0.0;
  for (int i = 0; i < 5; ++i) {
    const RgbImage f = testing::random_block_frame(rng, 12, 8);
    worst_video = std::max(worst_video, std::abs(video_coverage({f, f, f}, f)));
  }
  const RgbImage black = RgbImage::filled(8, 8, 0, 0, 0), white = RgbImage::filled(8, 8, 1, 1, 1);
  const double bw = video_coverage({black, black}, white);
  o.expect(worst_doc <= 1e-9, fmt("document_coverage(D, D) = %.3g", worst_doc));
  o.expect(worst_video <= 1e-9, fmt("video_coverage on identical frames = %.3g", worst_video));
  o.expect(std::abs(bw - std::sqrt(3.0)) <= 1e-6, fmt("black vs white = %.12f", bw));
  if (o.pass) {
    o.detail = fmt("doc %.2g, video %.2g", worst_doc, worst_video) +
               fmt(", black/white - sqrt(3) = %.2g", bw - std::sqrt(3.0));
  }
  return o;
}

struct Tiny {
  VideoDocPair pair;
  PairEmbeddings embeddings;
  NgramLM lm;
  std::unique_ptr<QuartetObjective> objective;
  Index k;
};

// 20 pairs with U <= 8, k <= 3, T <= 6.
std::vector<std::unique_ptr<Tiny>> tiny_fixtures() {
  std::vector<std::unique_ptr<Tiny>> out;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto t = std::make_unique<Tiny>();
    const std::size_t words = 4 + i % 5, frames = 2 + i % 5;
    t->pair = testing::synthetic_pair(1000 + i, words, frames);
    t->k = Index(1 + i % 3);
    EmbeddingSource toy;
    toy.dim = 32;
    toy.seed = i;
    t->embeddings = load_embeddings(t->pair, toy);
    t->lm = NgramLM::train(testing::sentences_of(t->pair), 3, 0.1);
    t->objective = std::make_unique<QuartetObjective>(
        QuartetObjective::Inputs{&t->pair, &t->embeddings, &t->lm, {}, {}});
    out.push_back(std::move(t));
  }
  return out;
}

double choose(Index n, Index k) {
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * double(n - k + i) / double(i);
  return std::round(c);
}

Outcome search_optimality() {
  Outcome o;
  const auto start = Clock::now();
  int matched = 0;
  for (const auto& t : tiny_fixtures()) {
    SummaryConfig config;
    config.k = t->k;
    const ExtremeSummary oracle = exhaustive_oracle(*t->objective, config);
    config.engine = Engine::Beam;
    config.beam_width = Index(choose(t->pair.word_count(), t->k));
    const ExtremeSummary beam = summarize_search(*t->objective, config);
    config.engine = Engine::Greedy;
    const ExtremeSummary greedy = summarize_search(*t->objective, config);
    config.engine = Engine::Beam;
    config.beam_width = 1;
    const ExtremeSummary narrow = summarize_search(*t->objective, config);

    o.expect(beam.losses.total == oracle.losses.total,
             t->pair.id + ": full beam " + std::to_string(beam.losses.total) + " != oracle " +
                 std::to_string(oracle.losses.total));
    o.expect(narrow.word_indices == greedy.word_indices && narrow.frame_index == greedy.frame_index &&
                 narrow.losses.total == greedy.losses.total,
             t->pair.id + ": beam width 1 differs from greedy");
    o.expect(greedy.losses.total >= oracle.losses.total, t->pair.id + ": greedy below the oracle");
    matched += beam.losses.total == oracle.losses.total;
  }
  const double elapsed = seconds_since(start);
  o.expect(elapsed < 10.0, fmt("runtime %.2f s", elapsed));
  if (o.pass) o.detail = fmt("%.0f/20 pairs at the oracle loss in %.2f s", matched, elapsed);
  return o;
}

Outcome lambda_invariance() {
  Outcome o;
  int checked = 0;
  for (const auto& t : tiny_fixtures()) {
    SummaryConfig config;
    config.k = t->k;
    const ExtremeSummary base = exhaustive_oracle(*t->objective, config);
    for (double gamma : {0.5, 3.0}) {
      SummaryConfig scaled = config;
      scaled.weights = config.weights.scaled(gamma);
      const ExtremeSummary s = exhaustive_oracle(*t->objective, scaled);
      o.expect(s.word_indices == base.word_indices && s.frame_index == base.frame_index,
               t->pair.id + fmt(": argmin moved under gamma = %.1f", gamma));
      ++checked;
    }
  }
  if (o.pass) o.detail = fmt("argmin unchanged in %.0f scaled runs", checked);
  return o;
}

Outcome metric_fixtures() {
  Outcome o;
  using T = std::vector<std::string>;
  struct Case {
    RougeScore got;
    double p, r, f;
    const char* name;
  };
  const Case cases[] = {
      {rouge_n({"the", "cat"}, {"the", "cat", "sat"}, 1), 1.0, 2.0 / 3, 0.8, "unigram subset"},
      {rouge_l({"a", "c"}, {"a", "b", "c"}), 1.0, 2.0 / 3, 0.8, "lcs gap"},
      {rouge_n({"the", "cat", "sat"}, {"the", "cat"}, 1), 2.0 / 3, 1.0, 0.8, "unigram superset"},
      {rouge_n({"the", "the", "the"}, {"the", "cat"}, 1), 1.0 / 3, 0.5, 0.4, "clipped repeats"},
      {rouge_n({"a", "b", "c"}, {"a", "b", "d"}, 2), 0.5, 0.5, 0.5, "bigram half"},
      {rouge_n({"a", "b"}, {"c", "d"}, 1), 0.0, 0.0, 0.0, "disjoint"},
      {rouge_n({"a"}, {"a", "b"}, 2), 0.0, 0.0, 0.0, "too short for bigrams"},
      {rouge_l({"b", "a"}, {"a", "b"}), 0.5, 0.5, 0.5, "lcs reversed pair"},
      {rouge_l(T{}, {"a"}), 0.0, 0.0, 0.0, "empty candidate"},
      {rouge_l({"a", "b", "c", "d"}, {"a", "c", "d"}), 0.75, 1.0, 6.0 / 7, "lcs deletion"},
  };
  int exact = 0;
  for (const auto& c : cases) {
    const bool ok = c.got.precision == c.p && c.got.recall == c.r && c.got.f1 == c.f;
    o.expect(ok, std::string("fixture '") + c.name + "' differs");
    exact += ok;
  }
  const double ov = overall(4.33, 0.68, 4.33, 0.70);
  o.expect(std::abs(ov - 0.99) <= 0.01, fmt("overall = %.4f", ov));
  if (o.pass) o.detail = fmt("%.0f/10 exact, overall(4.33, 0.68, 4.33, 0.70) = %.4f", exact, ov);
  return o;
}

int run_cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::vector<const char*> argv{"xmsmo"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  if (err_text) *err_text = err.str();
  return code;
}

Outcome pipeline_smoke() {
  Outcome o;
  testing::TempDir dir("acceptance");
  const fs::path manifest = testing::write_synthetic_corpus(dir.path(), 5, 77, 6, 40);
  const fs::path summaries = dir.path() / "summaries.jsonl", report = dir.path() / "report.jsonl";
  const auto start = Clock::now();
  std::string err;
  const int sum_code = run_cli({"summarize", "--manifest", manifest.string(), "--toy-embed", "--frame-stride", "1",
                                "--k", "12", "--engine", "beam", "--beam", "4", "--out", summaries.string()},
                               &err);
  const int eval_code = run_cli({"evaluate", "--manifest", manifest.string(), "--predictions", summaries.string(),
                                 "--out", report.string()},
                                &err);
  const double elapsed = seconds_since(start);
  o.expect(sum_code == 0, "summarize exit " + std::to_string(sum_code) + ": " + err);
  o.expect(eval_code == 0, "evaluate exit " + std::to_string(eval_code) + ": " + err);
  o.expect(elapsed < 60.0, fmt("runtime %.1f s", elapsed));
  if (!o.pass) return o;

  // Recompute every loss from scratch with the same defaults as the CLI.
  const Manifest m = read_manifest(manifest);
  std::vector<TokenList> corpus;
  for (const auto& e : m.entries) {
    const SplitText text = read_document(e);
    for (const auto& s : text.sentences) corpus.emplace_back(text.tokens.begin() + s.start, text.tokens.begin() + s.end + 1);
  }
  const NgramLM lm = NgramLM::train(corpus, 3, 0.1);
  LoadOptions load;
  load.frame_stride = 1;

  std::ifstream in(summaries);
  std::size_t index = 0;
  double worst = 0.0;
  for (std::string line; std::getline(in, line); ++index) {
    const auto rec = nlohmann::json::parse(line);
    o.expect(!rec.contains("error"), "pair failed: " + line);
    if (rec.contains("error")) continue;
    const VideoDocPair pair = load_pair(m.entries[index], load);
    const PairEmbeddings emb = load_embeddings(pair, load.embeddings);
    const QuartetObjective objective({&pair, &emb, &lm, {}, {}});
    const auto words = rec["word_indices"].get<std::vector<Index>>();
    const Index frame = rec["frame_index"].get<Index>();
    o.expect(words.size() == 12 && rec["words"].size() == 12, rec["id"].get<std::string>() + ": not 12 tokens");
    o.expect(frame >= 0 && frame < pair.frame_count(), rec["id"].get<std::string>() + ": frame out of range");
    const double total = quartet_loss(objective.parts(frame, words), {}).total;
    worst = std::max(worst, std::abs(total - rec["losses"]["total"].get<double>()));
  }
  o.expect(index == 5, "expected 5 summary records");
  o.expect(worst <= 1e-9, fmt("recomputed total differs by %.3g", worst));
  if (o.pass) o.detail = fmt("5 pairs in %.2f s, recomputed totals within %.2g", elapsed, worst);
  return o;
}

Outcome neural_degeneracy() {
  Outcome o;
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  double worst = 0.0;
  int cases = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const VideoDocPair pair = testing::synthetic_pair(500 + i, 6 + i * 3, 2 + i % 6);
    PairEmbeddings emb;
    const Index d = 8 + Index(i);
    emb.frames = Eigen::MatrixXd::NullaryExpr(pair.frame_count(), d, [&] { return 5.0 * g(rng); });
    emb.words = Eigen::MatrixXd::NullaryExpr(pair.word_count(), d, [&] { return 5.0 * g(rng); });
    const NeuralScores s = neural_scores(pair, emb, ModelParams::zeros(d, 4 + Index(i % 3)));
    worst = std::max(worst, (s.frames.array() - 1.0 / double(pair.frame_count())).abs().maxCoeff());
    worst = std::max(worst, (s.words.array() - 1.0 / double(pair.word_count())).abs().maxCoeff());
    const Index k = 1 + Index(i % 4);
    std::vector<Index> first(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) first[std::size_t(j)] = j;
    o.expect(select_frame(s.frames) == 0 && select_words(s.words, k) == first,
             pair.id + ": selection ignores the tie rule");
    ++cases;
  }
  o.expect(worst < 1e-9, fmt("max deviation from uniform %.3g", worst));
  if (o.pass) o.detail = fmt("%.0f random inputs, max deviation %.2g, lowest-index ties", cases, worst);
  return o;
}

Outcome format_round_trip() {
  Outcome o;
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<int> rows(0, 20), dims(1, 48), id_len(1, 24), byte(1, 255);
  std::uniform_int_distribution<std::uint32_t> bits;
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = rows(rng), d = dims(rng);
    std::vector<std::string> ids;
    RowMatrixXf data(n, d);
    for (int i = 0; i < n; ++i) {
      std::string id(std::size_t(id_len(rng)), ' ');
      for (auto& c : id) c = char(byte(rng));
      ids.push_back(id + "#" + std::to_string(i));
      for (int j = 0; j < d; ++j) {
        float v;
        do {
          const std::uint32_t b = bits(rng);
          std::memcpy(&v, &b, sizeof v);
        } while (!std::isfinite(v));
        data(i, j) = v;
      }
    }
    const EmbeddingMatrix m = n ? EmbeddingMatrix(ids, data) : EmbeddingMatrix(d);
    std::stringstream buffer;
    write_embeddings(m, buffer);
    const std::string first = buffer.str();
    const EmbeddingMatrix back = read_embeddings(buffer);
    std::ostringstream again;
    write_embeddings(back, again);
    const bool ok = back == m && again.str() == first;
    o.expect(ok, "matrix " + std::to_string(trial) + " changed in the round trip");
    exact += ok;
  }
  if (o.pass) o.detail = fmt("%.0f/100 matrices bit-identical", exact);
  return o;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"ot-solver-correctness", ot_correctness},
      {"sinkhorn-convergence", sinkhorn_convergence},
      {"coverage-identities", coverage_identities},
      {"search-optimality", search_optimality},
      {"lambda-scaling-invariance", lambda_invariance},
      {"metric-fixtures", metric_fixtures},
      {"pipeline-smoke", pipeline_smoke},
      {"neural-degeneracy", neural_degeneracy},
      {"format-round-trip", format_round_trip},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("threw: ") + e.what()};
    }
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS " : "FAIL ") << name << "  " << outcome.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << (9 - failures) << "/9 criteria" << std::endl;
  return failures ? 1 : 0;
}
