#include "xmsmo/cli.hpp"

#include "xmsmo/corpus.hpp"
#include "xmsmo/error.hpp"
#include "xmsmo/lm.hpp"
#include "xmsmo/metrics.hpp"
#include "xmsmo/objective.hpp"
#include "xmsmo/params.hpp"
#include "xmsmo/summarize.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace xmsmo::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Flags {
  fs::path manifest;
  fs::path embeddings;
  bool toy_embed = false;
  std::uint64_t seed = 0;
  int dim = kDefaultEmbeddingDim;

  Index k = 12;
  std::string engine = "beam";
  Index beam = 4;
  int refine = 1;
  double lambda_d = 1.0, lambda_v = 1.0, lambda_f = 1.0, lambda_c = 1.0;
  int clusters = kDefaultClusters;
  double epsilon = SinkhornOptions{}.epsilon;
  Index exact_limit = SolverConfig{}.exact_limit;
  double exhaustive_cap = SummaryConfig{}.exhaustive_cap;

  fs::path params;
  Index hidden = 16;
  fs::path lm;
  int lm_order = 3;
  double lm_add_k = 0.1;

  std::size_t frame_stride = LoadOptions{}.frame_stride;
  std::size_t frame_cap = LoadOptions{}.frame_cap;
  int width = LoadOptions{}.width;
  int height = LoadOptions{}.height;
  double scene_threshold = kDefaultSceneThreshold;

  fs::path predictions;
  fs::path concepts;
  int top_c = kDefaultConcepts;
  double frame_threshold = kDefaultFrameThreshold;
  std::optional<double> best_rouge_l;
  std::optional<double> best_iou;

  fs::path out;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
};

void add_flags(CLI::App& app, Flags& f) {
  app.add_option("--manifest", f.manifest, "JSON Lines manifest of video-document pairs");
  app.add_option("--embeddings", f.embeddings, "Directory of <id>/{frames,words,tokens}.xmeb");
  app.add_flag("--toy-embed", f.toy_embed, "Use deterministic toy embeddings");
  app.add_option("--seed", f.seed, "Seed for toy embeddings and colour clustering");
  app.add_option("--dim", f.dim, "Toy embedding dimension")->capture_default_str();

  app.add_option("--k", f.k, "Summary length in words")->capture_default_str();
  app.add_option("--engine", f.engine, "neural, greedy, beam or exhaustive")->capture_default_str();
  app.add_option("--beam", f.beam, "Beam width")->capture_default_str();
  app.add_option("--refine", f.refine, "Alternating refinement rounds")->capture_default_str();
  app.add_option("--lambda-d", f.lambda_d, "Document coverage weight")->capture_default_str();
  app.add_option("--lambda-v", f.lambda_v, "Video coverage weight")->capture_default_str();
  app.add_option("--lambda-f", f.lambda_f, "Fluency weight")->capture_default_str();
  app.add_option("--lambda-c", f.lambda_c, "Cross-modal weight")->capture_default_str();
  app.add_option("--clusters", f.clusters, "Colour signature clusters")->capture_default_str();
  app.add_option("--epsilon", f.epsilon, "Sinkhorn regularisation")->capture_default_str();
  app.add_option("--exact-limit", f.exact_limit, "Largest n*m solved exactly")->capture_default_str();
  app.add_option("--exhaustive-cap", f.exhaustive_cap, "Candidate cap for the exhaustive engine")
      ->capture_default_str();

  app.add_option("--params", f.params, "Model parameter file (XMEB)");
  app.add_option("--hidden", f.hidden, "GRU hidden size when no parameter file is given")
      ->capture_default_str();
  app.add_option("--lm", f.lm, "Language model file; trained on the manifest when absent");
  app.add_option("--lm-order", f.lm_order, "N-gram order")->capture_default_str();
  app.add_option("--lm-add-k", f.lm_add_k, "Add-k smoothing constant")->capture_default_str();

  app.add_option("--frame-stride", f.frame_stride, "Keep every n-th frame file")->capture_default_str();
  app.add_option("--frame-cap", f.frame_cap, "Maximum candidate frames")->capture_default_str();
  app.add_option("--width", f.width, "Frame width after resizing, 0 keeps native")->capture_default_str();
  app.add_option("--height", f.height, "Frame height after resizing, 0 keeps native")
      ->capture_default_str();
  app.add_option("--scene-threshold", f.scene_threshold, "Cosine distance opening a new scene")
      ->capture_default_str();

  app.add_option("--predictions", f.predictions, "Summary records to evaluate");
  app.add_option("--concepts", f.concepts, "Concept vocabulary (XMEB) for IoU");
  app.add_option("--top-c", f.top_c, "Concepts per frame for IoU")->capture_default_str();
  app.add_option("--frame-threshold", f.frame_threshold, "Frame match distance threshold")
      ->capture_default_str();
  app.add_option("--best-rouge-l", f.best_rouge_l, "Best ROUGE-L for the overall score");
  app.add_option("--best-iou", f.best_iou, "Best IoU for the overall score");

  app.add_option("--out", f.out, "Output file or directory");
  app.add_option("--workers", f.workers, "Worker threads")->capture_default_str();
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  const std::size_t count = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  }
}

// Library errors already lead with their kind.
std::string describe(const std::exception& e) { return e.what(); }

Manifest manifest_from(const Flags& f) {
  require(!f.manifest.empty(), ErrorKind::Config, "--manifest is required");
  Manifest manifest = read_manifest(f.manifest);
  require(!manifest.entries.empty(), ErrorKind::EmptyInput,
          "manifest " + f.manifest.string() + " has no entries");
  return manifest;
}

LoadOptions load_options(const Flags& f, bool need_embeddings = true) {
  LoadOptions load;
  load.frame_stride = f.frame_stride;
  load.frame_cap = f.frame_cap;
  load.width = f.width;
  load.height = f.height;
  load.scene_threshold = f.scene_threshold;
  load.embeddings.dim = f.dim;
  load.embeddings.seed = f.seed;
  if (need_embeddings) {
    require(!(f.toy_embed && !f.embeddings.empty()), ErrorKind::Config,
            "--embeddings and --toy-embed are mutually exclusive");
    require(f.toy_embed || !f.embeddings.empty(), ErrorKind::Config,
            "one of --embeddings DIR or --toy-embed is required");
  }
  load.embeddings.directory = f.embeddings;
  return load;
}

SummaryConfig summary_config(const Flags& f) {
  SummaryConfig config;
  config.k = f.k;
  config.engine = parse_engine(f.engine);
  config.beam_width = f.beam;
  config.refinement_rounds = f.refine;
  config.weights = {f.lambda_d, f.lambda_v, f.lambda_f, f.lambda_c};
  quartet_loss({}, config.weights);
  require(f.clusters >= 1, ErrorKind::Config, "--clusters must be >= 1");
  config.colors.clusters = f.clusters;
  config.colors.seed = f.seed;
  require(f.epsilon > 0.0, ErrorKind::Config, "--epsilon must be > 0");
  config.solver.sinkhorn.epsilon = f.epsilon;
  config.solver.exact_limit = f.exact_limit;
  config.exhaustive_cap = f.exhaustive_cap;
  return config;
}

// With `skip_unreadable`, a broken entry is left out here and reported later
// by its own pair.
std::vector<TokenList> corpus_sentences(const Manifest& manifest, bool skip_unreadable = false) {
  std::vector<TokenList> sentences;
  for (const auto& entry : manifest.entries) {
    SplitText text;
    try {
      text = read_document(entry);
    } catch (const Error&) {
      if (!skip_unreadable) throw;
      continue;
    }
    for (const auto& span : text.sentences) {
      sentences.emplace_back(text.tokens.begin() + span.start, text.tokens.begin() + span.end + 1);
    }
  }
  return sentences;
}

class Sink {
 public:
  Sink(const fs::path& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      file_.open(path, std::ios::binary);
      require(bool(file_), ErrorKind::Io, "cannot open " + path.string() + " for writing");
      out_ = &file_;
    }
  }
  void line(const json& record) { *out_ << record.dump() << '\n'; }
  void close() {
    out_->flush();
    require(bool(*out_), ErrorKind::Io, "write failed");
  }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

json losses_json(const LossBreakdown& l) {
  return {{"document", l.document},
          {"video", l.video},
          {"fluency", l.fluency},
          {"cross_modal", l.cross_modal},
          {"total", l.total}};
}

int cmd_summarize(const Flags& f, std::ostream& out, std::ostream& err) {
  const Manifest manifest = manifest_from(f);
  const LoadOptions load = load_options(f);
  const SummaryConfig config = summary_config(f);
  const NgramLM lm = f.lm.empty() ? NgramLM::train(corpus_sentences(manifest, true), f.lm_order, f.lm_add_k)
                                  : NgramLM::load(f.lm);
  std::optional<ModelParams> params;
  if (!f.params.empty()) params = load_model_params(f.params);
  Sink sink(f.out, out);

  std::vector<json> records(manifest.entries.size());
  parallel_for(records.size(), f.workers, [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    try {
      const VideoDocPair pair = load_pair(entry, load);
      const PairEmbeddings emb = load_embeddings(pair, load.embeddings);
      const QuartetObjective objective({&pair, &emb, &lm, config.colors, config.solver});
      std::optional<ModelParams> fallback;
      if (config.engine == Engine::Neural && !params) {
        fallback = ModelParams::defaults(emb.frames.cols(), f.hidden);
      }
      const ExtremeSummary s =
          summarize(objective, pair, emb, config, params ? &*params : (fallback ? &*fallback : nullptr));
      records[i] = {{"id", pair.id},
                    {"frame_index", s.frame_index},
                    {"frame_path", pair.frame_paths[std::size_t(s.frame_index)].string()},
                    {"word_indices", s.word_indices},
                    {"words", objective.tokens(s.word_indices)},
                    {"sentence", s.sentence_text},
                    {"losses", losses_json(s.losses)}};
    } catch (const std::exception& e) {
      records[i] = {{"id", entry.id}, {"error", describe(e)}};
    }
  });

  std::size_t failed = 0;
  for (const auto& r : records) {
    if (r.contains("error")) {
      ++failed;
      err << "pair " << r["id"].get<std::string>() << " failed: " << r["error"].get<std::string>()
          << '\n';
    }
    sink.line(r);
  }
  sink.close();
  err << "summarized " << records.size() - failed << " of " << records.size() << " pairs\n";
  return failed ? kExitPartial : kExitOk;
}

std::vector<json> read_jsonl(const fs::path& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::Io, "cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    require(records.back().is_object() && records.back().contains("id") &&
                records.back()["id"].is_string(),
            ErrorKind::Format, path.string() + ":" + std::to_string(line_no) + ": record without id");
  }
  return records;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : ", ") + id;
  return out;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream& err) {
  const Manifest manifest = manifest_from(f);
  require(!f.predictions.empty(), ErrorKind::Config, "--predictions is required");
  const std::vector<json> predictions = read_jsonl(f.predictions);
  require(!predictions.empty(), ErrorKind::Validation,
          "prediction file " + f.predictions.string() + " is empty");

  std::map<std::string, const json*> by_id;
  for (const auto& p : predictions) {
    const auto id = p["id"].get<std::string>();
    require(by_id.emplace(id, &p).second, ErrorKind::Validation, "duplicate prediction id " + id);
  }
  std::vector<std::string> missing, unexpected;
  std::set<std::string> manifest_ids;
  for (const auto& e : manifest.entries) {
    manifest_ids.insert(e.id);
    if (!by_id.count(e.id)) missing.push_back(e.id);
  }
  for (const auto& [id, p] : by_id) {
    if (!manifest_ids.count(id)) unexpected.push_back(id);
  }
  require(missing.empty() && unexpected.empty(), ErrorKind::Validation,
          "prediction ids do not match the manifest; missing: [" + join_ids(missing) +
              "]; unexpected: [" + join_ids(unexpected) + "]");

  const EmbeddingMatrix concepts =
      f.concepts.empty() ? toy_concepts(f.dim, f.seed) : read_embeddings(f.concepts);

  std::vector<json> records(manifest.entries.size());
  parallel_for(records.size(), f.workers, [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    const json& p = *by_id.at(entry.id);
    try {
      require(!p.contains("error"), ErrorKind::Validation,
              "prediction carries an error: " + p.value("error", std::string()));
      require(entry.ref_title && entry.ref_cover_path, ErrorKind::Validation,
              "manifest entry has no reference title and cover");
      const auto words = p.at("words").get<TokenList>();
      const TokenList reference = tokenize(*entry.ref_title);
      const RgbImage candidate = read_image(p.at("frame_path").get<std::string>());
      const RgbImage cover = read_image(*entry.ref_cover_path);
      records[i] = {{"id", entry.id},
                    {"rouge1", rouge_n(words, reference, 1).f1},
                    {"rouge2", rouge_n(words, reference, 2).f1},
                    {"rougeL", rouge_l(words, reference).f1},
                    {"frame_match", frame_accuracy(candidate, cover, f.frame_threshold)},
                    {"iou", iou_concepts(candidate, cover, concepts, f.top_c)}};
    } catch (const std::exception& e) {
      records[i] = {{"id", entry.id}, {"error", describe(e)}};
    }
  });

  Sink sink(f.out, out);
  double r1 = 0, r2 = 0, rl = 0, fm = 0, io = 0;
  std::size_t ok = 0;
  for (const auto& r : records) {
    sink.line(r);
    if (r.contains("error")) {
      err << "pair " << r["id"].get<std::string>() << " failed: " << r["error"].get<std::string>()
          << '\n';
      continue;
    }
    ++ok;
    r1 += r["rouge1"].get<double>();
    r2 += r["rouge2"].get<double>();
    rl += r["rougeL"].get<double>();
    fm += r["frame_match"].get<bool>() ? 1.0 : 0.0;
    io += r["iou"].get<double>();
  }
  const double n = ok ? double(ok) : 1.0;
  json aggregate = {{"aggregate", true},
                    {"pairs", ok},
                    {"failed", records.size() - ok},
                    {"rouge1", r1 / n},
                    {"rouge2", r2 / n},
                    {"rougeL", rl / n},
                    {"frame_match", fm / n},
                    {"iou", io / n}};
  if (f.best_rouge_l && f.best_iou) {
    aggregate["overall"] = overall(rl / n, io / n, *f.best_rouge_l, *f.best_iou);
  }
  sink.line(aggregate);
  sink.close();
  if (!f.out.empty()) out << aggregate.dump() << '\n';
  return ok == records.size() ? kExitOk : kExitPartial;
}

int cmd_embed_toy(const Flags& f, std::ostream& out) {
  const Manifest manifest = manifest_from(f);
  require(!f.out.empty(), ErrorKind::Config, "--out DIR is required");
  LoadOptions load = load_options(f, false);
  load.embeddings.directory.clear();
  for (const auto& entry : manifest.entries) {
    write_toy_embeddings(load_pair(entry, load), load.embeddings, f.out);
  }
  out << "wrote toy embeddings for " << manifest.entries.size() << " pairs to " << f.out.string()
      << '\n';
  return kExitOk;
}

int cmd_lm_train(const Flags& f, std::ostream& out) {
  const Manifest manifest = manifest_from(f);
  require(!f.out.empty(), ErrorKind::Config, "--out FILE is required");
  const auto sentences = corpus_sentences(manifest);
  const NgramLM lm = NgramLM::train(sentences, f.lm_order, f.lm_add_k);
  lm.save(f.out);
  out << "trained order-" << f.lm_order << " language model on " << sentences.size()
      << " sentences, vocabulary " << lm.vocab_size() << '\n';
  return kExitOk;
}

int cmd_stats(const Flags& f, std::ostream& out) {
  const Manifest manifest = manifest_from(f);
  double frames = 0, doc_tokens = 0, summary_tokens = 0;
  std::size_t titled = 0;
  for (const auto& entry : manifest.entries) {
    frames += double(list_frame_files(entry.frames_dir).size());
    doc_tokens += double(read_document(entry).tokens.size());
    if (entry.ref_title) {
      summary_tokens += double(tokenize(*entry.ref_title).size());
      ++titled;
    }
  }
  const double n = double(manifest.entries.size());
  json stats = {{"pairs", manifest.entries.size()},
                {"Frames/Video", frames / n},
                {"Tokens/Document", doc_tokens / n},
                {"Tokens/Summary", titled ? json(summary_tokens / double(titled)) : json(nullptr)}};
  out << stats.dump() << '\n';
  if (!f.out.empty()) {
    Sink sink(f.out, out);
    sink.line(stats);
    sink.close();
  }
  return kExitOk;
}

int cmd_params_init(const Flags& f, std::ostream& out) {
  require(!f.out.empty(), ErrorKind::Config, "--out FILE is required");
  save_model_params(ModelParams::defaults(f.dim, f.hidden), f.out);
  out << "wrote default parameters (dim " << f.dim << ", hidden " << f.hidden << ") to "
      << f.out.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Extreme multimodal summarisation: one cover frame and one short sentence per pair"};
  app.name("xmsmo");
  app.set_config("--config", "", "TOML-style key = value file; command-line flags win");
  app.require_subcommand(1, 1);
  add_flags(app, f);

  auto* summarize = app.add_subcommand("summarize", "Summarise every manifest pair to JSON Lines");
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against manifest references");
  auto* embed_toy = app.add_subcommand("embed-toy", "Write toy XMEB embeddings for every pair");
  auto* lm_train = app.add_subcommand("lm-train", "Train the n-gram fluency model on the documents");
  auto* stats = app.add_subcommand("stats", "Per-corpus means of frames and tokens");
  auto* params_init = app.add_subcommand("params-init", "Write a default model parameter file");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (summarize->parsed()) return cmd_summarize(f, out, err);
    if (evaluate->parsed()) return cmd_evaluate(f, out, err);
    if (embed_toy->parsed()) return cmd_embed_toy(f, out);
    if (lm_train->parsed()) return cmd_lm_train(f, out);
    if (stats->parsed()) return cmd_stats(f, out);
    if (params_init->parsed()) return cmd_params_init(f, out);
  } catch (const std::exception& e) {
    err << "error: " << describe(e) << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace xmsmo::cli
