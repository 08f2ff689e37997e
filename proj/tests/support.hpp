#ifndef XMSMO_TESTS_SUPPORT_HPP
#define XMSMO_TESTS_SUPPORT_HPP

// Synthetic corpora and fixture access shared by the unit and acceptance
// tests. Everything is generated from explicit seeds.

#include "xmsmo/corpus.hpp"
#include "xmsmo/image.hpp"
#include "xmsmo/lm.hpp"

#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace xmsmo::testing {

namespace fs = std::filesystem;

inline nlohmann::json load_fixtures() {
  std::ifstream in(fs::path(XMSMO_FIXTURE_DIR) / "oracle_fixtures.json");
  return nlohmann::json::parse(in);
}

inline Eigen::VectorXd to_vector(const nlohmann::json& values) {
  Eigen::VectorXd v(Eigen::Index(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v(Eigen::Index(i)) = values[i].get<double>();
  return v;
}

inline Eigen::MatrixXd to_matrix(const nlohmann::json& rows) {
  Eigen::MatrixXd m(Eigen::Index(rows.size()), Eigen::Index(rows.at(0).size()));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(Eigen::Index(i)) = to_vector(rows[i]).transpose();
  return m;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("xmsmo-" + tag + "-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "market", "rallied", "bank",   "earnings", "oil",   "prices", "fell",  "investors",
      "trade",  "data",    "storm",  "coast",    "city",  "crews",  "power", "restored",
      "team",   "won",     "final",  "season",   "crowd", "cheered", "new",  "record"};
  return words;
}

inline RgbImage random_block_frame(std::mt19937_64& rng, int width, int height) {
  std::uniform_int_distribution<int> level(0, 4);
  RgbImage frame(width, height);
  // Two vertical colour blocks so signatures have more than one cluster.
  for (int half = 0; half < 2; ++half) {
    const float r = float(level(rng)) / 4.0f, g = float(level(rng)) / 4.0f, b = float(level(rng)) / 4.0f;
    for (int y = 0; y < height; ++y) {
      for (int x = half * width / 2; x < (half + 1) * width / 2; ++x) frame.at(x, y) << r, g, b;
    }
  }
  return frame;
}

/// Random sentence-structured document of `words` tokens.
inline std::string random_document(std::mt19937_64& rng, std::size_t words) {
  std::uniform_int_distribution<std::size_t> pick(0, vocabulary().size() - 1);
  std::uniform_int_distribution<int> sentence_length(3, 6);
  std::ostringstream doc;
  int left = sentence_length(rng);
  for (std::size_t i = 0; i < words; ++i) {
    doc << (i ? " " : "") << vocabulary()[pick(rng)];
    if (--left == 0 || i + 1 == words) {
      doc << '.';
      left = sentence_length(rng);
    }
  }
  return doc.str();
}

/// In-memory pair with toy-embedding scenes.
inline VideoDocPair synthetic_pair(std::uint64_t seed, std::size_t words, std::size_t frames,
                                   int width = 8, int height = 6) {
  std::mt19937_64 rng(seed);
  VideoDocPair pair;
  pair.id = "syn" + std::to_string(seed);
  for (std::size_t t = 0; t < frames; ++t) {
    pair.frames.push_back(random_block_frame(rng, width, height));
    pair.frame_paths.emplace_back("frame" + std::to_string(t));
  }
  pair.source_frame_count = frames;
  SplitText text = split_sentences(random_document(rng, words));
  pair.words = std::move(text.tokens);
  pair.sentences = std::move(text.sentences);
  EmbeddingSource toy;
  toy.dim = 32;
  pair.scenes = segment_scenes(embed_frames(pair, toy), kDefaultSceneThreshold);
  return pair;
}

inline std::vector<TokenList> sentences_of(const VideoDocPair& pair) {
  std::vector<TokenList> out;
  for (const auto& s : pair.sentences) {
    out.emplace_back(pair.words.begin() + s.start, pair.words.begin() + s.end + 1);
  }
  return out;
}

/// Writes `pairs` manifest entries with PPM frames, documents and references.
inline fs::path write_synthetic_corpus(const fs::path& root, std::size_t pairs, std::uint64_t seed,
                                       std::size_t frames = 6, std::size_t words = 24) {
  std::mt19937_64 rng(seed);
  const fs::path manifest = root / "manifest.jsonl";
  std::ofstream out(manifest);
  for (std::size_t p = 0; p < pairs; ++p) {
    const std::string id = "pair" + std::to_string(p);
    const fs::path frames_dir = root / id / "frames";
    fs::create_directories(frames_dir);
    for (std::size_t t = 0; t < frames; ++t) {
      char name[32];
      std::snprintf(name, sizeof name, "%04zu.ppm", t);
      write_ppm(random_block_frame(rng, 32, 18), frames_dir / name);
    }
    const std::string document = random_document(rng, words);
    std::ofstream(root / id / "document.txt") << document;
    const TokenList tokens = tokenize(document);
    std::string title;
    for (std::size_t i = 0; i < 5 && i < tokens.size(); ++i) title += (i ? " " : "") + tokens[i * 2 % tokens.size()];
    nlohmann::json entry = {{"id", id},
                            {"frames_dir", id + "/frames"},
                            {"document_path", id + "/document.txt"},
                            {"ref_title", title},
                            {"ref_cover_path", id + "/frames/0001.ppm"}};
    out << entry.dump() << '\n';
  }
  return manifest;
}

}  // namespace xmsmo::testing

#endif  // XMSMO_TESTS_SUPPORT_HPP
