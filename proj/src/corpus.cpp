#include "xmsmo/corpus.hpp"

#include "xmsmo/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace xmsmo {

namespace fs = std::filesystem;
using json = nlohmann::json;

TokenList tokenize(std::string_view text) {
  TokenList tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isspace(c)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (c < 0x80 && std::ispunct(c)) {
      continue;
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

SplitText split_sentences(std::string_view text, const Tokenizer& tokenizer) {
  SplitText out;
  Index sentence_start = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    if (end == pos) break;
    std::string_view chunk = text.substr(pos, end - pos);
    pos = end;

    for (auto& token : tokenizer(chunk)) out.tokens.push_back(std::move(token));

    // Closing quotes/brackets may follow the terminal mark: `end."`
    std::size_t last = chunk.find_last_not_of("\"')]}");
    const bool terminal = last != std::string_view::npos &&
                          (chunk[last] == '.' || chunk[last] == '!' || chunk[last] == '?');
    if (terminal && Index(out.tokens.size()) > sentence_start) {
      out.sentences.push_back({sentence_start, Index(out.tokens.size()) - 1});
      sentence_start = Index(out.tokens.size());
    }
  }
  if (Index(out.tokens.size()) > sentence_start) {
    out.sentences.push_back({sentence_start, Index(out.tokens.size()) - 1});
  }
  return out;
}

std::vector<SceneSpan> segment_scenes(const Eigen::MatrixXd& frame_embeddings, double threshold) {
  require(threshold >= 0.0 && threshold <= 2.0, ErrorKind::InvalidArgument,
          "scene threshold must lie in [0, 2]");
  const Index count = frame_embeddings.rows();
  require(count >= 1, ErrorKind::EmptyInput, "scene segmentation needs at least one frame");

  std::vector<SceneSpan> scenes;
  Index start = 0;
  for (Index i = 0; i + 1 < count; ++i) {
    const double na = frame_embeddings.row(i).norm();
    const double nb = frame_embeddings.row(i + 1).norm();
    double distance;
    if (na == 0.0 || nb == 0.0) {
      distance = (na == 0.0 && nb == 0.0) ? 0.0 : 1.0;
    } else {
      distance = 1.0 - frame_embeddings.row(i).dot(frame_embeddings.row(i + 1)) / (na * nb);
    }
    if (distance > threshold) {
      scenes.push_back({start, i});
      start = i + 1;
    }
  }
  scenes.push_back({start, count - 1});
  return scenes;
}

void validate_partition(const std::vector<Span>& spans, Index count, std::string_view what) {
  Index expected = 0;
  for (const Span& span : spans) {
    require(span.start == expected && span.end >= span.start, ErrorKind::InvalidArgument,
            std::string(what) + " spans do not tile the index range");
    expected = span.end + 1;
  }
  require(expected == count, ErrorKind::InvalidArgument,
          std::string(what) + " spans do not cover all " + std::to_string(count) + " items");
}

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::string numbered_id(char prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%03zu", prefix, i);
  return buf;
}

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

SplitText read_document(const ManifestEntry& entry, const Tokenizer& tokenizer) {
  require(fs::exists(entry.document_path), ErrorKind::Io,
          "document not found: " + entry.document_path.string());
  SplitText text = split_sentences(read_text(entry.document_path), tokenizer);
  require(!text.tokens.empty(), ErrorKind::EmptyInput,
          "document has no words: " + entry.document_path.string());
  return text;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  require(bool(in), ErrorKind::Io, "cannot open manifest " + path.string());
  const fs::path base = path.parent_path();
  Manifest manifest;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Format, where + ": " + e.what());
    }
    auto text_field = [&](const char* key) -> std::string {
      require(record.contains(key) && record[key].is_string(), ErrorKind::Format,
              where + ": missing string field '" + key + "'");
      std::string value = record[key].get<std::string>();
      require(!value.empty(), ErrorKind::Format, where + ": empty field '" + key + "'");
      return value;
    };
    ManifestEntry entry;
    entry.id = text_field("id");
    entry.frames_dir = resolve(base, text_field("frames_dir"));
    entry.document_path = resolve(base, text_field("document_path"));
    if (record.contains("ref_title") && !record["ref_title"].is_null()) {
      entry.ref_title = text_field("ref_title");
    }
    if (record.contains("ref_cover_path") && !record["ref_cover_path"].is_null()) {
      entry.ref_cover_path = resolve(base, text_field("ref_cover_path"));
    }
    require(ids.insert(entry.id).second, ErrorKind::Format,
            where + ": duplicate id '" + entry.id + "'");
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
  require(fs::is_directory(dir), ErrorKind::Io, "frames directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file() && is_image_file(item.path())) files.push_back(item.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

VideoDocPair load_pair(const ManifestEntry& entry, const LoadOptions& options) {
  require(options.frame_stride >= 1, ErrorKind::InvalidArgument, "frame stride must be >= 1");
  require(options.frame_cap >= 1, ErrorKind::InvalidArgument, "frame cap must be >= 1");

  VideoDocPair pair;
  pair.id = entry.id;

  const auto files = list_frame_files(entry.frames_dir);
  pair.source_frame_count = files.size();
  require(!files.empty(), ErrorKind::EmptyInput, "no frames in " + entry.frames_dir.string());
  for (std::size_t i = 0; i < files.size() && pair.frames.size() < options.frame_cap;
       i += options.frame_stride) {
    RgbImage frame = read_image(files[i]);
    if (options.width > 0 && options.height > 0) {
      frame = resize(frame, options.width, options.height);
    }
    if (!pair.frames.empty()) {
      require(frame.width == pair.frames.front().width && frame.height == pair.frames.front().height,
              ErrorKind::InvalidArgument, "frames of " + entry.id + " differ in resolution");
    }
    pair.frames.push_back(std::move(frame));
    pair.frame_paths.push_back(files[i]);
  }

  SplitText text = read_document(entry, options.tokenizer);
  pair.words = std::move(text.tokens);
  pair.sentences = std::move(text.sentences);

  if (entry.ref_title) pair.ref_title = options.tokenizer(*entry.ref_title);
  if (entry.ref_cover_path) {
    pair.ref_cover_path = entry.ref_cover_path;
    pair.ref_cover = read_image(*entry.ref_cover_path);
  }

  pair.scenes = segment_scenes(embed_frames(pair, options.embeddings), options.scene_threshold);
  return pair;
}

TokenEmbeddings TokenEmbeddings::toy(int dim, std::uint64_t seed) {
  require(dim >= 1, ErrorKind::InvalidArgument, "embedding dim must be >= 1");
  TokenEmbeddings out;
  out.dim_ = dim;
  out.seed_ = seed;
  return out;
}

TokenEmbeddings TokenEmbeddings::from_matrix(EmbeddingMatrix matrix) {
  TokenEmbeddings out;
  out.dim_ = int(matrix.dim());
  out.matrix_ = std::move(matrix);
  return out;
}

std::optional<Eigen::VectorXd> TokenEmbeddings::lookup(std::string_view token) const {
  if (!matrix_) return toy_embed_token(token, dim_, seed_);
  auto row = matrix_->find(token);
  if (!row) return std::nullopt;
  return matrix_->row(*row);
}

namespace {

EmbeddingMatrix read_pair_file(const VideoDocPair& pair, const EmbeddingSource& source,
                               const char* name) {
  return read_embeddings(source.directory / pair.id / name);
}

}  // namespace

Eigen::MatrixXd embed_frames(const VideoDocPair& pair, const EmbeddingSource& source) {
  if (source.toy()) {
    Eigen::MatrixXd out(pair.frame_count(), source.dim);
    for (Index i = 0; i < pair.frame_count(); ++i) {
      out.row(i) = toy_embed_frame(pair.frames[i], source.dim).transpose();
    }
    return out;
  }
  EmbeddingMatrix frames = read_pair_file(pair, source, "frames.xmeb");
  require(frames.rows() == pair.frame_count(), ErrorKind::Format,
          pair.id + "/frames.xmeb has " + std::to_string(frames.rows()) + " rows, expected " +
              std::to_string(pair.frame_count()));
  return frames.to_double();
}

PairEmbeddings load_embeddings(const VideoDocPair& pair, const EmbeddingSource& source) {
  if (source.toy()) {
    Eigen::MatrixXd words(pair.word_count(), source.dim);
    for (Index i = 0; i < pair.word_count(); ++i) {
      words.row(i) = toy_embed_token(pair.words[i], source.dim, source.seed).transpose();
    }
    return {embed_frames(pair, source), std::move(words), TokenEmbeddings::toy(source.dim, source.seed)};
  }
  EmbeddingMatrix words = read_pair_file(pair, source, "words.xmeb");
  require(words.rows() == pair.word_count(), ErrorKind::Format,
          pair.id + "/words.xmeb has " + std::to_string(words.rows()) + " rows, expected " +
              std::to_string(pair.word_count()));
  EmbeddingMatrix tokens = read_pair_file(pair, source, "tokens.xmeb");
  Eigen::MatrixXd frames = embed_frames(pair, source);
  require(frames.cols() == words.dim(), ErrorKind::Format,
          pair.id + ": frame and word embeddings differ in width");
  return {std::move(frames), words.to_double(), TokenEmbeddings::from_matrix(std::move(tokens))};
}

void write_toy_embeddings(const VideoDocPair& pair, const EmbeddingSource& source,
                          const fs::path& out_dir) {
  const fs::path dir = out_dir / pair.id;
  fs::create_directories(dir);
  EmbeddingSource toy = source;
  toy.directory.clear();

  std::vector<std::string> frame_ids;
  for (Index i = 0; i < pair.frame_count(); ++i) frame_ids.push_back(numbered_id('f', i));
  write_embeddings(EmbeddingMatrix(frame_ids, embed_frames(pair, toy).cast<float>()),
                   dir / "frames.xmeb");

  std::vector<std::string> word_ids;
  RowMatrixXf words(pair.word_count(), toy.dim);
  for (Index i = 0; i < pair.word_count(); ++i) {
    word_ids.push_back(numbered_id('w', i));
    words.row(i) = toy_embed_token(pair.words[i], toy.dim, toy.seed).cast<float>().transpose();
  }
  write_embeddings(EmbeddingMatrix(word_ids, std::move(words)), dir / "words.xmeb");

  std::vector<std::string> types;
  std::set<std::string> seen;
  for (const auto& w : pair.words) {
    if (seen.insert(w).second) types.push_back(w);
  }
  RowMatrixXf tokens(Index(types.size()), toy.dim);
  for (Index i = 0; i < Index(types.size()); ++i) {
    tokens.row(i) = toy_embed_token(types[i], toy.dim, toy.seed).cast<float>().transpose();
  }
  write_embeddings(EmbeddingMatrix(types, std::move(tokens)), dir / "tokens.xmeb");
}

}  // namespace xmsmo
