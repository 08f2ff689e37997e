#include "xmsmo/lm.hpp"

#include "xmsmo/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace xmsmo {

namespace {

constexpr std::uint32_t kLmVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(in.gcount() == std::streamsize(sizeof(T)), ErrorKind::Format,
          std::string("truncated language model reading ") + what);
  return value;
}

}  // namespace

void NgramLM::rebuild_index() {
  index_.clear();
  for (std::uint32_t i = 2; i < words_.size(); ++i) index_.emplace(words_[i], i);
  contexts_.clear();
  for (const auto& [gram, count] : grams_) {
    contexts_[std::vector<std::uint32_t>(gram.begin(), gram.end() - 1)] += count;
  }
}

NgramLM NgramLM::train(const std::vector<std::vector<std::string>>& sentences, int order,
                       double add_k) {
  require(order >= 1, ErrorKind::InvalidArgument, "language model order must be >= 1");
  require(add_k >= 0.0 && std::isfinite(add_k), ErrorKind::InvalidArgument,
          "add-k constant must be finite and >= 0");
  NgramLM lm;
  lm.order_ = order;
  lm.add_k_ = add_k;
  lm.words_ = {"<s>", "<unk>"};
  bool any = false;
  for (const auto& sentence : sentences) {
    for (const auto& w : sentence) {
      if (lm.index_.emplace(w, std::uint32_t(lm.words_.size())).second) lm.words_.push_back(w);
    }
  }
  for (const auto& sentence : sentences) {
    if (sentence.empty()) continue;
    any = true;
    std::vector<std::uint32_t> padded(std::size_t(order - 1), kStart);
    for (const auto& w : sentence) padded.push_back(lm.index_.at(w));
    for (std::size_t t = std::size_t(order - 1); t < padded.size(); ++t) {
      ++lm.grams_[std::vector<std::uint32_t>(padded.begin() + std::ptrdiff_t(t + 1 - order),
                                             padded.begin() + std::ptrdiff_t(t + 1))];
    }
  }
  require(any, ErrorKind::EmptyInput, "language model corpus has no tokens");
  lm.rebuild_index();
  return lm;
}

std::uint32_t NgramLM::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

double NgramLM::probability(const std::vector<std::uint32_t>& context, std::uint32_t word) const {
  std::vector<std::uint32_t> gram = context;
  gram.push_back(word);
  auto g = grams_.find(gram);
  auto c = contexts_.find(context);
  const double joint = g == grams_.end() ? 0.0 : double(g->second);
  const double total = c == contexts_.end() ? 0.0 : double(c->second);
  const double denominator = total + add_k_ * double(vocab_size());
  if (denominator <= 0.0) return 0.0;
  return (joint + add_k_) / denominator;
}

double NgramLM::score(const std::vector<std::string>& tokens) const {
  require(order_ >= 1, ErrorKind::InvalidArgument, "language model is not trained");
  require(!tokens.empty(), ErrorKind::EmptyInput, "cannot score an empty sentence");
  std::vector<std::uint32_t> history(std::size_t(order_ - 1), kStart);
  double nll = 0.0;
  for (const auto& w : tokens) {
    const std::uint32_t id_w = id(w);
    const double p = probability(history, id_w);
    if (p <= 0.0) return std::numeric_limits<double>::infinity();
    nll -= std::log(p);
    if (!history.empty()) {
      history.erase(history.begin());
      history.push_back(id_w);
    }
  }
  return nll / double(tokens.size());
}

void NgramLM::save(std::ostream& out) const {
  out.write("XMLM", 4);
  put<std::uint32_t>(out, kLmVersion);
  put<std::uint32_t>(out, std::uint32_t(order_));
  put<double>(out, add_k_);
  put<std::uint32_t>(out, std::uint32_t(words_.size()));
  for (const auto& w : words_) {
    require(w.size() <= 0xFFFF, ErrorKind::InvalidArgument, "word too long for LM table");
    put<std::uint16_t>(out, std::uint16_t(w.size()));
    out.write(w.data(), std::streamsize(w.size()));
  }
  put<std::uint32_t>(out, std::uint32_t(grams_.size()));
  for (const auto& [gram, count] : grams_) {
    for (std::uint32_t id_w : gram) put<std::uint32_t>(out, id_w);
    put<std::uint32_t>(out, count);
  }
  require(bool(out), ErrorKind::Io, "language model write failed");
}

NgramLM NgramLM::load(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  require(in.gcount() == 4 && std::memcmp(magic, "XMLM", 4) == 0, ErrorKind::Format,
          "bad language model magic");
  require(get<std::uint32_t>(in, "version") == kLmVersion, ErrorKind::Format,
          "unsupported language model version");
  NgramLM lm;
  lm.order_ = int(get<std::uint32_t>(in, "order"));
  lm.add_k_ = get<double>(in, "add-k");
  require(lm.order_ >= 1 && lm.add_k_ >= 0.0, ErrorKind::Format, "bad language model header");
  const auto vocab = get<std::uint32_t>(in, "vocabulary size");
  require(vocab >= 2, ErrorKind::Format, "language model vocabulary lacks reserved symbols");
  for (std::uint32_t i = 0; i < vocab; ++i) {
    const auto len = get<std::uint16_t>(in, "word length");
    std::string w(len, '\0');
    in.read(w.data(), len);
    require(in.gcount() == len, ErrorKind::Format, "truncated language model vocabulary");
    lm.words_.push_back(std::move(w));
  }
  const auto entries = get<std::uint32_t>(in, "n-gram count");
  for (std::uint32_t e = 0; e < entries; ++e) {
    std::vector<std::uint32_t> gram(std::size_t(lm.order_));
    for (auto& id_w : gram) {
      id_w = get<std::uint32_t>(in, "n-gram id");
      require(id_w < vocab, ErrorKind::Format, "n-gram id out of range");
    }
    lm.grams_[gram] = get<std::uint32_t>(in, "n-gram count");
  }
  lm.rebuild_index();
  return lm;
}

void NgramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require(bool(out), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  save(out);
}

NgramLM NgramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(bool(in), ErrorKind::Io, "cannot open " + path.string());
  return load(in);
}

}  // namespace xmsmo
