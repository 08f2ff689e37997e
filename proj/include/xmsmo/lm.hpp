#ifndef XMSMO_LM_HPP
#define XMSMO_LM_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace xmsmo {

/// Add-k smoothed n-gram language model.
///
/// Each training sentence is left-padded with order-1 start symbols; no end
/// symbol is predicted. Unknown words map to a shared <unk> type, so every
/// context distributes probability over V = |training types| + 1 outcomes.
class NgramLM {
 public:
  static constexpr std::uint32_t kStart = 0;
  static constexpr std::uint32_t kUnknown = 1;

  NgramLM() = default;

  static NgramLM train(const std::vector<std::vector<std::string>>& sentences, int order, double add_k);

  int order() const { return order_; }
  double add_k() const { return add_k_; }
  /// Outcomes per context, including <unk>.
  std::size_t vocab_size() const { return words_.size() - 1; }

  double probability(const std::vector<std::uint32_t>& context, std::uint32_t word) const;

  /// Mean per-token negative log-probability; lower is more fluent.
  double score(const std::vector<std::string>& tokens) const;

  std::uint32_t id(const std::string& word) const;

  void save(std::ostream& out) const;
  static NgramLM load(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static NgramLM load(const std::filesystem::path& path);

  friend bool operator==(const NgramLM& a, const NgramLM& b) {
    return a.order_ == b.order_ && a.add_k_ == b.add_k_ && a.words_ == b.words_ &&
           a.grams_ == b.grams_;
  }

 private:
  void rebuild_index();

  int order_ = 0;
  double add_k_ = 0.0;
  // words_[0] = <s>, words_[1] = <unk>.
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::map<std::vector<std::uint32_t>, std::uint32_t> grams_;
  std::map<std::vector<std::uint32_t>, std::uint64_t> contexts_;
};

}  // namespace xmsmo

#endif  // XMSMO_LM_HPP
