#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vrdie/docmodel/tokenize.hpp"
#include "vrdie/docmodel/types.hpp"

namespace vrdie::doc {

inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kCls = 2;
inline constexpr int kSep = 3;
inline constexpr int kMask = 4;
inline constexpr int kNumReserved = 5;

// Vocabulary key of a token surface: lowercase with every ASCII digit folded to
// '0', so numbers share entries by shape ("35.00" and "12.50" both -> "00.00").
inline std::string vocab_key(std::string_view surface) {
  std::string k = detail::ascii_lower(surface);
  for (char& c : k)
    if (c >= '0' && c <= '9') c = '0';
  return k;
}

class Vocabulary {
 public:
  Vocabulary() : id_to_token_{"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"} {}

  // Keys must be distinct and already normalized by vocab_key.
  explicit Vocabulary(const std::vector<std::string>& keys) : Vocabulary() {
    for (const auto& k : keys) add(k);
  }

  std::size_t size() const { return id_to_token_.size(); }

  int id(std::string_view surface) const {
    auto it = token_to_id_.find(vocab_key(surface));
    return it == token_to_id_.end() ? kUnk : it->second;
  }

  bool contains(std::string_view surface) const { return token_to_id_.count(vocab_key(surface)) > 0; }

  const std::string& token(int id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }

  // Corpus keys in id order (reserved entries excluded).
  std::vector<std::string> keys() const { return {id_to_token_.begin() + kNumReserved, id_to_token_.end()}; }

  std::vector<int> ids(const TokenSequence& seq) const {
    std::vector<int> out;
    out.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens) out.push_back(id(t.surface));
    return out;
  }

  bool operator==(const Vocabulary& o) const { return id_to_token_ == o.id_to_token_; }

 private:
  void add(const std::string& key) {
    if (key.empty()) throw std::invalid_argument("Vocabulary: empty token");
    if (!token_to_id_.emplace(key, static_cast<int>(id_to_token_.size())).second)
      throw std::invalid_argument("Vocabulary: duplicate token " + key);
    id_to_token_.push_back(key);
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Keys with frequency >= min_freq, ordered by (frequency desc, key asc).
inline Vocabulary build_vocab(const std::vector<Document>& corpus, int min_freq = 2) {
  if (min_freq < 1) throw std::invalid_argument("build_vocab: min_freq must be >= 1");
  std::map<std::string, long> freq;
  for (const auto& d : corpus)
    for (const auto& p : d.pages)
      for (const auto& b : p.boxes)
        for (const auto& t : tokenize(b.text).tokens) ++freq[vocab_key(t.surface)];
  std::vector<std::pair<std::string, long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> keys;
  for (const auto& [k, n] : items)
    if (n >= min_freq) keys.push_back(k);
  return Vocabulary(keys);
}

}  // namespace vrdie::doc
