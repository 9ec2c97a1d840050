#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pjx/model_config.hpp"

namespace pjx {

// Lowercase, split on whitespace, strip trailing . , ! ? from every token and
// drop tokens left empty.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

// Token <-> id bijection with PAD/BOS/EOS/UNK fixed at ids 0-3.
class Vocabulary {
 public:
  Vocabulary();
  // Restores a vocabulary from its id-ordered token list (reserved tokens first).
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  // UNK for unknown tokens.
  std::size_t id(const std::string& token) const;
  const std::string& token(std::size_t id) const;

  std::vector<std::size_t> encode(const std::vector<std::string>& tokens) const;
  // PAD, BOS and EOS are skipped; UNK and out-of-range ids decode as "<unk>".
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  // Occurrence counts of every token seen while building, kept or not.
  const std::map<std::string, std::size_t>& frequencies() const { return frequencies_; }

  friend Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, std::size_t min_freq);

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::map<std::string, std::size_t> frequencies_;
};

// Tokens with frequency >= min_freq get ids in descending frequency, then
// lexicographic order. Throws ParameterError when min_freq == 0.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, std::size_t min_freq);

// Whole-string answer classes, ordered by descending frequency then
// lexicographically, capped at `max_labels`.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> labels);

  static LabelSet build(const std::vector<std::string>& answers, std::size_t max_labels);

  std::size_t size() const { return labels_.size(); }
  bool contains(const std::string& label) const { return index_.count(label) != 0; }
  // Throws InputError for labels outside the set.
  std::size_t index(const std::string& label) const;
  const std::string& label(std::size_t index) const;
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace pjx
