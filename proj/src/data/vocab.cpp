#include "pjx/data/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

const char* const kReserved[kReservedTokens] = {"<pad>", "<bos>", "<eos>", "<unk>"};

bool is_terminal_punct(char c) { return c == '.' || c == ',' || c == '!' || c == '?'; }

// Frequency-descending, then lexicographic.
std::vector<std::string> rank_by_frequency(const std::map<std::string, std::size_t>& counts, std::size_t min_freq) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_freq) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  out.reserve(kept.size());
  for (auto& [tok, n] : kept) out.push_back(std::move(tok));
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    while (!current.empty() && is_terminal_punct(current.back())) current.pop_back();
    if (!current.empty()) out.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  flush();
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (const auto* tok : kReserved) add(tok);
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  if (tokens.size() < kReservedTokens) throw InputError("vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < kReservedTokens; ++i) {
    if (tokens[i] != kReserved[i]) throw InputError("vocabulary reserved id " + std::to_string(i) + " reassigned");
  }
  for (auto& t : tokens) {
    if (contains(t)) throw InputError("duplicate vocabulary token \"" + t + "\"");
    add(t);
  }
}

void Vocabulary::add(const std::string& token) {
  ids_.emplace(token, tokens_.size());
  tokens_.push_back(token);
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(std::size_t id) const {
  if (id >= tokens_.size()) return tokens_[kUnkId];
  return tokens_[id];
}

std::vector<std::size_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  for (auto id : ids) {
    if (id < kReservedTokens && id != kUnkId) continue;
    out.push_back(token(id));
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& sentences, std::size_t min_freq) {
  if (min_freq == 0) throw ParameterError("build_vocab: min_freq must be >= 1");
  Vocabulary vocab;
  for (const auto& s : sentences)
    for (const auto& t : s) ++vocab.frequencies_[t];
  for (const auto& tok : rank_by_frequency(vocab.frequencies_, min_freq)) {
    if (!vocab.contains(tok)) vocab.add(tok);
  }
  return vocab;
}

LabelSet::LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (!index_.emplace(labels_[i], i).second) throw InputError("duplicate answer label \"" + labels_[i] + "\"");
  }
}

LabelSet LabelSet::build(const std::vector<std::string>& answers, std::size_t max_labels) {
  std::map<std::string, std::size_t> counts;
  for (const auto& a : answers) ++counts[a];
  auto ranked = rank_by_frequency(counts, 1);
  if (ranked.size() > max_labels) ranked.resize(max_labels);
  return LabelSet(std::move(ranked));
}

std::size_t LabelSet::index(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) throw InputError("unknown answer label \"" + label + "\"");
  return it->second;
}

const std::string& LabelSet::label(std::size_t index) const {
  if (index >= labels_.size()) throw InputError("answer index " + std::to_string(index) + " out of range");
  return labels_[index];
}

}  // namespace pjx
