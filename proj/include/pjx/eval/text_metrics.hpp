#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace pjx {

using Tokens = std::vector<std::string>;

// Zero-count n-gram precisions are replaced by this numerator.
inline constexpr double kBleuEpsilon = 1e-9;
inline constexpr double kRougeBeta = 1.2;

// Sentence BLEU-4: geometric mean of clipped 1..4-gram precisions times the
// brevity penalty against the reference closest in length (shorter on ties).
// Empty candidate gives 0. Throws ContractError without references.
double bleu4(const Tokens& candidate, const std::vector<Tokens>& references);

// Corpus BLEU-4: clipped counts, totals and lengths pooled before the ratio.
double corpus_bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references);

std::size_t lcs_length(const Tokens& a, const Tokens& b);

// LCS F-measure with beta = 1.2, best over references.
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references);

// Document frequencies of 1..4-grams over the reference sets of an
// evaluation corpus (one document per item).
struct CiderStats {
  std::size_t documents = 0;
  std::map<Tokens, std::size_t> document_frequency;
};

CiderStats build_cider_stats(const std::vector<std::vector<Tokens>>& references);

// 10 x mean over n = 1..4 of the average cosine similarity between TF-IDF
// n-gram vectors of the candidate and each reference. IDF is
// log((1 + N) / (1 + df)) + 1. Throws ContractError when `stats` is empty.
double cider(const Tokens& candidate, const std::vector<Tokens>& references, const CiderStats& stats);

// Percentage of generated sentences that occur verbatim in `training`.
double duplicate_rate(const std::vector<Tokens>& generated, const std::vector<Tokens>& training);

// Top-1 exact-match accuracy in percent. Throws ContractError on length mismatch.
double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds);

// Consensus accuracy in percent: each item scores min(#annotators agreeing / 3, 1).
double consensus_accuracy(const std::vector<std::string>& predictions,
                          const std::vector<std::vector<std::string>>& annotator_answers);

}  // namespace pjx
