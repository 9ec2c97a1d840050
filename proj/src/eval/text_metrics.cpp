#include "pjx/eval/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pjx/errors.hpp"

namespace pjx {

namespace {

constexpr std::size_t kMaxOrder = 4;

using NgramCounts = std::map<Tokens, std::size_t>;

NgramCounts ngrams(const Tokens& s, std::size_t n) {
  NgramCounts out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[Tokens(s.begin() + static_cast<std::ptrdiff_t>(i),
                                                               s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

struct BleuCounts {
  double clipped[kMaxOrder] = {};
  double total[kMaxOrder] = {};
  double candidate_length = 0.0;
  double reference_length = 0.0;
};

void require_references(const std::vector<Tokens>& references, const char* who) {
  if (references.empty()) throw ContractError(std::string(who) + ": at least one reference is required");
}

BleuCounts bleu_counts(const Tokens& candidate, const std::vector<Tokens>& references) {
  BleuCounts c;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    NgramCounts max_ref;
    for (const auto& r : references)
      for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
    for (const auto& [g, k] : ngrams(candidate, n)) {
      const auto it = max_ref.find(g);
      c.clipped[n - 1] += static_cast<double>(std::min(k, it == max_ref.end() ? 0 : it->second));
      c.total[n - 1] += static_cast<double>(k);
    }
  }
  c.candidate_length = static_cast<double>(candidate.size());
  // Closest reference length, the shorter one on ties.
  std::size_t best = references.front().size();
  for (const auto& r : references) {
    const auto d = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
  }
  c.reference_length = static_cast<double>(best);
  return c;
}

double bleu_from_counts(const BleuCounts& c) {
  if (c.candidate_length == 0.0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    const double numerator = c.clipped[n] > 0.0 ? c.clipped[n] : kBleuEpsilon;
    const double denominator = std::max(c.total[n], 1.0);
    log_sum += std::log(numerator / denominator);
  }
  const double bp = c.candidate_length > c.reference_length
                        ? 1.0
                        : std::exp(1.0 - c.reference_length / c.candidate_length);
  return bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

double idf(const CiderStats& stats, const Tokens& gram) {
  const auto it = stats.document_frequency.find(gram);
  const double df = it == stats.document_frequency.end() ? 0.0 : static_cast<double>(it->second);
  return std::log((1.0 + static_cast<double>(stats.documents)) / (1.0 + df)) + 1.0;
}

std::map<Tokens, double> tfidf(const Tokens& s, std::size_t n, const CiderStats& stats) {
  std::map<Tokens, double> out;
  for (const auto& [g, k] : ngrams(s, n)) out[g] = static_cast<double>(k) * idf(stats, g);
  return out;
}

double cosine(const std::map<Tokens, double>& a, const std::map<Tokens, double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, v] : a) {
    na += v * v;
    if (const auto it = b.find(g); it != b.end()) dot += v * it->second;
  }
  for (const auto& [g, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

double bleu4(const Tokens& candidate, const std::vector<Tokens>& references) {
  require_references(references, "bleu4");
  return bleu_from_counts(bleu_counts(candidate, references));
}

double corpus_bleu4(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references) {
  if (candidates.size() != references.size()) throw ContractError("corpus_bleu4: one reference set per candidate");
  BleuCounts total;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require_references(references[i], "corpus_bleu4");
    const auto c = bleu_counts(candidates[i], references[i]);
    for (std::size_t n = 0; n < kMaxOrder; ++n) {
      total.clipped[n] += c.clipped[n];
      total.total[n] += c.total[n];
    }
    total.candidate_length += c.candidate_length;
    total.reference_length += c.reference_length;
  }
  return bleu_from_counts(total);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> row(b.size() + 1, 0), next(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      next[j] = a[i - 1] == b[j - 1] ? row[j - 1] + 1 : std::max(row[j], next[j - 1]);
    }
    std::swap(row, next);
  }
  return row[b.size()];
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  require_references(references, "rouge_l");
  if (candidate.empty()) return 0.0;
  double best = 0.0;
  const double b2 = kRougeBeta * kRougeBeta;
  for (const auto& r : references) {
    if (r.empty()) continue;
    const double lcs = static_cast<double>(lcs_length(candidate, r));
    if (lcs == 0.0) continue;
    const double precision = lcs / static_cast<double>(candidate.size());
    const double recall = lcs / static_cast<double>(r.size());
    best = std::max(best, (1.0 + b2) * precision * recall / (recall + b2 * precision));
  }
  return best;
}

CiderStats build_cider_stats(const std::vector<std::vector<Tokens>>& references) {
  CiderStats stats;
  stats.documents = references.size();
  for (const auto& refs : references) {
    std::set<Tokens> seen;
    for (const auto& r : refs)
      for (std::size_t n = 1; n <= kMaxOrder; ++n)
        for (const auto& [g, k] : ngrams(r, n)) seen.insert(g);
    for (const auto& g : seen) ++stats.document_frequency[g];
  }
  return stats;
}

double cider(const Tokens& candidate, const std::vector<Tokens>& references, const CiderStats& stats) {
  if (stats.documents == 0) throw ContractError("cider: corpus statistics are empty");
  require_references(references, "cider");
  double score = 0.0;
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const auto c = tfidf(candidate, n, stats);
    double sum = 0.0;
    for (const auto& r : references) sum += cosine(c, tfidf(r, n, stats));
    score += sum / static_cast<double>(references.size());
  }
  return 10.0 * score / static_cast<double>(kMaxOrder);
}

double duplicate_rate(const std::vector<Tokens>& generated, const std::vector<Tokens>& training) {
  if (generated.empty()) return 0.0;
  const std::set<Tokens> train(training.begin(), training.end());
  std::size_t copies = 0;
  for (const auto& g : generated) copies += train.count(g);
  return 100.0 * static_cast<double>(copies) / static_cast<double>(generated.size());
}

double accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& golds) {
  if (predictions.size() != golds.size()) {
    throw ContractError("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(golds.size()) + " gold answers");
  }
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hits += predictions[i] == golds[i] ? 1 : 0;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(golds.size());
}

double consensus_accuracy(const std::vector<std::string>& predictions,
                          const std::vector<std::vector<std::string>>& annotator_answers) {
  if (predictions.size() != annotator_answers.size()) {
    throw ContractError("consensus_accuracy: one annotator set per prediction");
  }
  if (predictions.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto agree = std::count(annotator_answers[i].begin(), annotator_answers[i].end(), predictions[i]);
    total += std::min(static_cast<double>(agree) / 3.0, 1.0);
  }
  return 100.0 * total / static_cast<double>(predictions.size());
}

}  // namespace pjx
