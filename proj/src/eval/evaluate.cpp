#include "pjx/eval/evaluate.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>

#include "pjx/errors.hpp"
#include "pjx/eval/emd.hpp"
#include "pjx/eval/rank.hpp"
#include "pjx/random.hpp"

namespace pjx {

namespace {

// Running means of one PointingStats row.
struct StatsAccumulator {
  double emd = 0.0, rank = 0.0, mass = 0.0;
  std::size_t degenerate = 0, hottest = 0, n = 0;

  void add(const AttentionMap& map, const AttentionMap& reference, bool gt_fields) {
    emd += pjx::emd(map, reference, GroundFrame::kSecondGrid);
    const auto rc = rank_correlation(map, reference);
    rank += rc.value;
    degenerate += rc.degenerate ? 1 : 0;
    if (gt_fields) {
      // Only meaningful when both maps share a grid.
      for (std::size_t i = 0; i < map.size(); ++i) mass += reference.cells[i] > 0.0 ? map.cells[i] : 0.0;
      hottest += reference.cells[map.hottest()] > 0.0 ? 1 : 0;
    }
    ++n;
  }

  PointingStats finish() const {
    PointingStats s;
    if (n == 0) return s;
    const double k = static_cast<double>(n);
    s.mean_emd = emd / k;
    s.mean_rank_correlation = rank / k;
    s.degenerate = degenerate;
    s.mean_mass_on_gt = mass / k;
    s.hottest_on_gt = 100.0 * static_cast<double>(hottest) / k;
    return s;
  }
};

nlohmann::json stats_json(const PointingStats& s, bool gt_fields) {
  nlohmann::json j{{"emd", s.mean_emd}, {"rank_correlation", s.mean_rank_correlation}, {"degenerate", s.degenerate}};
  if (gt_fields) {
    j["mass_on_gt"] = s.mean_mass_on_gt;
    j["hottest_on_gt"] = s.hottest_on_gt;
  }
  return j;
}

nlohmann::json map_rows(const AttentionMap& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    std::vector<double> row(m.cells.begin() + static_cast<std::ptrdiff_t>(r * m.cols),
                            m.cells.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.cols));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

PointingReport evaluate_pointing(const std::vector<ModelMaps>& model, const std::vector<GroundTruthMap>& gt,
                                 std::uint64_t seed, std::size_t baseline_grid) {
  if (baseline_grid < 1) throw ParameterError("evaluate_pointing: baseline grid must be >= 1");
  std::map<std::string, const AttentionMap*> gt_by_id;
  for (const auto& g : gt) {
    if (!gt_by_id.emplace(g.id, &g.gt).second) throw ContractError("evaluate_pointing: duplicate GT id " + g.id);
  }
  if (gt_by_id.size() != model.size()) {
    throw ContractError("evaluate_pointing: " + std::to_string(model.size()) + " model maps for " +
                        std::to_string(gt_by_id.size()) + " ground-truth maps");
  }

  Rng rng(seed);
  const auto uniform = uniform_attention(baseline_grid, baseline_grid);
  StatsAccumulator ans, exp, rnd, uni, cross;
  for (const auto& m : model) {
    const auto it = gt_by_id.find(m.id);
    if (it == gt_by_id.end()) throw ContractError("evaluate_pointing: no ground truth for id " + m.id);
    const auto& g = *it->second;
    ans.add(m.answer_att, g, m.answer_att.rows == g.rows && m.answer_att.cols == g.cols);
    exp.add(m.explain_att, g, m.explain_att.rows == g.rows && m.explain_att.cols == g.cols);
    rnd.add(one_hot_attention(baseline_grid, baseline_grid, rng.index(baseline_grid * baseline_grid)), g, false);
    uni.add(uniform, g, false);
    cross.add(m.answer_att, m.explain_att, false);
  }
  PointingReport r;
  r.count = model.size();
  r.baseline_grid = baseline_grid;
  r.answer_att = ans.finish();
  r.explain_att = exp.finish();
  r.random_point = rnd.finish();
  r.uniform = uni.finish();
  r.answer_vs_explain = cross.finish();
  return r;
}

TextReport evaluate_text(const std::vector<Tokens>& candidates, const std::vector<std::vector<Tokens>>& references,
                         const std::vector<Tokens>& training_sentences) {
  if (candidates.size() != references.size()) throw ContractError("evaluate_text: one reference set per candidate");
  TextReport r;
  r.count = candidates.size();
  if (candidates.empty()) return r;
  const auto stats = build_cider_stats(references);
  double rouge = 0.0, cid = 0.0;
  std::size_t exact = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    rouge += rouge_l(candidates[i], references[i]);
    cid += cider(candidates[i], references[i], stats);
    exact += std::find(references[i].begin(), references[i].end(), candidates[i]) != references[i].end() ? 1 : 0;
  }
  const double n = static_cast<double>(candidates.size());
  r.bleu4 = corpus_bleu4(candidates, references);
  r.rouge_l = rouge / n;
  r.cider = cid / n;
  r.exact_match = 100.0 * static_cast<double>(exact) / n;
  r.duplicate_rate = duplicate_rate(candidates, training_sentences);
  return r;
}

nlohmann::json prediction_to_json(const Prediction& p) {
  return {{"id", p.id},
          {"answer", p.answer},
          {"answer_prob", p.answer_prob},
          {"explanation", [&] {
             std::string s;
             for (std::size_t i = 0; i < p.explanation.size(); ++i) s += (i ? " " : "") + p.explanation[i];
             return s;
           }()},
          {"logprob", p.logprob},
          {"att_answer", map_rows(p.answer_att)},
          {"att_exp", map_rows(p.explain_att)}};
}

std::vector<Prediction> predict(const PjxModel& model, const std::vector<EncodedExample>& examples,
                                const Vocabularies& vocabs, const DecodeOptions& options, bool condition_on_gold) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    std::optional<std::size_t> forced;
    if (condition_on_gold && ex.label) forced = ex.label;
    const auto r = model.explain(ex.features, ex.question, options, forced);
    Prediction p;
    p.id = ex.id;
    p.answer = vocabs.answers.label(r.answer.best);
    p.answer_prob = r.answer.probs[r.answer.best];
    p.explanation = vocabs.explanation.decode(r.explanation.tokens);
    p.logprob = r.explanation.logprob;
    p.answer_att = r.answer_attention;
    p.explain_att = r.explanation.attention;
    out.push_back(std::move(p));
  }
  return out;
}

EvalReport evaluate_predictions(const std::vector<Prediction>& predictions,
                                const std::vector<EncodedExample>& examples,
                                const std::vector<Tokens>& training_sentences, std::uint64_t seed,
                                const std::string& split) {
  if (predictions.size() != examples.size()) throw ContractError("evaluate_predictions: one prediction per example");
  EvalReport r;
  r.split = split;
  r.examples = examples.size();
  std::vector<std::string> answers, golds;
  std::vector<Tokens> candidates;
  std::vector<std::vector<Tokens>> references;
  std::vector<ModelMaps> maps;
  std::vector<GroundTruthMap> gts;
  bool all_gt = true;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& p = predictions[i];
    const auto& ex = examples[i];
    if (p.id != ex.id) throw ContractError("evaluate_predictions: prediction " + p.id + " is not for example " + ex.id);
    answers.push_back(p.answer);
    golds.push_back(ex.answer);
    if (!ex.references.empty()) {
      candidates.push_back(p.explanation);
      references.push_back(ex.references);
    }
    maps.push_back({p.id, p.answer_att, p.explain_att});
    if (ex.attention_gt) {
      gts.push_back({ex.id, *ex.attention_gt});
    } else {
      all_gt = false;
    }
  }
  r.accuracy = accuracy(answers, golds);
  r.text = evaluate_text(candidates, references, training_sentences);
  if (all_gt && !examples.empty()) r.pointing = evaluate_pointing(maps, gts, seed);
  return r;
}

nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j{{"split", r.split},
                   {"examples", r.examples},
                   {"accuracy", r.accuracy},
                   {"text",
                    {{"count", r.text.count},
                     {"bleu4", r.text.bleu4},
                     {"rouge_l", r.text.rouge_l},
                     {"cider", r.text.cider},
                     {"exact_match", r.text.exact_match},
                     {"duplicate_rate", r.text.duplicate_rate}}}};
  if (r.pointing) {
    const auto& p = *r.pointing;
    j["pointing"] = {{"count", p.count},
                     {"baseline_grid", p.baseline_grid},
                     {"answer_att", stats_json(p.answer_att, true)},
                     {"explain_att", stats_json(p.explain_att, true)},
                     {"random_point", stats_json(p.random_point, false)},
                     {"uniform", stats_json(p.uniform, false)},
                     {"answer_vs_explain", stats_json(p.answer_vs_explain, false)}};
  } else {
    j["pointing"] = nullptr;
  }
  return j;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed;
  os << "split " << r.split << ", " << r.examples << " examples, answer accuracy " << std::setprecision(2)
     << r.accuracy << "%\n\n";
  os << std::left << std::setw(12) << "Method" << std::right << std::setw(10) << "BLEU-4" << std::setw(10)
     << "ROUGE-L" << std::setw(10) << "CIDEr" << std::setw(10) << "Exact%" << std::setw(10) << "Dup%" << '\n';
  os << std::left << std::setw(12) << "model" << std::right << std::setprecision(4) << std::setw(10) << r.text.bleu4
     << std::setw(10) << r.text.rouge_l << std::setw(10) << r.text.cider << std::setprecision(2) << std::setw(10)
     << r.text.exact_match << std::setw(10) << r.text.duplicate_rate << "\n";
  if (r.pointing) {
    const auto& p = *r.pointing;
    os << '\n'
       << std::left << std::setw(22) << "Pointing" << std::right << std::setw(10) << "EMD" << std::setw(12)
       << "RankCorr" << '\n';
    auto row = [&](const char* name, const PointingStats& s) {
      os << std::left << std::setw(22) << name << std::right << std::setprecision(4) << std::setw(10) << s.mean_emd
         << std::setw(12) << s.mean_rank_correlation << '\n';
    };
    row("random point", p.random_point);
    row("uniform", p.uniform);
    row("model (ans-att)", p.answer_att);
    row("model (exp-att)", p.explain_att);
    row("ans-att vs exp-att", p.answer_vs_explain);
  }
  return os.str();
}

}  // namespace pjx
