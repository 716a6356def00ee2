#include "gral/evalkit.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "gral/embedding.hpp"
#include "gral/error.hpp"
#include "gral/util.hpp"

namespace gral::evalkit {

std::string normalize_answer(const std::string& text) {
  std::string spaced;
  spaced.reserve(text.size());
  for (unsigned char c : text) {
    if (std::isalnum(c))
      spaced.push_back(char(std::tolower(c)));
    else
      spaced.push_back(' ');
  }
  std::istringstream words(spaced);
  std::string word, out;
  while (words >> word) {
    if (word == "a" || word == "an" || word == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

std::vector<std::string> split_candidates(const std::string& prediction) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string cur;
  auto flush = [&] {
    std::string norm = normalize_answer(cur);
    cur.clear();
    if (norm.empty() || !seen.insert(norm).second) return;
    out.push_back(std::move(norm));
  };
  for (char c : prediction) {
    if (c == '\n' || c == ';')
      flush();
    else
      cur.push_back(c);
  }
  flush();
  return out;
}

Metrics exact_metrics(const std::string& prediction,
                      const std::vector<std::string>& gold) {
  if (gold.empty())
    throw Error(Errc::empty_gold, "no gold answers to score against");
  std::set<std::string> gold_set;
  for (const auto& g : gold) {
    std::string norm = normalize_answer(g);
    if (!norm.empty()) gold_set.insert(norm);
  }
  if (gold_set.empty())
    throw Error(Errc::empty_gold, "gold answers normalize to nothing");

  std::vector<std::string> candidates = split_candidates(prediction);
  Metrics m;
  if (candidates.empty()) return m;

  m.hit1 = gold_set.count(candidates.front()) ? 1 : 0;
  size_t overlap = 0;
  for (const auto& c : candidates)
    if (gold_set.count(c)) ++overlap;
  if (overlap > 0) {
    double precision = double(overlap) / double(candidates.size());
    double recall = double(overlap) / double(gold_set.size());
    m.f1 = 2.0 * precision * recall / (precision + recall);
  }
  m.accuracy =
      (overlap == candidates.size() && overlap == gold_set.size()) ? 1 : 0;
  return m;
}

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  EvalSummary s;
  s.count = records.size();
  if (records.empty()) return s;
  for (const auto& r : records) {
    s.hit1 += r.metrics.hit1;
    s.f1 += r.metrics.f1;
    s.accuracy += r.metrics.accuracy;
    s.mean_tokens += double(r.token_count);
  }
  s.hit1 /= double(s.count);
  s.f1 /= double(s.count);
  s.accuracy /= double(s.count);
  s.mean_tokens /= double(s.count);
  return s;
}

std::string records_csv(const std::vector<EvalRecord>& records) {
  std::string out =
      "id,prediction,hit1,f1,accuracy,token_count,relevance,faithfulness\n";
  for (const auto& r : records)
    out += util::csv_row({r.id, r.prediction, std::to_string(r.metrics.hit1),
                          util::format_double(r.metrics.f1),
                          std::to_string(r.metrics.accuracy),
                          std::to_string(r.token_count), r.relevance_label,
                          r.faithfulness_label});
  return out;
}

AlignmentReport alignment_analysis(
    const aligner::AlignerModel& before, const aligner::AlignerModel& after,
    const std::vector<aligner::AlignTrainExample>& dataset) {
  if (!(before.hyper == after.hyper))
    throw Error(Errc::checkpoint_mismatch,
                "checkpoints trained with different hyperparameters");
  AlignmentReport report;
  std::map<std::string, size_t> counts;
  for (const auto& ex : dataset) {
    std::vector<double> rg_before =
        before.project(num::row_mean(before.encode(ex))).values();
    std::vector<double> rg_after =
        after.project(num::row_mean(after.encode(ex))).values();
    const std::vector<std::pair<std::string, const std::vector<double>*>>
        targets{{"query", &ex.query_vec},
                {"rationale", &ex.rationale_vec},
                {"graph_text", &ex.graph_vec}};
    for (const auto& [name, vec] : targets) {
      if (vec->empty()) continue;
      report.rows.push_back(
          AlignmentRow{ex.id, name,
                       embed::cosine(rg_before, before.project(*vec)),
                       embed::cosine(rg_after, after.project(*vec))});
    }
  }
  for (const auto& row : report.rows) {
    report.mean_before[row.target] += row.cos_before;
    report.mean_after[row.target] += row.cos_after;
    counts[row.target] += 1;
  }
  for (auto& [name, v] : report.mean_before) v /= double(counts[name]);
  for (auto& [name, v] : report.mean_after) v /= double(counts[name]);
  return report;
}

std::string alignment_csv(const AlignmentReport& report) {
  std::string out = "example_id,target,cos_before,cos_after\n";
  for (const auto& r : report.rows)
    out += util::csv_row({r.example_id, r.target,
                          util::format_double(r.cos_before),
                          util::format_double(r.cos_after)});
  return out;
}

std::string alignment_plot_data(const AlignmentReport& report) {
  std::string out = "x,y,series\n";
  std::map<std::string, size_t> index;
  for (const auto& r : report.rows) {
    size_t x = index[r.target]++;
    out += util::csv_row({std::to_string(x), util::format_double(r.cos_before),
                          r.target + "/unaligned"});
    out += util::csv_row({std::to_string(x), util::format_double(r.cos_after),
                          r.target + "/aligned"});
  }
  return out;
}

}  // namespace gral::evalkit
