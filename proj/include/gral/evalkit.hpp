#pragma once

#include <map>
#include <string>
#include <vector>

#include "gral/aligner.hpp"

namespace gral::evalkit {

struct QAExample {
  std::string id;
  std::string question;
  std::vector<std::string> gold_answers;
};

struct Metrics {
  int hit1 = 0;
  double f1 = 0.0;
  int accuracy = 0;
};

// lowercase, punctuation -> space, collapsed whitespace, articles dropped
std::string normalize_answer(const std::string& text);

// Split on newlines/semicolons, normalize, drop empties, dedup keeping order.
std::vector<std::string> split_candidates(const std::string& prediction);

// hit1: the first candidate equals some gold answer. f1: set-F1 between the
// candidate set and the gold set under exact normalized matching. accuracy:
// the two sets are equal.
Metrics exact_metrics(const std::string& prediction,
                      const std::vector<std::string>& gold);

struct EvalRecord {
  std::string id;
  std::string prediction;
  Metrics metrics;
  size_t token_count = 0;
  std::string relevance_label;     // optional judge outputs
  std::string faithfulness_label;
};

struct EvalSummary {
  size_t count = 0;
  double hit1 = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double mean_tokens = 0.0;
};

EvalSummary summarize(const std::vector<EvalRecord>& records);
std::string records_csv(const std::vector<EvalRecord>& records);

struct AlignmentRow {
  std::string example_id;
  std::string target;  // "query" | "rationale" | "graph_text"
  double cos_before = 0.0;
  double cos_after = 0.0;
};

struct AlignmentReport {
  std::vector<AlignmentRow> rows;              // |dataset| x 3 targets
  std::map<std::string, double> mean_before;   // per target
  std::map<std::string, double> mean_after;
};

// Alignment analysis: cosine between the projected pooled graph encoding
// and the projected query / rationale / linearized-graph embeddings, for the
// untrained and trained checkpoints. Hyperparameters must match.
AlignmentReport alignment_analysis(
    const aligner::AlignerModel& before, const aligner::AlignerModel& after,
    const std::vector<aligner::AlignTrainExample>& dataset);

std::string alignment_csv(const AlignmentReport& report);
// (x=example index, y=cosine, series=target/phase) triples for plotting.
std::string alignment_plot_data(const AlignmentReport& report);

}  // namespace gral::evalkit
