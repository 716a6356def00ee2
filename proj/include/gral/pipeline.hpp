#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/aligner.hpp"
#include "gral/config.hpp"
#include "gral/embedding.hpp"
#include "gral/gateway.hpp"
#include "gral/graph.hpp"

namespace gral::pipeline {

struct DatasetItem {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
};

// JSON array of {id, question, answers}; ids must be unique and
// filename-safe since artifacts are keyed by them.
std::vector<DatasetItem> load_dataset(const std::string& path);

// Materializes an explicit (nodes, edge positions) selection against the
// parent graph.
graph::TextualGraph materialize(const graph::TextualGraph& parent,
                                const graph::NodeSet& node_ids,
                                const std::vector<size_t>& edge_indices);

// Assembles the per-example record the aligner consumes. Feature rows come
// from the embedding table; query/anchor/rationale/graph vectors from the
// text embedder. Pass empty anchor/rationale texts for score-only use.
aligner::AlignTrainExample make_align_example(
    const graph::TextualGraph& parent, const embed::EmbeddingTable& table,
    embed::TextEmbedder& embedder, const DatasetItem& item,
    const graph::NodeSet& node_ids, const std::vector<size_t>& edge_indices,
    const std::string& anchors_text, const std::string& rationale_text);

// Staged artifact runner. Each stage validates its prerequisites (the prior
// stage's meta.json), reads only inputs and staged artifacts, and writes its
// own directory under output_dir plus a meta.json stamped with the config
// hash. Byte-determinism: no timestamps, sorted keys, fixed float formatting.
class Pipeline {
 public:
  explicit Pipeline(config::PipelineConfig cfg);

  static std::vector<std::string> stage_names();

  // Runs one stage and returns its meta document. dry_run only reports
  // whether prerequisites are in place, without locking or writing.
  nlohmann::json run(const std::string& stage, bool dry_run = false);

  // Cassette recording: route gateway/embedder through the live services and
  // write fixture files alongside.
  void set_record(bool record) { record_ = record; }

  const config::PipelineConfig& config() const { return cfg_; }

 private:
  nlohmann::json ingest();
  nlohmann::json retrieve_stage();
  nlohmann::json extract_stage();
  nlohmann::json train_stage();
  nlohmann::json prune_stage();
  nlohmann::json generate_stage();
  nlohmann::json eval_stage();
  nlohmann::json analyze_stage();
  nlohmann::json sweep_stage();

  std::string out(const std::string& rel) const;
  void put_text(const std::string& rel, const std::string& content);
  void put_json(const std::string& rel, const nlohmann::json& doc);
  nlohmann::json get_json(const std::string& rel) const;
  void need(const std::string& stage) const;

  const graph::TextualGraph& graph();
  const embed::EmbeddingTable& table();
  const std::vector<DatasetItem>& dataset();
  embed::TextEmbedder& embedder();
  gateway::LlmGateway& gw();
  aligner::AlignerHyper hyper() const;

  aligner::AlignTrainExample example_from_artifacts(const DatasetItem& item,
                                                    bool with_texts);

  config::PipelineConfig cfg_;
  bool record_ = false;
  std::optional<graph::TextualGraph> graph_;
  std::optional<embed::EmbeddingTable> table_;
  std::optional<std::vector<DatasetItem>> dataset_;
  std::unique_ptr<embed::TextEmbedder> embedder_;
  std::unique_ptr<gateway::LlmGateway> gw_;
};

}  // namespace gral::pipeline
