#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gral::config {

struct Paths {
  std::string nodes_file;
  std::string edges_file;
  std::string embeddings_file;
  std::string dataset_file;
  std::string text_fixture_dir;
  std::string llm_fixture_dir;
  std::string output_dir;
};

struct Retrieval {
  size_t k = 10;
  double edge_cost = 0.5;
  std::string mode = "heuristic";  // or "exact"
};

struct Aligner {
  size_t feat_dim = 1024;
  size_t hidden_dim = 1024;
  size_t layers = 4;
  size_t target_dim = 1024;
  double temperature = 0.07;
  size_t steps = 60;
  size_t batch = 8;
  double lr = 1e-5;
  uint64_t seed = 17;
};

struct Prune {
  size_t n_seed = 25;
};

struct Gateway {
  std::string base_url;
  std::string model = "graph-aligned-generator";
  bool offline = true;
  std::string api_key_env = "GRAL_API_KEY";
};

struct EmbeddingProvider {
  std::string base_url;
  bool offline = true;
  std::string api_key_env = "GRAL_EMBED_API_KEY";
};

struct Eval {
  bool judge = false;
};

struct SweepGrid {
  std::vector<size_t> n_seed;
  std::vector<size_t> align_steps;
  std::vector<size_t> top_k;

  bool empty() const {
    return n_seed.empty() && align_steps.empty() && top_k.empty();
  }
};

struct PipelineConfig {
  Paths paths;
  Retrieval retrieval;
  Aligner aligner;
  Prune prune;
  Gateway gateway;
  EmbeddingProvider embedding;
  Eval eval;
  SweepGrid sweep;
  std::string tokenizer_url;

  // SHA-256 of the canonical resolved form; stamped into every artifact.
  std::string config_hash;

  nlohmann::json to_json() const;

  // Parses JSON with ${VAR} environment interpolation inside strings and
  // enforces numeric ranges. check_paths additionally requires every
  // referenced input path to exist.
  static PipelineConfig from_json(nlohmann::json doc, bool check_paths);
  static PipelineConfig load(const std::string& path, bool check_paths);
};

}  // namespace gral::config
