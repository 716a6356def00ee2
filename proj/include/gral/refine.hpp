#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/aligner.hpp"
#include "gral/gateway.hpp"
#include "gral/graph.hpp"

namespace gral::refine {

struct PrunedSubgraph {
  // top-scored nodes, descending probability, ids break ties
  std::vector<int64_t> seeds;
  graph::TextualGraph graph;
  // positions of the kept edges in the source graph's edge table
  std::vector<size_t> parent_edge_indices;
};

// Keeps the top n_seed nodes by score plus their first-order neighbors,
// with the induced edges. scores is indexed by g_r's sorted node ids.
PrunedSubgraph prune(const graph::TextualGraph& g_r,
                     const aligner::NodeScores& scores, size_t n_seed);

struct GenerationBundle {
  std::string prompt;
  std::string linearized_graph;
  size_t token_count = 0;
  std::vector<double> graph_token;  // projected pooled encoding, target_dim wide
  size_t target_dim = 0;

  nlohmann::json to_json() const;
  static GenerationBundle from_json(const nlohmann::json& j);
};

// Pools the trained encoding of the pruned graph into the graph token and
// renders the QA generation prompt.
GenerationBundle make_bundle(const aligner::AlignerModel& model,
                             const PrunedSubgraph& pruned,
                             const aligner::FeatureSet& feats,
                             const std::string& question);

std::string generate_answer(const GenerationBundle& bundle,
                            gateway::LlmGateway& gw);

// Deterministic token proxy: one token per alphanumeric run and one per
// cluster of consecutive non-space punctuation.
size_t count_tokens(const std::string& text);

// Uses the local rule unless a tokenizer service URL is configured, in which
// case POST {base_url}/count with {"text": ...} -> {"count": n}.
class TokenCounter {
 public:
  explicit TokenCounter(std::string service_url = "",
                        std::shared_ptr<gateway::HttpTransport> transport = nullptr);
  size_t count(const std::string& text) const;

 private:
  std::string service_url_;
  std::shared_ptr<gateway::HttpTransport> transport_;
};

}  // namespace gral::refine
