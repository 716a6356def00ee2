#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gral/embedding.hpp"
#include "gral/graph.hpp"

namespace gral::retrieval {

struct RankedEntry {
  int64_t id = 0;
  double score = 0.0;
};
using RankedList = std::vector<RankedEntry>;

// Exact cosine scan. Ties break toward the smaller id; at most k entries.
RankedList top_k(const std::vector<double>& query,
                 const std::map<int64_t, std::vector<double>>& items, size_t k);

// Rank-based prizes: entry at 0-based rank i gets k - i; everything else 0.
struct PrizeMap {
  std::map<int64_t, double> node_prize;   // by node id
  std::map<int64_t, double> edge_prize;   // by edge position
  double edge_cost = 0.0;                 // C_e, charged per selected edge
  size_t k = 0;

  double node_value(int64_t id) const;
  double edge_value(int64_t index) const;
  // prize(e) - C_e
  double edge_gain(int64_t index) const { return edge_value(index) - edge_cost; }
};

PrizeMap assign_prizes(const RankedList& nodes, const RankedList& edges,
                       size_t k, double edge_cost);

struct RetrievedSubgraph {
  graph::NodeSet nodes;
  std::vector<size_t> edge_indices;  // positions into the parent edge table
  double objective = 0.0;
};

enum class PcstMode { exact, heuristic };

// Maximizes sum of selected node+edge prizes minus edge_cost per selected
// edge, over subgraphs whose selected nodes are connected through selected
// edges. Exact mode enumerates connected node sets (|V| <= 15); heuristic
// mode grows greedily from the best single node and also handles desk-scale
// graphs. Both tie-break deterministically.
RetrievedSubgraph solve_pcst(const graph::TextualGraph& g, const PrizeMap& prizes,
                             PcstMode mode);

// Convenience: objective of an explicit selection (used by tests and logs).
double pcst_objective(const PrizeMap& prizes, const graph::NodeSet& nodes,
                      const std::vector<size_t>& edge_indices);

// query -> ranked nodes/edges -> prizes -> PCST.
RetrievedSubgraph retrieve(const graph::TextualGraph& g,
                           const embed::EmbeddingTable& table,
                           const std::vector<double>& query_vec, size_t k,
                           double edge_cost, PcstMode mode);

}  // namespace gral::retrieval
