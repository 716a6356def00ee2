#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gral::graph {

// Sorted, duplicate-free node ids.
using NodeSet = std::vector<int64_t>;

struct Edge {
  int64_t src = 0;
  std::string text;
  int64_t dst = 0;

  bool operator==(const Edge&) const = default;
};

// Undirected multigraph with free-text attributes on nodes and edges.
// Immutable once constructed; loaders validate before building.
class TextualGraph {
 public:
  TextualGraph() = default;
  TextualGraph(std::map<int64_t, std::string> nodes, std::vector<Edge> edges);

  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const { return edges_.size(); }

  bool has_node(int64_t id) const { return nodes_.count(id) != 0; }
  const std::string& node_text(int64_t id) const;
  const std::map<int64_t, std::string>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }

  NodeSet node_ids() const;
  // Distinct adjacent node ids; a self loop makes a node its own neighbor.
  NodeSet neighbors(int64_t id) const;
  // Positions into edges() touching the node, ascending.
  std::vector<size_t> incident_edges(int64_t id) const;

  bool operator==(const TextualGraph&) const = default;

 private:
  std::map<int64_t, std::string> nodes_;
  std::vector<Edge> edges_;
  std::map<int64_t, std::vector<size_t>> incidence_;
};

// Parses the two delimited-text tables (nodes: id,text / edges: src,text,dst).
// Both tables carry a header row.
TextualGraph load_graph(const std::string& nodes_table,
                        const std::string& edges_table);
TextualGraph load_graph_files(const std::string& nodes_path,
                              const std::string& edges_path);

// Canonical table forms; load_graph(emit_*) round-trips byte-identically.
std::string emit_nodes_table(const TextualGraph& g);
std::string emit_edges_table(const TextualGraph& g);

// Node-induced subgraph. parent_edge_indices maps each subgraph edge back to
// its position in g.edges().
struct Subgraph {
  TextualGraph graph;
  std::vector<size_t> parent_edge_indices;
};
Subgraph induced_subgraph(const TextualGraph& g, const NodeSet& keep);

// Flat text form fed to prompts: the node table followed by the edge table.
std::string linearize(const TextualGraph& g);

}  // namespace gral::graph
