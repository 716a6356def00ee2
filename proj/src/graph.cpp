#include "gral/graph.hpp"

#include <algorithm>
#include <set>

#include "gral/error.hpp"
#include "gral/util.hpp"

namespace gral::graph {

namespace {

const char* kNodesHeader[] = {"node_id", "node_attr"};
const char* kEdgesHeader[] = {"src", "edge_attr", "dst"};

int64_t parse_node_id(const std::string& field, size_t row_index) {
  if (field.empty())
    throw Error(Errc::malformed_row,
                "row " + std::to_string(row_index) + ": empty id");
  int64_t value = 0;
  for (char c : field) {
    if (c < '0' || c > '9')
      throw Error(Errc::malformed_row, "row " + std::to_string(row_index) +
                                           ": id '" + field +
                                           "' is not a non-negative integer");
    if (value > (INT64_MAX - (c - '0')) / 10)
      throw Error(Errc::malformed_row,
                  "row " + std::to_string(row_index) + ": id overflows");
    value = value * 10 + (c - '0');
  }
  return value;
}

bool is_header(const std::vector<std::string>& row, const char* const* names,
               size_t n) {
  if (row.size() != n) return false;
  for (size_t i = 0; i < n; ++i)
    if (row[i] != names[i]) return false;
  return true;
}

}  // namespace

TextualGraph::TextualGraph(std::map<int64_t, std::string> nodes,
                           std::vector<Edge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)) {
  for (size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!nodes_.count(e.src) || !nodes_.count(e.dst))
      throw Error(Errc::dangling_edge,
                  "edge " + std::to_string(i) + " references missing node " +
                      std::to_string(nodes_.count(e.src) ? e.dst : e.src));
    incidence_[e.src].push_back(i);
    if (e.dst != e.src) incidence_[e.dst].push_back(i);
  }
}

const std::string& TextualGraph::node_text(int64_t id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end())
    throw Error(Errc::unknown_node, "node " + std::to_string(id));
  return it->second;
}

NodeSet TextualGraph::node_ids() const {
  NodeSet ids;
  ids.reserve(nodes_.size());
  for (const auto& [id, _] : nodes_) ids.push_back(id);
  return ids;
}

NodeSet TextualGraph::neighbors(int64_t id) const {
  if (!nodes_.count(id))
    throw Error(Errc::unknown_node, "node " + std::to_string(id));
  std::set<int64_t> out;
  auto it = incidence_.find(id);
  if (it != incidence_.end()) {
    for (size_t ei : it->second) {
      const Edge& e = edges_[ei];
      out.insert(e.src == id ? e.dst : e.src);
    }
  }
  return NodeSet(out.begin(), out.end());
}

std::vector<size_t> TextualGraph::incident_edges(int64_t id) const {
  if (!nodes_.count(id))
    throw Error(Errc::unknown_node, "node " + std::to_string(id));
  auto it = incidence_.find(id);
  return it == incidence_.end() ? std::vector<size_t>{} : it->second;
}

TextualGraph load_graph(const std::string& nodes_table,
                        const std::string& edges_table) {
  std::map<int64_t, std::string> nodes;
  auto node_rows = util::parse_csv(nodes_table);
  for (size_t r = 0; r < node_rows.size(); ++r) {
    const auto& row = node_rows[r];
    if (r == 0 && is_header(row, kNodesHeader, 2)) continue;
    if (row.size() != 2)
      throw Error(Errc::malformed_row, "node row " + std::to_string(r) +
                                           " has " + std::to_string(row.size()) +
                                           " fields, want 2");
    int64_t id = parse_node_id(row[0], r);
    if (!nodes.emplace(id, row[1]).second)
      throw Error(Errc::duplicate_node_id, "node " + std::to_string(id));
  }
  std::vector<Edge> edges;
  auto edge_rows = util::parse_csv(edges_table);
  for (size_t r = 0; r < edge_rows.size(); ++r) {
    const auto& row = edge_rows[r];
    if (r == 0 && is_header(row, kEdgesHeader, 3)) continue;
    if (row.size() != 3)
      throw Error(Errc::malformed_row, "edge row " + std::to_string(r) +
                                           " has " + std::to_string(row.size()) +
                                           " fields, want 3");
    edges.push_back(
        Edge{parse_node_id(row[0], r), row[1], parse_node_id(row[2], r)});
  }
  return TextualGraph(std::move(nodes), std::move(edges));
}

TextualGraph load_graph_files(const std::string& nodes_path,
                              const std::string& edges_path) {
  return load_graph(util::read_file(nodes_path), util::read_file(edges_path));
}

std::string emit_nodes_table(const TextualGraph& g) {
  std::string out = "node_id,node_attr\n";
  for (const auto& [id, text] : g.nodes())
    out += util::csv_row({std::to_string(id), text});
  return out;
}

std::string emit_edges_table(const TextualGraph& g) {
  std::string out = "src,edge_attr,dst\n";
  for (const Edge& e : g.edges())
    out += util::csv_row({std::to_string(e.src), e.text, std::to_string(e.dst)});
  return out;
}

Subgraph induced_subgraph(const TextualGraph& g, const NodeSet& keep) {
  std::map<int64_t, std::string> nodes;
  for (int64_t id : keep) nodes.emplace(id, g.node_text(id));
  std::vector<Edge> edges;
  std::vector<size_t> parents;
  const auto& all = g.edges();
  for (size_t i = 0; i < all.size(); ++i) {
    if (nodes.count(all[i].src) && nodes.count(all[i].dst)) {
      edges.push_back(all[i]);
      parents.push_back(i);
    }
  }
  return Subgraph{TextualGraph(std::move(nodes), std::move(edges)),
                  std::move(parents)};
}

std::string linearize(const TextualGraph& g) {
  return emit_nodes_table(g) + emit_edges_table(g);
}

}  // namespace gral::graph
