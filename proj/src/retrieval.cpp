#include "gral/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "gral/error.hpp"

namespace gral::retrieval {

RankedList top_k(const std::vector<double>& query,
                 const std::map<int64_t, std::vector<double>>& items, size_t k) {
  if (items.empty())
    throw Error(Errc::empty_item_set, "top_k over zero items");
  RankedList all;
  all.reserve(items.size());
  for (const auto& [id, vec] : items)
    all.push_back(RankedEntry{id, embed::cosine(query, vec)});
  std::stable_sort(all.begin(), all.end(),
                   [](const RankedEntry& a, const RankedEntry& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.id < b.id;
                   });
  if (all.size() > k) all.resize(k);
  return all;
}

double PrizeMap::node_value(int64_t id) const {
  auto it = node_prize.find(id);
  return it == node_prize.end() ? 0.0 : it->second;
}

double PrizeMap::edge_value(int64_t index) const {
  auto it = edge_prize.find(index);
  return it == edge_prize.end() ? 0.0 : it->second;
}

PrizeMap assign_prizes(const RankedList& nodes, const RankedList& edges,
                       size_t k, double edge_cost) {
  if (nodes.size() > k || edges.size() > k)
    throw Error(Errc::rank_overflow,
                "ranked list longer than k=" + std::to_string(k));
  PrizeMap prizes;
  prizes.k = k;
  prizes.edge_cost = edge_cost;
  for (size_t i = 0; i < nodes.size(); ++i)
    prizes.node_prize[nodes[i].id] = double(k - i);
  for (size_t i = 0; i < edges.size(); ++i)
    prizes.edge_prize[edges[i].id] = double(k - i);
  return prizes;
}

double pcst_objective(const PrizeMap& prizes, const graph::NodeSet& nodes,
                      const std::vector<size_t>& edge_indices) {
  double obj = 0.0;
  for (int64_t id : nodes) obj += prizes.node_value(id);
  for (size_t ei : edge_indices) obj += prizes.edge_gain(int64_t(ei));
  return obj;
}

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

struct IndexedEdge {
  size_t pos;   // position in the parent edge table
  int u, v;     // dense node indices
  double gain;  // prize(e) - C_e
};

RetrievedSubgraph solve_exact(const graph::TextualGraph& g,
                              const PrizeMap& prizes) {
  graph::NodeSet ids = g.node_ids();
  size_t n = ids.size();
  if (n > 15)
    throw Error(Errc::graph_too_large_for_exact,
                std::to_string(n) + " nodes; exact mode enumerates up to 15");
  std::map<int64_t, int> index;
  for (size_t i = 0; i < n; ++i) index[ids[i]] = int(i);

  std::vector<IndexedEdge> edges;
  for (size_t pos = 0; pos < g.edges().size(); ++pos) {
    const auto& e = g.edges()[pos];
    edges.push_back(IndexedEdge{pos, index.at(e.src), index.at(e.dst),
                                prizes.edge_gain(int64_t(pos))});
  }

  double best_obj = -1.0;  // objectives are >= 0: the empty-prize singleton
  uint32_t best_mask = 0;
  std::vector<size_t> best_edges;

  std::vector<IndexedEdge> in_mask;
  for (uint32_t mask = 1; mask < (uint32_t(1) << n); ++mask) {
    in_mask.clear();
    for (const auto& e : edges)
      if ((mask >> e.u & 1) && (mask >> e.v & 1)) in_mask.push_back(e);

    // max-weight spanning tree under min(gain, 0); positive edges ride along
    std::stable_sort(in_mask.begin(), in_mask.end(),
                     [](const IndexedEdge& a, const IndexedEdge& b) {
                       return std::min(a.gain, 0.0) > std::min(b.gain, 0.0);
                     });
    DisjointSet ds(n);
    size_t components = size_t(std::popcount(mask));
    double tree_penalty = 0.0;
    std::vector<size_t> chosen;
    for (const auto& e : in_mask) {
      if (ds.unite(e.u, e.v)) {
        --components;
        tree_penalty += std::min(e.gain, 0.0);
        chosen.push_back(e.pos);
      }
    }
    if (components != 1) continue;  // mask cannot be connected

    double obj = tree_penalty;
    for (size_t i = 0; i < n; ++i)
      if (mask >> i & 1) obj += prizes.node_value(ids[i]);
    for (const auto& e : in_mask) {
      if (e.gain > 0.0 &&
          std::find(chosen.begin(), chosen.end(), e.pos) == chosen.end())
        chosen.push_back(e.pos);
      if (e.gain > 0.0) obj += e.gain;
      // tree edges with positive gain were counted via obj += e.gain above;
      // their min(gain,0) contribution in tree_penalty is zero, so no double count
    }
    if (obj > best_obj + 1e-12) {
      best_obj = obj;
      best_mask = mask;
      std::sort(chosen.begin(), chosen.end());
      best_edges = chosen;
    }
  }

  RetrievedSubgraph out;
  for (size_t i = 0; i < n; ++i)
    if (best_mask >> i & 1) out.nodes.push_back(ids[i]);
  out.edge_indices = best_edges;
  out.objective = best_obj;
  return out;
}

RetrievedSubgraph solve_heuristic(const graph::TextualGraph& g,
                                  const PrizeMap& prizes) {
  graph::NodeSet ids = g.node_ids();
  size_t n = ids.size();
  std::map<int64_t, int> index;
  for (size_t i = 0; i < n; ++i) index[ids[i]] = int(i);

  // adjacency as (edge position, other endpoint index)
  std::vector<std::vector<std::pair<size_t, int>>> adj(n);
  const auto& edge_list = g.edges();
  for (size_t pos = 0; pos < edge_list.size(); ++pos) {
    int u = index.at(edge_list[pos].src);
    int v = index.at(edge_list[pos].dst);
    adj[u].emplace_back(pos, v);
    if (v != u) adj[v].emplace_back(pos, u);
  }
  std::vector<double> prize(n);
  for (size_t i = 0; i < n; ++i) prize[i] = prizes.node_value(ids[i]);
  auto egain = [&](size_t pos) { return prizes.edge_gain(int64_t(pos)); };

  // start from the highest prize, lowest id on ties
  int start = 0;
  for (size_t i = 1; i < n; ++i)
    if (prize[i] > prize[start]) start = int(i);

  std::vector<char> in_s(n, 0), sel(edge_list.size(), 0);
  std::vector<int> members{start};
  in_s[start] = 1;
  double obj = prize[start];

  struct Move {
    double gain = 0.0;
    std::vector<int> add_nodes;
    std::vector<size_t> add_edges;
  };

  while (true) {
    Move best;  // only strictly positive gains are worth applying
    auto consider = [&](double gain, std::vector<int> nodes,
                        std::vector<size_t> edges) {
      if (gain > best.gain + 1e-12) {
        best.gain = gain;
        best.add_nodes = std::move(nodes);
        best.add_edges = std::move(edges);
      }
    };

    // close an edge between two members
    for (size_t pos = 0; pos < edge_list.size(); ++pos) {
      if (sel[pos]) continue;
      int u = index.at(edge_list[pos].src), v = index.at(edge_list[pos].dst);
      if (in_s[u] && in_s[v]) consider(egain(pos), {}, {pos});
    }
    // one-hop attach
    for (int u : members) {
      for (auto [pos, x] : adj[u]) {
        if (sel[pos] || in_s[x]) continue;
        consider(prize[x] + egain(pos), {x}, {pos});
      }
    }
    // two-hop bridge through a (possibly unprofitable) intermediate
    for (int u : members) {
      for (auto [pos1, x] : adj[u]) {
        if (sel[pos1] || in_s[x]) continue;
        for (auto [pos2, y] : adj[x]) {
          if (pos2 == pos1 || in_s[y] || y == x) continue;
          consider(prize[x] + prize[y] + egain(pos1) + egain(pos2), {x, y},
                   {pos1, pos2});
        }
      }
    }

    if (best.gain <= 0.0) break;
    obj += best.gain;
    for (int x : best.add_nodes) {
      if (!in_s[x]) {
        in_s[x] = 1;
        members.push_back(x);
      }
    }
    for (size_t pos : best.add_edges) sel[pos] = 1;
  }

  RetrievedSubgraph out;
  for (size_t i = 0; i < n; ++i)
    if (in_s[i]) out.nodes.push_back(ids[i]);
  for (size_t pos = 0; pos < sel.size(); ++pos)
    if (sel[pos]) out.edge_indices.push_back(pos);
  out.objective = obj;
  return out;
}

}  // namespace

RetrievedSubgraph solve_pcst(const graph::TextualGraph& g, const PrizeMap& prizes,
                             PcstMode mode) {
  if (g.node_count() == 0)
    throw Error(Errc::empty_graph, "pcst on an empty graph");
  return mode == PcstMode::exact ? solve_exact(g, prizes)
                                 : solve_heuristic(g, prizes);
}

RetrievedSubgraph retrieve(const graph::TextualGraph& g,
                           const embed::EmbeddingTable& table,
                           const std::vector<double>& query_vec, size_t k,
                           double edge_cost, PcstMode mode) {
  RankedList nodes = top_k(query_vec, table.node_vecs, k);
  RankedList edges;
  if (!table.edge_vecs.empty()) edges = top_k(query_vec, table.edge_vecs, k);
  PrizeMap prizes = assign_prizes(nodes, edges, k, edge_cost);
  return solve_pcst(g, prizes, mode);
}

}  // namespace gral::retrieval
