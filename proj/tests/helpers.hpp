#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gral/aligner.hpp"
#include "gral/graph.hpp"
#include "gral/retrieval.hpp"
#include "gral/util.hpp"

namespace testutil {

// Fresh directory under the system temp root, removed on scope exit.
class TmpDir {
 public:
  explicit TmpDir(const std::string& tag) {
    auto base = std::filesystem::temp_directory_path();
    for (int i = 0;; ++i) {
      path_ = base / (tag + "-" + std::to_string(::getpid()) + "-" +
                      std::to_string(i));
      if (!std::filesystem::exists(path_)) break;
    }
    std::filesystem::create_directories(path_);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

// Path graph 0-1-...-(n-1) with texts "n<i>" and "e<i>".
inline gral::graph::TextualGraph path_graph(size_t n) {
  std::map<int64_t, std::string> nodes;
  std::vector<gral::graph::Edge> edges;
  for (size_t i = 0; i < n; ++i) nodes[int64_t(i)] = "n" + std::to_string(i);
  for (size_t i = 0; i + 1 < n; ++i)
    edges.push_back({int64_t(i), "e" + std::to_string(i), int64_t(i + 1)});
  return gral::graph::TextualGraph(std::move(nodes), std::move(edges));
}

// Connected random graph: spanning tree over a shuffled order plus `extra`
// random chords (parallel edges allowed; the store is a multigraph).
inline gral::graph::TextualGraph random_connected_graph(gral::util::Rng& rng,
                                                        size_t n, size_t extra) {
  std::map<int64_t, std::string> nodes;
  for (size_t i = 0; i < n; ++i) nodes[int64_t(i)] = "n" + std::to_string(i);
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<gral::graph::Edge> edges;
  for (size_t i = 1; i < n; ++i) {
    size_t j = rng() % i;
    edges.push_back({int64_t(order[j]), "e" + std::to_string(edges.size()),
                     int64_t(order[i])});
  }
  for (size_t c = 0; c < extra && n > 1; ++c) {
    int64_t u = int64_t(rng() % n), v = int64_t(rng() % n);
    if (u == v) continue;
    edges.push_back({u, "e" + std::to_string(edges.size()), v});
  }
  return gral::graph::TextualGraph(std::move(nodes), std::move(edges));
}

// Independent PCST oracle: enumerates every edge subset (checking that it
// connects its endpoints) plus every single node, and returns the best
// objective. Written against the objective definition only, sharing no code
// with the solver.
inline double brute_force_pcst(const gral::graph::TextualGraph& g,
                               const gral::retrieval::PrizeMap& prizes) {
  const auto ids = g.node_ids();
  const size_t n = ids.size();
  const size_t m = g.edge_count();
  std::map<int64_t, size_t> index;
  for (size_t i = 0; i < n; ++i) index[ids[i]] = i;

  double best = 0.0;
  bool have = false;
  for (int64_t id : ids) {
    double obj = prizes.node_value(id);
    if (!have || obj > best) best = obj;
    have = true;
  }

  for (uint64_t mask = 1; mask < (uint64_t(1) << m); ++mask) {
    std::vector<size_t> parent(n);
    for (size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&](size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    double obj = 0.0;
    std::vector<bool> touched(n, false);
    for (size_t e = 0; e < m; ++e) {
      if (!(mask >> e & 1)) continue;
      size_t u = index.at(g.edges()[e].src);
      size_t v = index.at(g.edges()[e].dst);
      touched[u] = touched[v] = true;
      parent[find(u)] = find(v);
      obj += prizes.edge_gain(int64_t(e));
    }
    size_t root = n;
    bool connected = true;
    for (size_t i = 0; i < n && connected; ++i) {
      if (!touched[i]) continue;
      if (root == n) root = find(i);
      else if (find(i) != find(root)) connected = false;
    }
    if (!connected) continue;
    for (size_t i = 0; i < n; ++i)
      if (touched[i]) obj += prizes.node_value(ids[i]);
    if (obj > best) best = obj;
  }
  return best;
}

// Random PCST instance in the shape the retrieval stage produces: rank-based
// integer prizes on a subset of nodes/edges, everything else zero.
inline gral::retrieval::PrizeMap random_prizes(gral::util::Rng& rng,
                                               const gral::graph::TextualGraph& g,
                                               double edge_cost) {
  gral::retrieval::PrizeMap prizes;
  prizes.edge_cost = edge_cost;
  prizes.k = std::max<size_t>(g.node_count(), 4);
  for (int64_t id : g.node_ids())
    if (rng() % 3 != 0)
      prizes.node_prize[id] = double(rng() % prizes.k) * 0.5;
  for (size_t e = 0; e < g.edge_count(); ++e)
    if (rng() % 4 == 0)
      prizes.edge_prize[int64_t(e)] = double(rng() % 3) * 0.25;
  return prizes;
}

// Fully random training example over a random connected subgraph.
inline gral::aligner::AlignTrainExample random_example(gral::util::Rng& rng,
                                                       const std::string& id,
                                                       size_t n, size_t extra,
                                                       size_t feat_dim) {
  gral::aligner::AlignTrainExample ex;
  ex.id = id;
  ex.subgraph = random_connected_graph(rng, n, extra);
  for (size_t i = 0; i < n; ++i)
    ex.feats.node_feats.push_back(gral::util::unit_vector(rng, feat_dim));
  for (size_t e = 0; e < ex.subgraph.edge_count(); ++e)
    ex.feats.edge_feats.push_back(gral::util::unit_vector(rng, feat_dim));
  ex.query_vec = gral::util::unit_vector(rng, feat_dim);
  ex.anchor_vec = gral::util::unit_vector(rng, feat_dim);
  ex.rationale_vec = gral::util::unit_vector(rng, feat_dim);
  ex.graph_vec = gral::util::unit_vector(rng, feat_dim);
  return ex;
}

inline std::vector<double> simplex_vector(gral::util::Rng& rng, size_t n) {
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::vector<double> p(n);
  double z = 0.0;
  for (double& v : p) {
    v = uni(rng);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

}  // namespace testutil
