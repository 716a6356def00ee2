// Python bindings for the core operations: graph store, retrieval, alignment
// losses, pruning-side token counting, prompts, and answer metrics.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gral/aligner.hpp"
#include "gral/embedding.hpp"
#include "gral/error.hpp"
#include "gral/evalkit.hpp"
#include "gral/gateway.hpp"
#include "gral/graph.hpp"
#include "gral/refine.hpp"
#include "gral/retrieval.hpp"

namespace py = pybind11;
using namespace gral;

namespace {

using EdgeTuple = std::tuple<int64_t, std::string, int64_t>;
using ScoredList = std::vector<std::pair<int64_t, double>>;

graph::TextualGraph make_graph(std::map<int64_t, std::string> nodes,
                               const std::vector<EdgeTuple>& edge_tuples) {
  std::vector<graph::Edge> edges;
  edges.reserve(edge_tuples.size());
  for (const auto& [src, text, dst] : edge_tuples)
    edges.push_back({src, text, dst});
  return graph::TextualGraph(std::move(nodes), std::move(edges));
}

ScoredList to_scored(const retrieval::RankedList& ranked) {
  ScoredList out;
  out.reserve(ranked.size());
  for (const auto& e : ranked) out.emplace_back(e.id, e.score);
  return out;
}

retrieval::RankedList to_ranked(const ScoredList& scored) {
  retrieval::RankedList out;
  out.reserve(scored.size());
  for (const auto& [id, score] : scored) out.push_back({id, score});
  return out;
}

}  // namespace

PYBIND11_MODULE(gral, m) {
  m.doc() = "Graph retrieval, alignment losses, pruning and QA metrics";
  m.attr("__version__") = "0.1.0";

  py::register_exception<Error>(m, "Error");

  py::class_<graph::TextualGraph>(m, "TextualGraph")
      .def(py::init(&make_graph), py::arg("nodes"), py::arg("edges"),
           "Build from {id: text} and [(src, text, dst), ...]")
      .def("node_count", &graph::TextualGraph::node_count)
      .def("edge_count", &graph::TextualGraph::edge_count)
      .def("has_node", &graph::TextualGraph::has_node, py::arg("id"))
      .def("node_text", &graph::TextualGraph::node_text, py::arg("id"))
      .def("node_ids", &graph::TextualGraph::node_ids)
      .def("neighbors", &graph::TextualGraph::neighbors, py::arg("id"))
      .def("incident_edges", &graph::TextualGraph::incident_edges,
           py::arg("id"))
      .def("edges",
           [](const graph::TextualGraph& g) {
             std::vector<EdgeTuple> out;
             out.reserve(g.edge_count());
             for (const auto& e : g.edges())
               out.emplace_back(e.src, e.text, e.dst);
             return out;
           })
      .def("__eq__", [](const graph::TextualGraph& a,
                        const graph::TextualGraph& b) { return a == b; })
      .def("__repr__", [](const graph::TextualGraph& g) {
        return "TextualGraph(" + std::to_string(g.node_count()) + " nodes, " +
               std::to_string(g.edge_count()) + " edges)";
      });

  m.def("load_graph", &graph::load_graph, py::arg("nodes_table"),
        py::arg("edges_table"), "Parse the two delimited-text tables");
  m.def("load_graph_files", &graph::load_graph_files, py::arg("nodes_path"),
        py::arg("edges_path"));
  m.def("linearize", &graph::linearize, py::arg("g"),
        "Flat text form fed to prompts");
  m.def(
      "induced_subgraph",
      [](const graph::TextualGraph& g, const graph::NodeSet& keep) {
        auto sg = graph::induced_subgraph(g, keep);
        return py::make_tuple(sg.graph, sg.parent_edge_indices);
      },
      py::arg("g"), py::arg("keep"),
      "Node-induced subgraph plus parent edge positions");

  m.def(
      "cosine",
      [](const std::vector<double>& u, const std::vector<double>& v) {
        return embed::cosine(u, v);
      },
      py::arg("u"), py::arg("v"), "cos(u, v); 0 for a zero vector");

  py::class_<retrieval::PrizeMap>(m, "PrizeMap")
      .def(py::init<>())
      .def_readwrite("node_prize", &retrieval::PrizeMap::node_prize)
      .def_readwrite("edge_prize", &retrieval::PrizeMap::edge_prize)
      .def_readwrite("edge_cost", &retrieval::PrizeMap::edge_cost)
      .def_readwrite("k", &retrieval::PrizeMap::k)
      .def("node_value", &retrieval::PrizeMap::node_value, py::arg("id"))
      .def("edge_value", &retrieval::PrizeMap::edge_value, py::arg("index"))
      .def("edge_gain", &retrieval::PrizeMap::edge_gain, py::arg("index"));

  py::class_<retrieval::RetrievedSubgraph>(m, "RetrievedSubgraph")
      .def_readonly("nodes", &retrieval::RetrievedSubgraph::nodes)
      .def_readonly("edge_indices", &retrieval::RetrievedSubgraph::edge_indices)
      .def_readonly("objective", &retrieval::RetrievedSubgraph::objective)
      .def("__repr__", [](const retrieval::RetrievedSubgraph& r) {
        return "RetrievedSubgraph(" + std::to_string(r.nodes.size()) +
               " nodes, " + std::to_string(r.edge_indices.size()) +
               " edges, objective " + std::to_string(r.objective) + ")";
      });

  py::enum_<retrieval::PcstMode>(m, "PcstMode")
      .value("exact", retrieval::PcstMode::exact)
      .value("heuristic", retrieval::PcstMode::heuristic);

  m.def(
      "top_k",
      [](const std::vector<double>& query,
         const std::map<int64_t, std::vector<double>>& items, size_t k) {
        return to_scored(retrieval::top_k(query, items, k));
      },
      py::arg("query"), py::arg("items"), py::arg("k"),
      "Exact cosine scan; [(id, score), ...] best first");
  m.def(
      "assign_prizes",
      [](const ScoredList& nodes, const ScoredList& edges, size_t k,
         double edge_cost) {
        return retrieval::assign_prizes(to_ranked(nodes), to_ranked(edges), k,
                                        edge_cost);
      },
      py::arg("nodes"), py::arg("edges"), py::arg("k"), py::arg("edge_cost"),
      "Rank-based prizes: rank i gets k - i");
  m.def("solve_pcst", &retrieval::solve_pcst, py::arg("g"), py::arg("prizes"),
        py::arg("mode"),
        "Best connected subgraph under prizes minus edge costs");
  m.def("pcst_objective", &retrieval::pcst_objective, py::arg("prizes"),
        py::arg("nodes"), py::arg("edge_indices"));

  m.def("anchor_distribution", &aligner::anchor_distribution,
        py::arg("node_feats"), py::arg("anchor_vec"),
        "softmax over cos(node_feat, anchor_vec)");
  m.def("node_alignment_loss", &aligner::node_alignment_loss,
        py::arg("p_anchor"), py::arg("p_prediction"),
        "(1/|V|) * KL(p_anchor || p_prediction)");
  m.def("graph_alignment_loss", &aligner::graph_alignment_loss,
        py::arg("batch_g"), py::arg("batch_s"), py::arg("temperature"),
        "Symmetric in-batch InfoNCE over cosine/temperature logits");

  m.def("count_tokens", &refine::count_tokens, py::arg("text"),
        "Deterministic token proxy used by the pruning budget");
  m.def("extraction_prompt", &gateway::extraction_prompt, py::arg("question"),
        py::arg("answer"), py::arg("g"),
        "Exact prompt bytes the anchor/rationale extraction sends");

  py::class_<evalkit::Metrics>(m, "Metrics")
      .def_readonly("hit1", &evalkit::Metrics::hit1)
      .def_readonly("f1", &evalkit::Metrics::f1)
      .def_readonly("accuracy", &evalkit::Metrics::accuracy)
      .def("__repr__", [](const evalkit::Metrics& x) {
        return "Metrics(hit1=" + std::to_string(x.hit1) +
               ", f1=" + std::to_string(x.f1) +
               ", accuracy=" + std::to_string(x.accuracy) + ")";
      });

  m.def("normalize_answer", &evalkit::normalize_answer, py::arg("text"),
        "Lowercase, strip punctuation/articles, collapse whitespace");
  m.def("split_candidates", &evalkit::split_candidates, py::arg("prediction"),
        "Split on newlines/semicolons, normalize, drop empties, dedup");
  m.def("exact_metrics", &evalkit::exact_metrics, py::arg("prediction"),
        py::arg("gold"), "hit1 / set-F1 / set-equality accuracy");
}
