#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gral/error.hpp"
#include "gral/graph.hpp"
#include "helpers.hpp"

using namespace gral;
using namespace gral::graph;

namespace {

bool fails_with(Errc code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("load_graph basic table parse") {
  TextualGraph g = load_graph(
      "node_id,node_attr\n"
      "0,harry potter and the chamber of secrets\n"
      "1,harry potter and the philosopher's stone\n",
      "src,edge_attr,dst\n"
      "1,book.book.genre,0\n");
  CHECK(g.node_count() == 2);
  REQUIRE(g.edge_count() == 1);
  CHECK(g.edges()[0] == Edge{1, "book.book.genre", 0});
  CHECK(g.node_text(1) == "harry potter and the philosopher's stone");
}

TEST_CASE("load_graph error cases") {
  const std::string nodes = "node_id,node_attr\n0,a\n1,b\n";
  CHECK(fails_with(Errc::dangling_edge, [&] {
    load_graph(nodes, "src,edge_attr,dst\n1,book.book.genre,224\n");
  }));
  CHECK(fails_with(Errc::duplicate_node_id, [&] {
    load_graph("node_id,node_attr\n0,a\n0,b\n", "src,edge_attr,dst\n");
  }));
  CHECK(fails_with(Errc::malformed_row, [&] {
    load_graph("node_id,node_attr\nx,a\n", "src,edge_attr,dst\n");
  }));
  CHECK(fails_with(Errc::malformed_row, [&] {
    load_graph("node_id,node_attr\n0\n", "src,edge_attr,dst\n");
  }));
  CHECK(fails_with(Errc::malformed_row, [&] {
    load_graph("wrong,header\n", "src,edge_attr,dst\n");
  }));
  CHECK(fails_with(Errc::malformed_row, [&] {
    load_graph("node_id,node_attr\n-3,a\n", "src,edge_attr,dst\n");
  }));
}

TEST_CASE("empty edge table is legal") {
  TextualGraph g =
      load_graph("node_id,node_attr\n0,a\n1,b\n2,c\n", "src,edge_attr,dst\n");
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 0);
  CHECK(g.neighbors(1).empty());
}

TEST_CASE("linearize minimal and deterministic") {
  TextualGraph g = load_graph("node_id,node_attr\n0,a\n", "src,edge_attr,dst\n");
  CHECK(linearize(g) == "node_id,node_attr\n0,a\nsrc,edge_attr,dst\n");

  TextualGraph g2 = load_graph("node_id,node_attr\n0,a\n1,b\n",
                               "src,edge_attr,dst\n0,rel,1\n");
  CHECK(linearize(g2) == linearize(load_graph(emit_nodes_table(g2),
                                              emit_edges_table(g2))));
}

TEST_CASE("quoted node text round-trips") {
  TextualGraph g({{0, "title, with comma"}, {1, "say \"hi\""}},
                 {{0, "rel,x", 1}});
  TextualGraph back = load_graph(emit_nodes_table(g), emit_edges_table(g));
  CHECK(back == g);
  TextualGraph again =
      load_graph(emit_nodes_table(back), emit_edges_table(back));
  CHECK(again == back);  // load . linearize . load is a fixed point
}

TEST_CASE("induced subgraph") {
  TextualGraph g = testutil::path_graph(4);
  Subgraph s = induced_subgraph(g, {0, 1});
  CHECK(s.graph.node_ids() == NodeSet{0, 1});
  REQUIRE(s.graph.edge_count() == 1);
  CHECK(s.graph.edges()[0].src == 0);
  CHECK(s.parent_edge_indices == std::vector<size_t>{0});

  CHECK(induced_subgraph(g, g.node_ids()).graph == g);

  Subgraph gap = induced_subgraph(testutil::path_graph(3), {0, 2});
  CHECK(gap.graph.node_count() == 2);
  CHECK(gap.graph.edge_count() == 0);

  CHECK(fails_with(Errc::unknown_node,
                   [&] { induced_subgraph(g, {0, 99}); }));
}

TEST_CASE("induced subgraph is monotone in keep") {
  gral::util::Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    TextualGraph g = testutil::random_connected_graph(rng, 8, 5);
    NodeSet small, big;
    for (int64_t id : g.node_ids()) {
      bool in_big = rng() % 2 == 0;
      if (in_big) big.push_back(id);
      if (in_big && rng() % 2 == 0) small.push_back(id);
    }
    auto se = induced_subgraph(g, small).parent_edge_indices;
    auto be = induced_subgraph(g, big).parent_edge_indices;
    CHECK(std::includes(be.begin(), be.end(), se.begin(), se.end()));
  }
}

TEST_CASE("neighbors and incidence") {
  TextualGraph g = testutil::path_graph(3);
  CHECK(g.neighbors(1) == NodeSet{0, 2});
  CHECK(g.incident_edges(1) == std::vector<size_t>{0, 1});

  TextualGraph multi({{0, "a"}, {1, "b"}}, {{0, "r1", 1}, {0, "r2", 1}});
  CHECK(multi.neighbors(0) == NodeSet{1});  // deduplicated
  CHECK(multi.incident_edges(0).size() == 2);

  // adjacency is symmetric
  gral::util::Rng rng(4);
  TextualGraph r = testutil::random_connected_graph(rng, 7, 4);
  for (int64_t u : r.node_ids())
    for (int64_t v : r.neighbors(u)) {
      auto nv = r.neighbors(v);
      CHECK(std::find(nv.begin(), nv.end(), u) != nv.end());
    }

  CHECK(fails_with(Errc::unknown_node, [&] { g.neighbors(42); }));
  CHECK(fails_with(Errc::unknown_node, [&] { g.node_text(42); }));
}
