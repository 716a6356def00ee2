// Builds the committed offline corpus under data/toy: a 20-component graph,
// synthetic embeddings, dataset, pipeline configs, and the fixture cassettes
// (text embeddings + LLM completions) that make every stage runnable offline.
// Fixture keys are prompt/text hashes, so this tool drives the real library
// code end to end to guarantee the keys match what the pipeline will ask for.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/aligner.hpp"
#include "gral/config.hpp"
#include "gral/embedding.hpp"
#include "gral/gateway.hpp"
#include "gral/graph.hpp"
#include "gral/pipeline.hpp"
#include "gral/refine.hpp"
#include "gral/retrieval.hpp"
#include "gral/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gral;

namespace {

constexpr size_t kDim = 32;
constexpr size_t kComponents = 20;
constexpr size_t kLargeNodes = 120;

struct Component {
  std::vector<int64_t> ids;
  std::vector<double> centroid;
  std::string question;
  std::string gold;
  std::vector<std::string> steps;
  // (kind, span) pairs; grounded against the retrieved subgraph by the parser
  std::vector<std::pair<std::string, std::string>> anchors;
  std::string generation;  // completion for the main-config generation prompt
};

std::vector<double> mixed(util::Rng& rng, const std::vector<double>& centroid,
                          double spread) {
  auto noise = util::normalized(util::gaussian_vector(rng, centroid.size()));
  std::vector<double> v = centroid;
  for (size_t i = 0; i < v.size(); ++i) v[i] += spread * noise[i];
  return util::normalized(std::move(v));
}

std::string topic_node_text(size_t c, size_t j) {
  if (j == 0) return "topic-" + std::to_string(c) + " headline";
  if (j == 3) return "topic-" + std::to_string(c) + " item 3, annotated";
  return "topic-" + std::to_string(c) + " item " + std::to_string(j);
}

std::string extraction_completion(const Component& comp) {
  std::string text = "RationaleChain:\n";
  for (size_t i = 0; i < comp.steps.size(); ++i) {
    text += std::to_string(i + 1) + ". " + comp.steps[i] + "\n";
  }
  text += "Anchors:\n";
  for (const auto& [kind, span] : comp.anchors) {
    text += "- " + kind + ": " + span + "\n";
  }
  return text;
}

gateway::RationaleBundle as_bundle(const Component& comp,
                                   const graph::TextualGraph& sub) {
  // Mirror of the parse + grounding the pipeline performs, used to key the
  // follow-up fixtures (anchor/rationale embeddings, judge prompts).
  gateway::RationaleBundle b;
  b.steps = comp.steps;
  for (const auto& [kind, span] : comp.anchors) {
    gateway::Anchor a;
    a.kind = kind == "entity" ? gateway::Anchor::Kind::entity
                              : gateway::Anchor::Kind::relation;
    a.span = span;
    const std::string needle = util::lowercase(span);
    if (a.kind == gateway::Anchor::Kind::entity) {
      for (const auto& [id, text] : sub.nodes()) {
        if (util::lowercase(text).find(needle) != std::string::npos)
          a.grounded_ids.push_back(id);
      }
    } else {
      for (size_t i = 0; i < sub.edges().size(); ++i) {
        if (util::lowercase(sub.edges()[i].text).find(needle) !=
            std::string::npos)
          a.grounded_ids.push_back(static_cast<int64_t>(i));
      }
    }
    if (!a.grounded_ids.empty()) b.anchors.push_back(std::move(a));
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? argv[1] : "data/toy";
  const fs::path text_dir = root / "text_fixtures";
  const fs::path llm_dir = root / "llm_fixtures";
  fs::create_directories(text_dir);
  fs::create_directories(llm_dir);

  util::Rng rng(20260814);

  auto put_text_fixture = [&](const std::string& text,
                              const std::vector<double>& vec) {
    json doc = {{"dim", vec.size()}, {"vector", vec}};
    util::write_file(text_dir / (util::sha256_hex(text) + ".json"),
                     doc.dump() + "\n");
  };
  auto put_llm_fixture = [&](const std::string& prompt,
                             const std::string& completion) {
    util::write_file(llm_dir / (util::sha256_hex(prompt) + ".txt"), completion);
  };

  // ---- graph -------------------------------------------------------------
  std::map<int64_t, std::string> nodes;
  std::vector<graph::Edge> edges;
  std::vector<size_t> edge_comp;  // owning component per edge position
  std::vector<Component> comps(kComponents);

  // Component 0: the case-study book graph.
  {
    Component& hp = comps[0];
    const std::vector<std::pair<int64_t, std::string>> hp_nodes = {
        {0, "harry potter and the chamber of secrets"},
        {1, "harry potter and the philosopher's stone"},
        {3, "j. k. rowling"},
        {7, "harry potter and the half-blood prince"},
        {9, "harry potter and the prisoner of azkaban"},
        {11, "harry potter and the goblet of fire"},
        {16, "harry potter"},
        {24, "harry potter and the deathly hallows"},
        {57, "fiction"},
        {59, "harry potter literary series"},
        {76, "professor severus snape"},
        {98, "fantasy"},
    };
    const std::vector<graph::Edge> hp_edges = {
        {3, "book.author.works_written", 1},
        {3, "book.author.works_written", 0},
        {3, "book.author.works_written", 7},
        {3, "book.author.works_written", 9},
        {3, "book.author.works_written", 11},
        {3, "book.author.works_written", 24},
        {1, "book.book.genre", 98},
        {9, "book.book.genre", 98},
        {7, "book.book.genre", 98},
        {24, "book.book.genre", 57},
        {59, "book.literary_series.fictional_universe", 16},
        {1, "book.book.characters", 76},
        {0, "book.book.characters", 76},
        {59, "book.book_subject.works", 1},
        {16, "freebase.equivalent_topic.equivalent_domain", 59},
    };
    for (const auto& [id, text] : hp_nodes) {
      nodes[id] = text;
      hp.ids.push_back(id);
    }
    for (const auto& e : hp_edges) {
      edges.push_back(e);
      edge_comp.push_back(0);
    }
    hp.question = "what is the name of the first harry potter novel?";
    hp.gold = "harry potter and the philosopher's stone";
    hp.steps = {
        "The question asks for the name of the first harry potter novel, and "
        "the graph includes a specific book node labeled harry potter and the "
        "philosopher's stone.",
        "The graph connects j. k. rowling to that book through "
        "book.author.works_written, so j. k. rowling is the critical "
        "intermediate concept.",
        "Therefore, using the graph evidence, the first harry potter novel is "
        "harry potter and the philosopher's stone, matching the given answer.",
    };
    hp.anchors = {
        {"entity", "harry potter and the philosopher's stone"},
        {"entity", "j. k. rowling"},
        {"relation", "book.author.works_written"},
    };
    hp.generation = "Harry Potter and the Philosopher's Stone";
  }

  // Components 1..4: small paths; 5..19: 120-node paths with chords.
  const std::vector<size_t> small_sizes = {8, 9, 10, 11};
  for (size_t c = 1; c < kComponents; ++c) {
    Component& comp = comps[c];
    const size_t size = c <= 4 ? small_sizes[c - 1] : kLargeNodes;
    const int64_t base = 1000 * static_cast<int64_t>(c);
    for (size_t j = 0; j < size; ++j) {
      const int64_t id = base + static_cast<int64_t>(j);
      nodes[id] = topic_node_text(c, j);
      comp.ids.push_back(id);
    }
    const std::string rel = "topic.relates." + std::to_string(c);
    const std::string bridge = "topic.bridge." + std::to_string(c);
    for (size_t j = 0; j + 1 < size; ++j) {
      edges.push_back({base + static_cast<int64_t>(j), rel,
                       base + static_cast<int64_t>(j + 1)});
      edge_comp.push_back(c);
    }
    for (size_t j = 0; j + 5 < size; j += 10) {
      edges.push_back({base + static_cast<int64_t>(j), bridge,
                       base + static_cast<int64_t>(j + 5)});
      edge_comp.push_back(c);
    }
    comp.question =
        "which headline belongs to topic " + std::to_string(c) + "?";
    comp.gold = "topic-" + std::to_string(c) + " headline";
    comp.steps = {
        "The question asks for the headline of topic " + std::to_string(c) +
            ".",
        "The subgraph keeps every topic-" + std::to_string(c) +
            " item chained through " + rel + ", all leading back to one "
            "headline node.",
        "That headline node reads " + comp.gold +
            ", so it answers the question.",
    };
    comp.anchors = {{"entity", comp.gold}, {"relation", rel}};
    if (c == 2) {
      // ungrounded anchor: dropped with a warning by the extractor
      comp.anchors.insert(comp.anchors.begin(), {"entity", "hogwarts express"});
    }
    if (c == 8) {
      comp.generation = "topic-8 item 2";
    } else if (c == 9) {
      comp.generation = "Topic-9 HEADLINE.";
    } else if (c >= 5 && c <= 7) {
      comp.generation =
          comp.gold + "\ntopic-" + std::to_string(c) + " item 1";
    } else {
      comp.generation = comp.gold;
    }
  }

  graph::TextualGraph g(nodes, edges);
  util::write_file(root / "nodes.csv", graph::emit_nodes_table(g));
  util::write_file(root / "edges.csv", graph::emit_edges_table(g));

  // ---- embeddings ----------------------------------------------------------
  embed::EmbeddingTable table;
  table.dim = kDim;
  for (auto& comp : comps) comp.centroid = util::unit_vector(rng, kDim);
  for (size_t c = 0; c < kComponents; ++c) {
    const int64_t exact = c == 0 ? 1 : comps[c].ids.front();
    for (int64_t id : comps[c].ids) {
      table.node_vecs[id] =
          id == exact ? comps[c].centroid : mixed(rng, comps[c].centroid, 0.6);
    }
  }
  for (size_t e = 0; e < edges.size(); ++e) {
    table.edge_vecs[static_cast<int64_t>(e)] =
        mixed(rng, comps[edge_comp[e]].centroid, 0.6);
  }
  embed::save_embeddings((root / "embeddings.bin").string(), table);

  // ---- dataset -------------------------------------------------------------
  json dataset = json::array();
  for (size_t c = 0; c < kComponents; ++c) {
    char id[8];
    std::snprintf(id, sizeof id, "q%02zu", c);
    dataset.push_back({{"id", id},
                       {"question", comps[c].question},
                       {"answers", {comps[c].gold}}});
  }
  util::write_file(root / "dataset.json", dataset.dump(2) + "\n");

  // ---- configs ------------------------------------------------------------
  json cfg_doc = {
      {"paths",
       {{"nodes_file", (root / "nodes.csv").string()},
        {"edges_file", (root / "edges.csv").string()},
        {"embeddings_file", (root / "embeddings.bin").string()},
        {"dataset_file", (root / "dataset.json").string()},
        {"text_fixture_dir", text_dir.string()},
        {"llm_fixture_dir", llm_dir.string()},
        {"output_dir", "out/toy"}}},
      {"retrieval", {{"k", 100}, {"edge_cost", 0.5}, {"mode", "heuristic"}}},
      {"aligner",
       {{"feat_dim", kDim},
        {"hidden_dim", 24},
        {"layers", 2},
        {"target_dim", 16},
        {"temperature", 0.07},
        {"steps", 30},
        {"batch", 8},
        {"lr", 1e-4},
        {"seed", 7}}},
      {"prune", {{"n_seed", 12}}},
      {"gateway", {{"offline", true}}},
      {"embedding", {{"offline", true}}},
      {"eval", {{"judge", true}}},
      {"sweep",
       {{"n_seed", {6, 12}}, {"align_steps", {5, 10}}, {"top_k", {100}}}},
  };
  util::write_file(root / "config.json", cfg_doc.dump(2) + "\n");

  json bad_doc = cfg_doc;
  bad_doc["sweep"]["top_k"] = {100, 7};
  bad_doc["paths"]["output_dir"] = "out/toy-badcell";
  util::write_file(root / "config_sweep_badcell.json", bad_doc.dump(2) + "\n");

  const auto cfg = config::PipelineConfig::from_json(cfg_doc, false);

  // ---- fixture cassettes ----------------------------------------------------
  // Retrieval per question, then the extraction cassette plus every text the
  // aligner will embed for that example.
  std::vector<pipeline::DatasetItem> items;
  for (const auto& entry : dataset) {
    items.push_back({entry.at("id"), entry.at("question"),
                     entry.at("answers").get<std::vector<std::string>>()});
  }
  std::vector<retrieval::RetrievedSubgraph> retrieved;
  for (size_t c = 0; c < kComponents; ++c) {
    put_text_fixture(items[c].question, comps[c].centroid);
    auto sub = retrieval::retrieve(g, table, comps[c].centroid,
                                   cfg.retrieval.k, cfg.retrieval.edge_cost,
                                   retrieval::PcstMode::heuristic);
    const auto sub_graph = pipeline::materialize(g, sub.nodes, sub.edge_indices);
    put_llm_fixture(
        gateway::extraction_prompt(items[c].question, items[c].answers.front(),
                                   sub_graph),
        extraction_completion(comps[c]));
    const auto bundle = as_bundle(comps[c], sub_graph);
    put_text_fixture(bundle.anchors_text(), mixed(rng, comps[c].centroid, 0.5));
    put_text_fixture(bundle.rationale_text(),
                     mixed(rng, comps[c].centroid, 0.5));
    put_text_fixture(graph::linearize(sub_graph),
                     mixed(rng, comps[c].centroid, 0.5));
    retrieved.push_back(std::move(sub));
  }

  // Align-train exactly like the pipeline so the generation prompts (which
  // depend on the trained scores through pruning) hash identically.
  embed::TextEmbedder embedder(embed::ProviderMode::fixture, text_dir.string());
  std::vector<aligner::AlignTrainExample> examples;
  for (size_t c = 0; c < kComponents; ++c) {
    const auto sub_graph =
        pipeline::materialize(g, retrieved[c].nodes, retrieved[c].edge_indices);
    const auto bundle = as_bundle(comps[c], sub_graph);
    examples.push_back(pipeline::make_align_example(
        g, table, embedder, items[c], retrieved[c].nodes,
        retrieved[c].edge_indices, bundle.anchors_text(),
        bundle.rationale_text()));
  }

  aligner::AlignerHyper hyper;
  hyper.feat_dim = cfg.aligner.feat_dim;
  hyper.hidden_dim = cfg.aligner.hidden_dim;
  hyper.layers = cfg.aligner.layers;
  hyper.target_dim = cfg.aligner.target_dim;
  hyper.temperature = cfg.aligner.temperature;

  auto author_generation = [&](size_t steps, size_t n_seed, bool with_judge) {
    aligner::TrainConfig tc;
    tc.steps = steps;
    tc.batch = cfg.aligner.batch;
    tc.lr = cfg.aligner.lr;
    tc.seed = cfg.aligner.seed;
    const auto trained = aligner::train_aligner(examples, hyper, tc);
    for (size_t c = 0; c < kComponents; ++c) {
      const auto scores = trained.model.predict_scores(examples[c]);
      const auto pruned =
          refine::prune(examples[c].subgraph, scores, n_seed);
      aligner::FeatureSet feats;
      for (int64_t id : pruned.graph.node_ids())
        feats.node_feats.push_back(table.node_vec(id));
      for (size_t p : pruned.parent_edge_indices) {
        feats.edge_feats.push_back(table.edge_vec(
            static_cast<int64_t>(retrieved[c].edge_indices[p])));
      }
      const auto bundle =
          refine::make_bundle(trained.model, pruned, feats, items[c].question);
      put_llm_fixture(bundle.prompt, comps[c].generation);
      if (with_judge) {
        const auto sub_graph = pipeline::materialize(
            g, retrieved[c].nodes, retrieved[c].edge_indices);
        const auto rb = as_bundle(comps[c], sub_graph);
        put_llm_fixture(
            gateway::judge_prompt(items[c].question, rb,
                                  gateway::JudgeKind::relevance),
            c == 8 ? "Irrelevant" : "Relevant");
        put_llm_fixture(
            gateway::judge_prompt(items[c].question, rb,
                                  gateway::JudgeKind::faithfulness),
            c == 8 ? "Not Faithful" : "The answer is: Faithful.");
      }
    }
  };

  author_generation(cfg.aligner.steps, cfg.prune.n_seed, true);
  for (size_t steps : cfg.sweep.align_steps) {
    for (size_t n_seed : cfg.sweep.n_seed) {
      author_generation(steps, n_seed, false);
    }
  }

  size_t text_count = 0, llm_count = 0;
  for (const auto& f : fs::directory_iterator(text_dir)) (void)f, ++text_count;
  for (const auto& f : fs::directory_iterator(llm_dir)) (void)f, ++llm_count;
  std::cout << "toy corpus written to " << root.string() << ": "
            << g.node_count() << " nodes, " << g.edge_count() << " edges, "
            << items.size() << " questions, " << text_count
            << " text fixtures, " << llm_count << " llm fixtures\n";
  return 0;
}
