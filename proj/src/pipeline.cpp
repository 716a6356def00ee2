#include "gral/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "gral/error.hpp"
#include "gral/evalkit.hpp"
#include "gral/refine.hpp"
#include "gral/retrieval.hpp"
#include "gral/util.hpp"

namespace gral::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct StageInfo {
  const char* name;
  const char* dir;
  std::vector<const char*> needs;
};

const std::vector<StageInfo>& stage_table() {
  static const std::vector<StageInfo> table = {
      {"ingest", "ingest", {}},
      {"retrieve", "retrieve", {"ingest"}},
      {"extract", "extract", {"ingest", "retrieve"}},
      {"train-aligner", "aligner", {"ingest", "retrieve", "extract"}},
      {"prune", "prune", {"ingest", "retrieve", "train-aligner"}},
      {"generate", "generate", {"ingest", "prune", "train-aligner"}},
      {"eval", "eval", {"generate"}},
      {"analyze-alignment", "analysis",
       {"ingest", "retrieve", "extract", "train-aligner"}},
      {"sweep", "sweep", {"ingest"}},
  };
  return table;
}

const StageInfo& stage_info(const std::string& name) {
  for (const auto& info : stage_table()) {
    if (name == info.name) return info;
  }
  throw Error(Errc::config_invalid, "unknown stage '" + name + "'");
}

// Advisory single-writer lock on the output directory.
class ScopedLock {
 public:
  explicit ScopedLock(std::string path) : path_(std::move(path)) {
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
      throw Error(Errc::output_locked,
                  "lock file exists: " + path_ +
                      " (another run in progress, or remove a stale lock)");
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    (void)!::write(fd, pid.data(), pid.size());
    ::close(fd);
  }
  ~ScopedLock() { ::unlink(path_.c_str()); }
  ScopedLock(const ScopedLock&) = delete;
  ScopedLock& operator=(const ScopedLock&) = delete;

 private:
  std::string path_;
};

bool filename_safe(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return s != "." && s != "..";
}

gateway::Anchor::Kind anchor_kind_from(const std::string& name) {
  if (name == "entity") return gateway::Anchor::Kind::entity;
  if (name == "relation") return gateway::Anchor::Kind::relation;
  throw Error(Errc::io_error, "corrupt anchor kind '" + name + "'");
}

const char* anchor_kind_name(gateway::Anchor::Kind kind) {
  return kind == gateway::Anchor::Kind::entity ? "entity" : "relation";
}

json bundle_to_artifact(const gateway::RationaleBundle& b) {
  json anchors = json::array();
  for (const auto& a : b.anchors) {
    anchors.push_back({{"kind", anchor_kind_name(a.kind)},
                       {"span", a.span},
                       {"grounded_ids", a.grounded_ids}});
  }
  return {{"steps", b.steps},
          {"anchors", anchors},
          {"anchors_text", b.anchors_text()},
          {"rationale_text", b.rationale_text()}};
}

gateway::RationaleBundle bundle_from_artifact(const json& doc) {
  gateway::RationaleBundle b;
  b.steps = doc.at("steps").get<std::vector<std::string>>();
  for (const auto& a : doc.at("anchors")) {
    gateway::Anchor anchor;
    anchor.kind = anchor_kind_from(a.at("kind").get<std::string>());
    anchor.span = a.at("span").get<std::string>();
    anchor.grounded_ids = a.at("grounded_ids").get<std::vector<int64_t>>();
    b.anchors.push_back(std::move(anchor));
  }
  return b;
}

std::string metric_cell(bool valid, double value) {
  return valid ? util::format_double(value) : std::string();
}

}  // namespace

std::vector<DatasetItem> load_dataset(const std::string& path) {
  json doc;
  try {
    doc = json::parse(util::read_file(path));
  } catch (const json::exception& ex) {
    throw Error(Errc::malformed_row,
                "cannot parse dataset " + path + ": " + ex.what());
  }
  if (!doc.is_array()) {
    throw Error(Errc::malformed_row, "dataset must be a JSON array");
  }
  if (doc.empty()) throw Error(Errc::empty_dataset, "dataset has no examples");

  std::vector<DatasetItem> items;
  std::set<std::string> seen;
  for (size_t i = 0; i < doc.size(); ++i) {
    const json& entry = doc.at(i);
    const std::string where = "dataset entry " + std::to_string(i);
    if (!entry.is_object() || !entry.contains("id") ||
        !entry.contains("question") || !entry.contains("answers")) {
      throw Error(Errc::malformed_row,
                  where + ": need id, question and answers");
    }
    DatasetItem item;
    try {
      item.id = entry.at("id").get<std::string>();
      item.question = entry.at("question").get<std::string>();
      item.answers = entry.at("answers").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw Error(Errc::malformed_row, where + ": wrong field types");
    }
    if (!filename_safe(item.id)) {
      throw Error(Errc::malformed_row,
                  where + ": id must be a safe artifact name");
    }
    if (!seen.insert(item.id).second) {
      throw Error(Errc::malformed_row, where + ": duplicate id " + item.id);
    }
    if (item.answers.empty()) {
      throw Error(Errc::empty_gold, where + ": no gold answers");
    }
    items.push_back(std::move(item));
  }
  return items;
}

graph::TextualGraph materialize(const graph::TextualGraph& parent,
                                const graph::NodeSet& node_ids,
                                const std::vector<size_t>& edge_indices) {
  std::map<int64_t, std::string> nodes;
  for (int64_t id : node_ids) nodes[id] = parent.node_text(id);
  std::vector<graph::Edge> edges;
  edges.reserve(edge_indices.size());
  for (size_t idx : edge_indices) {
    if (idx >= parent.edge_count()) {
      throw Error(Errc::io_error,
                  "edge position " + std::to_string(idx) + " out of range");
    }
    edges.push_back(parent.edges()[idx]);
  }
  return graph::TextualGraph(std::move(nodes), std::move(edges));
}

aligner::AlignTrainExample make_align_example(
    const graph::TextualGraph& parent, const embed::EmbeddingTable& table,
    embed::TextEmbedder& embedder, const DatasetItem& item,
    const graph::NodeSet& node_ids, const std::vector<size_t>& edge_indices,
    const std::string& anchors_text, const std::string& rationale_text) {
  aligner::AlignTrainExample ex;
  ex.id = item.id;
  ex.subgraph = materialize(parent, node_ids, edge_indices);
  const auto ids = ex.subgraph.node_ids();
  ex.feats.node_feats.reserve(ids.size());
  for (int64_t id : ids) ex.feats.node_feats.push_back(table.node_vec(id));
  ex.feats.edge_feats.reserve(edge_indices.size());
  for (size_t idx : edge_indices) {
    ex.feats.edge_feats.push_back(table.edge_vec(static_cast<int64_t>(idx)));
  }
  ex.query_vec = embedder.embed(item.question);
  if (!anchors_text.empty()) ex.anchor_vec = embedder.embed(anchors_text);
  if (!rationale_text.empty())
    ex.rationale_vec = embedder.embed(rationale_text);
  ex.graph_vec = embedder.embed(graph::linearize(ex.subgraph));
  return ex;
}

Pipeline::Pipeline(config::PipelineConfig cfg) : cfg_(std::move(cfg)) {}

std::vector<std::string> Pipeline::stage_names() {
  std::vector<std::string> names;
  for (const auto& info : stage_table()) names.emplace_back(info.name);
  return names;
}

std::string Pipeline::out(const std::string& rel) const {
  return (fs::path(cfg_.paths.output_dir) / rel).string();
}

void Pipeline::put_text(const std::string& rel, const std::string& content) {
  util::write_file(out(rel), content);
}

void Pipeline::put_json(const std::string& rel, const json& doc) {
  put_text(rel, doc.dump(2) + "\n");
}

json Pipeline::get_json(const std::string& rel) const {
  const std::string path = out(rel);
  if (!fs::exists(path)) {
    throw Error(Errc::missing_artifact, "artifact not found: " + path);
  }
  try {
    return json::parse(util::read_file(path));
  } catch (const json::exception& ex) {
    throw Error(Errc::io_error, "corrupt artifact " + path + ": " + ex.what());
  }
}

void Pipeline::need(const std::string& stage) const {
  const StageInfo& info = stage_info(stage);
  const std::string meta = out(std::string(info.dir) + "/meta.json");
  if (!fs::exists(meta)) {
    throw Error(Errc::missing_artifact,
                "missing " + meta + "; run the '" + stage + "' stage first");
  }
}

const graph::TextualGraph& Pipeline::graph() {
  if (!graph_) {
    graph_ = graph::load_graph_files(out("ingest/nodes.csv"),
                                     out("ingest/edges.csv"));
  }
  return *graph_;
}

const embed::EmbeddingTable& Pipeline::table() {
  if (!table_) table_ = embed::load_embeddings(cfg_.paths.embeddings_file);
  return *table_;
}

const std::vector<DatasetItem>& Pipeline::dataset() {
  if (!dataset_) dataset_ = load_dataset(cfg_.paths.dataset_file);
  return *dataset_;
}

embed::TextEmbedder& Pipeline::embedder() {
  if (!embedder_) {
    auto mode = record_ ? embed::ProviderMode::record
                        : (cfg_.embedding.offline ? embed::ProviderMode::fixture
                                                  : embed::ProviderMode::service);
    embedder_ = std::make_unique<embed::TextEmbedder>(
        mode, cfg_.paths.text_fixture_dir, cfg_.embedding.base_url, nullptr,
        cfg_.embedding.api_key_env);
  }
  return *embedder_;
}

gateway::LlmGateway& Pipeline::gw() {
  if (!gw_) {
    auto mode = record_ ? gateway::GatewayMode::record
                        : (cfg_.gateway.offline ? gateway::GatewayMode::fixture
                                                : gateway::GatewayMode::service);
    gw_ = std::make_unique<gateway::LlmGateway>(
        mode, cfg_.paths.llm_fixture_dir, cfg_.gateway.base_url, nullptr,
        cfg_.gateway.api_key_env);
  }
  return *gw_;
}

aligner::AlignerHyper Pipeline::hyper() const {
  aligner::AlignerHyper h;
  h.feat_dim = cfg_.aligner.feat_dim;
  h.hidden_dim = cfg_.aligner.hidden_dim;
  h.layers = cfg_.aligner.layers;
  h.target_dim = cfg_.aligner.target_dim;
  h.temperature = cfg_.aligner.temperature;
  return h;
}

json Pipeline::run(const std::string& stage, bool dry_run) {
  const StageInfo& info = stage_info(stage);
  std::vector<std::string> needs(info.needs.begin(), info.needs.end());
  if (stage == "eval" && cfg_.eval.judge) needs.push_back("extract");

  if (dry_run) {
    json missing = json::array();
    for (const auto& dep : needs) {
      const std::string meta =
          out(std::string(stage_info(dep).dir) + "/meta.json");
      if (!fs::exists(meta)) missing.push_back(dep);
    }
    return {{"stage", stage},
            {"dry_run", true},
            {"writes", out(info.dir)},
            {"missing_prerequisites", missing},
            {"ready", missing.empty()}};
  }

  fs::create_directories(cfg_.paths.output_dir);
  ScopedLock lock(out(".gral.lock"));
  for (const auto& dep : needs) need(dep);

  json meta;
  if (stage == "ingest") meta = ingest();
  else if (stage == "retrieve") meta = retrieve_stage();
  else if (stage == "extract") meta = extract_stage();
  else if (stage == "train-aligner") meta = train_stage();
  else if (stage == "prune") meta = prune_stage();
  else if (stage == "generate") meta = generate_stage();
  else if (stage == "eval") meta = eval_stage();
  else if (stage == "analyze-alignment") meta = analyze_stage();
  else meta = sweep_stage();

  meta["stage"] = stage;
  meta["config_hash"] = cfg_.config_hash;
  put_json(std::string(info.dir) + "/meta.json", meta);
  return meta;
}

json Pipeline::ingest() {
  auto g = graph::load_graph_files(cfg_.paths.nodes_file, cfg_.paths.edges_file);
  const auto& tbl = table();
  if (tbl.dim != cfg_.aligner.feat_dim) {
    throw Error(Errc::dimension_mismatch,
                "embedding dim " + std::to_string(tbl.dim) +
                    " != aligner.feat_dim " +
                    std::to_string(cfg_.aligner.feat_dim));
  }
  for (int64_t id : g.node_ids()) tbl.node_vec(id);
  for (size_t e = 0; e < g.edge_count(); ++e)
    tbl.edge_vec(static_cast<int64_t>(e));
  const auto& items = dataset();

  put_text("ingest/nodes.csv", graph::emit_nodes_table(g));
  put_text("ingest/edges.csv", graph::emit_edges_table(g));
  return {{"nodes", g.node_count()},
          {"edges", g.edge_count()},
          {"dim", tbl.dim},
          {"examples", items.size()}};
}

json Pipeline::retrieve_stage() {
  const auto& g = graph();
  const auto& tbl = table();
  const auto mode = cfg_.retrieval.mode == "exact"
                        ? retrieval::PcstMode::exact
                        : retrieval::PcstMode::heuristic;
  for (const auto& item : dataset()) {
    const auto query = embedder().embed(item.question);
    const auto sub = retrieval::retrieve(g, tbl, query, cfg_.retrieval.k,
                                         cfg_.retrieval.edge_cost, mode);
    put_json("retrieve/" + item.id + ".json",
             {{"id", item.id},
              {"node_ids", sub.nodes},
              {"edge_indices", sub.edge_indices},
              {"objective", sub.objective},
              {"config_hash", cfg_.config_hash}});
  }
  return {{"count", dataset().size()},
          {"k", cfg_.retrieval.k},
          {"edge_cost", cfg_.retrieval.edge_cost},
          {"mode", cfg_.retrieval.mode}};
}

json Pipeline::extract_stage() {
  size_t warning_total = 0;
  for (const auto& item : dataset()) {
    const json r = get_json("retrieve/" + item.id + ".json");
    const auto sub = materialize(
        graph(), r.at("node_ids").get<graph::NodeSet>(),
        r.at("edge_indices").get<std::vector<size_t>>());
    std::vector<std::string> warnings;
    const auto bundle = gateway::extract_rationale(
        item.question, item.answers.front(), sub, gw(), 2,
        [&warnings](const std::string& w) { warnings.push_back(w); });
    warning_total += warnings.size();
    json doc = bundle_to_artifact(bundle);
    doc["id"] = item.id;
    doc["warnings"] = warnings;
    doc["config_hash"] = cfg_.config_hash;
    put_json("extract/" + item.id + ".json", doc);
  }
  return {{"count", dataset().size()}, {"warnings", warning_total}};
}

aligner::AlignTrainExample Pipeline::example_from_artifacts(
    const DatasetItem& item, bool with_texts) {
  const json r = get_json("retrieve/" + item.id + ".json");
  std::string anchors_text, rationale_text;
  if (with_texts) {
    const json e = get_json("extract/" + item.id + ".json");
    anchors_text = e.at("anchors_text").get<std::string>();
    rationale_text = e.at("rationale_text").get<std::string>();
  }
  return make_align_example(graph(), table(), embedder(), item,
                            r.at("node_ids").get<graph::NodeSet>(),
                            r.at("edge_indices").get<std::vector<size_t>>(),
                            anchors_text, rationale_text);
}

json Pipeline::train_stage() {
  std::vector<aligner::AlignTrainExample> examples;
  for (const auto& item : dataset()) {
    examples.push_back(example_from_artifacts(item, true));
  }
  auto init = aligner::AlignerModel::init(hyper(), cfg_.aligner.seed);
  init.save(out("aligner/init.ckpt"));

  aligner::TrainConfig tc;
  tc.steps = cfg_.aligner.steps;
  tc.batch = cfg_.aligner.batch;
  tc.lr = cfg_.aligner.lr;
  tc.seed = cfg_.aligner.seed;
  auto result = aligner::train_aligner(examples, hyper(), tc);
  result.model.save(out("aligner/model.ckpt"));
  put_text("aligner/train_log.csv", aligner::train_log_csv(result.log));

  const auto& last = result.log.back();
  return {{"steps", tc.steps},
          {"batch", tc.batch},
          {"lr", tc.lr},
          {"examples", examples.size()},
          {"final_loss",
           {{"node_align", last.loss_na},
            {"graph_align", last.loss_ga},
            {"total", last.total}}}};
}

json Pipeline::prune_stage() {
  const auto model = aligner::AlignerModel::load(out("aligner/model.ckpt"));
  size_t before_total = 0, after_total = 0;
  for (const auto& item : dataset()) {
    const json r = get_json("retrieve/" + item.id + ".json");
    const auto ex = example_from_artifacts(item, false);
    const auto scores = model.predict_scores(ex);
    const auto pruned = refine::prune(ex.subgraph, scores, cfg_.prune.n_seed);
    const auto retrieved_edges = r.at("edge_indices").get<std::vector<size_t>>();
    std::vector<size_t> edge_indices;
    edge_indices.reserve(pruned.parent_edge_indices.size());
    for (size_t p : pruned.parent_edge_indices)
      edge_indices.push_back(retrieved_edges.at(p));
    before_total += ex.subgraph.node_count();
    after_total += pruned.graph.node_count();
    put_json("prune/" + item.id + ".json",
             {{"id", item.id},
              {"seeds", pruned.seeds},
              {"node_ids", pruned.graph.node_ids()},
              {"edge_indices", edge_indices},
              {"nodes_before", ex.subgraph.node_count()},
              {"nodes_after", pruned.graph.node_count()},
              {"config_hash", cfg_.config_hash}});
  }
  const double n = static_cast<double>(dataset().size());
  return {{"count", dataset().size()},
          {"n_seed", cfg_.prune.n_seed},
          {"mean_nodes_before", before_total / n},
          {"mean_nodes_after", after_total / n}};
}

json Pipeline::generate_stage() {
  const auto model = aligner::AlignerModel::load(out("aligner/model.ckpt"));
  refine::TokenCounter counter(cfg_.tokenizer_url);
  size_t token_total = 0;
  for (const auto& item : dataset()) {
    const json p = get_json("prune/" + item.id + ".json");
    refine::PrunedSubgraph pruned;
    pruned.seeds = p.at("seeds").get<std::vector<int64_t>>();
    pruned.parent_edge_indices =
        p.at("edge_indices").get<std::vector<size_t>>();
    pruned.graph = materialize(graph(), p.at("node_ids").get<graph::NodeSet>(),
                               pruned.parent_edge_indices);
    aligner::FeatureSet feats;
    for (int64_t id : pruned.graph.node_ids())
      feats.node_feats.push_back(table().node_vec(id));
    for (size_t idx : pruned.parent_edge_indices)
      feats.edge_feats.push_back(table().edge_vec(static_cast<int64_t>(idx)));

    auto bundle = refine::make_bundle(model, pruned, feats, item.question);
    bundle.token_count = counter.count(bundle.prompt);
    token_total += bundle.token_count;
    const std::string answer = refine::generate_answer(bundle, gw());
    json doc = bundle.to_json();
    doc["id"] = item.id;
    doc["config_hash"] = cfg_.config_hash;
    put_json("generate/" + item.id + ".bundle.json", doc);
    put_text("generate/" + item.id + ".answer.txt", answer);
  }
  return {{"count", dataset().size()},
          {"mean_tokens",
           static_cast<double>(token_total) /
               static_cast<double>(dataset().size())}};
}

json Pipeline::eval_stage() {
  std::vector<evalkit::EvalRecord> records;
  std::map<std::string, size_t> judge_counts;
  for (const auto& item : dataset()) {
    evalkit::EvalRecord rec;
    rec.id = item.id;
    const std::string answer_path = out("generate/" + item.id + ".answer.txt");
    if (!fs::exists(answer_path)) {
      throw Error(Errc::missing_artifact, "artifact not found: " + answer_path);
    }
    rec.prediction = util::read_file(answer_path);
    rec.metrics = evalkit::exact_metrics(rec.prediction, item.answers);
    const json b = get_json("generate/" + item.id + ".bundle.json");
    rec.token_count = b.at("token_count").get<size_t>();
    if (cfg_.eval.judge) {
      const auto bundle =
          bundle_from_artifact(get_json("extract/" + item.id + ".json"));
      rec.relevance_label = gateway::judge_label_name(gateway::judge(
          item.question, bundle, gateway::JudgeKind::relevance, gw()));
      rec.faithfulness_label = gateway::judge_label_name(gateway::judge(
          item.question, bundle, gateway::JudgeKind::faithfulness, gw()));
      judge_counts[rec.relevance_label]++;
      judge_counts[rec.faithfulness_label]++;
    }
    records.push_back(std::move(rec));
  }
  const auto summary = evalkit::summarize(records);
  put_text("eval/records.csv", evalkit::records_csv(records));
  json doc = {{"count", summary.count},
              {"hit1", summary.hit1},
              {"f1", summary.f1},
              {"accuracy", summary.accuracy},
              {"mean_tokens", summary.mean_tokens},
              {"config_hash", cfg_.config_hash}};
  if (cfg_.eval.judge) doc["judge_counts"] = judge_counts;
  put_json("eval/summary.json", doc);
  doc.erase("config_hash");
  return doc;
}

json Pipeline::analyze_stage() {
  const auto before = aligner::AlignerModel::load(out("aligner/init.ckpt"));
  const auto after = aligner::AlignerModel::load(out("aligner/model.ckpt"));
  std::vector<aligner::AlignTrainExample> examples;
  for (const auto& item : dataset()) {
    examples.push_back(example_from_artifacts(item, true));
  }
  const auto report = evalkit::alignment_analysis(before, after, examples);
  put_text("analysis/alignment.csv", evalkit::alignment_csv(report));
  put_text("analysis/plot_data.csv", evalkit::alignment_plot_data(report));
  json deltas = json::object();
  for (const auto& [target, mean_after] : report.mean_after) {
    deltas[target] = mean_after - report.mean_before.at(target);
  }
  put_json("analysis/summary.json", {{"mean_before", report.mean_before},
                                     {"mean_after", report.mean_after},
                                     {"delta", deltas},
                                     {"config_hash", cfg_.config_hash}});
  return {{"examples", examples.size()},
          {"mean_before", report.mean_before},
          {"mean_after", report.mean_after}};
}

json Pipeline::sweep_stage() {
  if (cfg_.sweep.empty()) {
    throw Error(Errc::config_invalid, "sweep grid is empty");
  }
  const auto& g = graph();
  const auto& tbl = table();
  const auto mode = cfg_.retrieval.mode == "exact"
                        ? retrieval::PcstMode::exact
                        : retrieval::PcstMode::heuristic;
  refine::TokenCounter counter(cfg_.tokenizer_url);

  struct Cell {
    size_t n_seed = 0, steps = 0, k = 0;
    bool ok = false;
    std::string error;
    evalkit::EvalSummary summary;
  };
  std::vector<Cell> cells;

  for (size_t n_seed : cfg_.sweep.n_seed) {
    for (size_t steps : cfg_.sweep.align_steps) {
      for (size_t k : cfg_.sweep.top_k) {
        Cell cell;
        cell.n_seed = n_seed;
        cell.steps = steps;
        cell.k = k;
        try {
          std::vector<aligner::AlignTrainExample> examples;
          std::vector<std::vector<size_t>> retrieved_edges;
          for (const auto& item : dataset()) {
            const auto query = embedder().embed(item.question);
            const auto sub = retrieval::retrieve(g, tbl, query, k,
                                                 cfg_.retrieval.edge_cost, mode);
            const auto sub_graph = materialize(g, sub.nodes, sub.edge_indices);
            const auto bundle = gateway::extract_rationale(
                item.question, item.answers.front(), sub_graph, gw(), 2);
            examples.push_back(make_align_example(
                g, tbl, embedder(), item, sub.nodes, sub.edge_indices,
                bundle.anchors_text(), bundle.rationale_text()));
            retrieved_edges.push_back(sub.edge_indices);
          }
          aligner::TrainConfig tc;
          tc.steps = steps;
          tc.batch = cfg_.aligner.batch;
          tc.lr = cfg_.aligner.lr;
          tc.seed = cfg_.aligner.seed;
          const auto trained = aligner::train_aligner(examples, hyper(), tc);

          std::vector<evalkit::EvalRecord> records;
          for (size_t i = 0; i < examples.size(); ++i) {
            const auto& item = dataset()[i];
            const auto scores = trained.model.predict_scores(examples[i]);
            const auto pruned =
                refine::prune(examples[i].subgraph, scores, n_seed);
            aligner::FeatureSet feats;
            for (int64_t id : pruned.graph.node_ids())
              feats.node_feats.push_back(tbl.node_vec(id));
            for (size_t p : pruned.parent_edge_indices) {
              feats.edge_feats.push_back(tbl.edge_vec(
                  static_cast<int64_t>(retrieved_edges[i].at(p))));
            }
            auto bundle =
                refine::make_bundle(trained.model, pruned, feats, item.question);
            bundle.token_count = counter.count(bundle.prompt);
            evalkit::EvalRecord rec;
            rec.id = item.id;
            rec.prediction = refine::generate_answer(bundle, gw());
            rec.metrics = evalkit::exact_metrics(rec.prediction, item.answers);
            rec.token_count = bundle.token_count;
            records.push_back(std::move(rec));
          }
          cell.summary = evalkit::summarize(records);
          cell.ok = true;
        } catch (const Error& ex) {
          cell.error = ex.code_name();
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  std::string csv = "n_seed,align_steps,top_k,hit1,f1,accuracy,mean_tokens,error\n";
  size_t errors = 0;
  for (const auto& cell : cells) {
    if (!cell.ok) ++errors;
    csv += std::to_string(cell.n_seed) + "," + std::to_string(cell.steps) +
           "," + std::to_string(cell.k) + "," +
           metric_cell(cell.ok, cell.summary.hit1) + "," +
           metric_cell(cell.ok, cell.summary.f1) + "," +
           metric_cell(cell.ok, cell.summary.accuracy) + "," +
           metric_cell(cell.ok, cell.summary.mean_tokens) + "," + cell.error +
           "\n";
  }
  put_text("sweep/results.csv", csv);

  // n_seed x align_steps matrices at the first top_k value, heatmap-ready
  const size_t k0 = cfg_.sweep.top_k.front();
  auto matrix_csv = [&](auto metric) {
    std::string text = "n_seed";
    for (size_t steps : cfg_.sweep.align_steps)
      text += "," + std::to_string(steps);
    text += "\n";
    for (size_t n_seed : cfg_.sweep.n_seed) {
      text += std::to_string(n_seed);
      for (size_t steps : cfg_.sweep.align_steps) {
        text += ",";
        for (const auto& cell : cells) {
          if (cell.n_seed == n_seed && cell.steps == steps && cell.k == k0) {
            if (cell.ok) text += util::format_double(metric(cell.summary));
            break;
          }
        }
      }
      text += "\n";
    }
    return text;
  };
  put_text("sweep/heatmap_f1.csv",
           matrix_csv([](const evalkit::EvalSummary& s) { return s.f1; }));
  put_text("sweep/heatmap_tokens.csv", matrix_csv([](const evalkit::EvalSummary& s) {
             return s.mean_tokens;
           }));

  return {{"cells", cells.size()}, {"errors", errors}};
}

}  // namespace gral::pipeline
