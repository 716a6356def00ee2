#include "gral/config.hpp"

#include <filesystem>
#include <set>

#include "gral/error.hpp"
#include "gral/util.hpp"

namespace gral::config {
namespace {

using nlohmann::json;

void interpolate_strings(json& doc) {
  if (doc.is_string()) {
    doc = util::interpolate_env(doc.get<std::string>());
  } else if (doc.is_object() || doc.is_array()) {
    for (auto& item : doc) interpolate_strings(item);
  }
}

void require_known_keys(const json& obj, const std::string& where,
                        const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) {
      throw Error(Errc::config_invalid, "unknown key '" + key + "' in " + where);
    }
  }
}

json section(const json& doc, const std::string& name) {
  if (!doc.contains(name)) return json::object();
  if (!doc.at(name).is_object()) {
    throw Error(Errc::config_invalid, "'" + name + "' must be an object");
  }
  return doc.at(name);
}

template <typename T>
T pick(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::config_invalid, "bad value for '" + key + "'");
  }
}

void require_positive(double value, const std::string& what) {
  if (!(value > 0.0)) {
    throw Error(Errc::config_invalid, what + " must be positive");
  }
}

void require_min(size_t value, size_t min, const std::string& what) {
  if (value < min) {
    throw Error(Errc::config_invalid,
                what + " must be at least " + std::to_string(min));
  }
}

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw Error(Errc::config_invalid, what + " is not set");
  }
  if (!std::filesystem::exists(path)) {
    throw Error(Errc::config_invalid, what + " does not exist: " + path);
  }
}

}  // namespace

json PipelineConfig::to_json() const {
  json doc;
  doc["paths"] = {{"nodes_file", paths.nodes_file},
                  {"edges_file", paths.edges_file},
                  {"embeddings_file", paths.embeddings_file},
                  {"dataset_file", paths.dataset_file},
                  {"text_fixture_dir", paths.text_fixture_dir},
                  {"llm_fixture_dir", paths.llm_fixture_dir},
                  {"output_dir", paths.output_dir}};
  doc["retrieval"] = {{"k", retrieval.k},
                      {"edge_cost", retrieval.edge_cost},
                      {"mode", retrieval.mode}};
  doc["aligner"] = {{"feat_dim", aligner.feat_dim},
                    {"hidden_dim", aligner.hidden_dim},
                    {"layers", aligner.layers},
                    {"target_dim", aligner.target_dim},
                    {"temperature", aligner.temperature},
                    {"steps", aligner.steps},
                    {"batch", aligner.batch},
                    {"lr", aligner.lr},
                    {"seed", aligner.seed}};
  doc["prune"] = {{"n_seed", prune.n_seed}};
  doc["gateway"] = {{"base_url", gateway.base_url},
                    {"model", gateway.model},
                    {"offline", gateway.offline},
                    {"api_key_env", gateway.api_key_env}};
  doc["embedding"] = {{"base_url", embedding.base_url},
                      {"offline", embedding.offline},
                      {"api_key_env", embedding.api_key_env}};
  doc["eval"] = {{"judge", eval.judge}};
  doc["sweep"] = {{"n_seed", sweep.n_seed},
                  {"align_steps", sweep.align_steps},
                  {"top_k", sweep.top_k}};
  doc["tokenizer_url"] = tokenizer_url;
  return doc;
}

PipelineConfig PipelineConfig::from_json(json doc, bool check_paths) {
  if (!doc.is_object()) {
    throw Error(Errc::config_invalid, "config root must be an object");
  }
  interpolate_strings(doc);
  require_known_keys(doc, "config",
                     {"paths", "retrieval", "aligner", "prune", "gateway",
                      "embedding", "eval", "sweep", "tokenizer_url"});

  PipelineConfig cfg;
  const json p = section(doc, "paths");
  require_known_keys(p, "paths",
                     {"nodes_file", "edges_file", "embeddings_file",
                      "dataset_file", "text_fixture_dir", "llm_fixture_dir",
                      "output_dir"});
  cfg.paths.nodes_file = pick<std::string>(p, "nodes_file", "");
  cfg.paths.edges_file = pick<std::string>(p, "edges_file", "");
  cfg.paths.embeddings_file = pick<std::string>(p, "embeddings_file", "");
  cfg.paths.dataset_file = pick<std::string>(p, "dataset_file", "");
  cfg.paths.text_fixture_dir = pick<std::string>(p, "text_fixture_dir", "");
  cfg.paths.llm_fixture_dir = pick<std::string>(p, "llm_fixture_dir", "");
  cfg.paths.output_dir = pick<std::string>(p, "output_dir", "");

  const json r = section(doc, "retrieval");
  require_known_keys(r, "retrieval", {"k", "edge_cost", "mode"});
  cfg.retrieval.k = pick<size_t>(r, "k", cfg.retrieval.k);
  cfg.retrieval.edge_cost = pick<double>(r, "edge_cost", cfg.retrieval.edge_cost);
  cfg.retrieval.mode = pick<std::string>(r, "mode", cfg.retrieval.mode);

  const json a = section(doc, "aligner");
  require_known_keys(a, "aligner",
                     {"feat_dim", "hidden_dim", "layers", "target_dim",
                      "temperature", "steps", "batch", "lr", "seed"});
  cfg.aligner.feat_dim = pick<size_t>(a, "feat_dim", cfg.aligner.feat_dim);
  cfg.aligner.hidden_dim = pick<size_t>(a, "hidden_dim", cfg.aligner.hidden_dim);
  cfg.aligner.layers = pick<size_t>(a, "layers", cfg.aligner.layers);
  cfg.aligner.target_dim = pick<size_t>(a, "target_dim", cfg.aligner.target_dim);
  cfg.aligner.temperature =
      pick<double>(a, "temperature", cfg.aligner.temperature);
  cfg.aligner.steps = pick<size_t>(a, "steps", cfg.aligner.steps);
  cfg.aligner.batch = pick<size_t>(a, "batch", cfg.aligner.batch);
  cfg.aligner.lr = pick<double>(a, "lr", cfg.aligner.lr);
  cfg.aligner.seed = pick<uint64_t>(a, "seed", cfg.aligner.seed);

  const json pr = section(doc, "prune");
  require_known_keys(pr, "prune", {"n_seed"});
  cfg.prune.n_seed = pick<size_t>(pr, "n_seed", cfg.prune.n_seed);

  const json g = section(doc, "gateway");
  require_known_keys(g, "gateway", {"base_url", "model", "offline", "api_key_env"});
  cfg.gateway.base_url = pick<std::string>(g, "base_url", "");
  cfg.gateway.model = pick<std::string>(g, "model", cfg.gateway.model);
  cfg.gateway.offline = pick<bool>(g, "offline", cfg.gateway.offline);
  cfg.gateway.api_key_env =
      pick<std::string>(g, "api_key_env", cfg.gateway.api_key_env);

  const json e = section(doc, "embedding");
  require_known_keys(e, "embedding", {"base_url", "offline", "api_key_env"});
  cfg.embedding.base_url = pick<std::string>(e, "base_url", "");
  cfg.embedding.offline = pick<bool>(e, "offline", cfg.embedding.offline);
  cfg.embedding.api_key_env =
      pick<std::string>(e, "api_key_env", cfg.embedding.api_key_env);

  const json ev = section(doc, "eval");
  require_known_keys(ev, "eval", {"judge"});
  cfg.eval.judge = pick<bool>(ev, "judge", cfg.eval.judge);

  const json sw = section(doc, "sweep");
  require_known_keys(sw, "sweep", {"n_seed", "align_steps", "top_k"});
  cfg.sweep.n_seed = pick<std::vector<size_t>>(sw, "n_seed", {});
  cfg.sweep.align_steps = pick<std::vector<size_t>>(sw, "align_steps", {});
  cfg.sweep.top_k = pick<std::vector<size_t>>(sw, "top_k", {});

  cfg.tokenizer_url = pick<std::string>(doc, "tokenizer_url", "");

  require_min(cfg.retrieval.k, 1, "retrieval.k");
  require_positive(cfg.retrieval.edge_cost, "retrieval.edge_cost");
  if (cfg.retrieval.mode != "exact" && cfg.retrieval.mode != "heuristic") {
    throw Error(Errc::config_invalid,
                "retrieval.mode must be 'exact' or 'heuristic'");
  }
  require_min(cfg.aligner.feat_dim, 1, "aligner.feat_dim");
  require_min(cfg.aligner.hidden_dim, 1, "aligner.hidden_dim");
  require_min(cfg.aligner.layers, 1, "aligner.layers");
  require_min(cfg.aligner.target_dim, 1, "aligner.target_dim");
  require_positive(cfg.aligner.temperature, "aligner.temperature");
  require_min(cfg.aligner.steps, 1, "aligner.steps");
  require_min(cfg.aligner.batch, 1, "aligner.batch");
  require_positive(cfg.aligner.lr, "aligner.lr");
  require_min(cfg.prune.n_seed, 1, "prune.n_seed");
  for (size_t v : cfg.sweep.n_seed) require_min(v, 1, "sweep.n_seed entry");
  for (size_t v : cfg.sweep.align_steps)
    require_min(v, 1, "sweep.align_steps entry");
  for (size_t v : cfg.sweep.top_k) require_min(v, 1, "sweep.top_k entry");
  if (!cfg.sweep.empty() &&
      (cfg.sweep.n_seed.empty() || cfg.sweep.align_steps.empty() ||
       cfg.sweep.top_k.empty())) {
    throw Error(Errc::config_invalid,
                "sweep grid needs n_seed, align_steps and top_k lists");
  }

  if (cfg.paths.output_dir.empty()) {
    throw Error(Errc::config_invalid, "paths.output_dir is not set");
  }
  if (check_paths) {
    require_file(cfg.paths.nodes_file, "paths.nodes_file");
    require_file(cfg.paths.edges_file, "paths.edges_file");
    require_file(cfg.paths.embeddings_file, "paths.embeddings_file");
    require_file(cfg.paths.dataset_file, "paths.dataset_file");
    if (cfg.embedding.offline) {
      require_file(cfg.paths.text_fixture_dir, "paths.text_fixture_dir");
    }
    if (cfg.gateway.offline) {
      require_file(cfg.paths.llm_fixture_dir, "paths.llm_fixture_dir");
    }
  }

  cfg.config_hash = util::sha256_hex(cfg.to_json().dump());
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path, bool check_paths) {
  json doc;
  try {
    doc = json::parse(util::read_file(path));
  } catch (const json::exception& ex) {
    throw Error(Errc::config_invalid,
                "cannot parse " + path + ": " + ex.what());
  }
  return from_json(std::move(doc), check_paths);
}

}  // namespace gral::config
