#include "gral/refine.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "gral/error.hpp"
#include "gral/prompts.hpp"
#include "gral/util.hpp"

namespace gral::refine {

using nlohmann::json;

PrunedSubgraph prune(const graph::TextualGraph& g_r,
                     const aligner::NodeScores& scores, size_t n_seed) {
  if (n_seed == 0)
    throw Error(Errc::config_invalid, "n_seed must be positive");
  graph::NodeSet ids = g_r.node_ids();
  if (scores.size() != ids.size())
    throw Error(Errc::score_length_mismatch,
                std::to_string(scores.size()) + " scores for " +
                    std::to_string(ids.size()) + " nodes");

  std::vector<size_t> order(ids.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  });

  PrunedSubgraph out;
  std::set<int64_t> keep;
  size_t seed_count = std::min(n_seed, ids.size());
  for (size_t i = 0; i < seed_count; ++i) {
    int64_t seed = ids[order[i]];
    out.seeds.push_back(seed);
    keep.insert(seed);
    for (int64_t nb : g_r.neighbors(seed)) keep.insert(nb);
  }
  graph::Subgraph sub = graph::induced_subgraph(
      g_r, graph::NodeSet(keep.begin(), keep.end()));
  out.graph = std::move(sub.graph);
  out.parent_edge_indices = std::move(sub.parent_edge_indices);
  return out;
}

json GenerationBundle::to_json() const {
  json j;
  j["prompt"] = prompt;
  j["linearized_graph"] = linearized_graph;
  j["token_count"] = token_count;
  j["graph_token"] = util::base64_encode_doubles(graph_token);
  j["d_t"] = target_dim;
  return j;
}

GenerationBundle GenerationBundle::from_json(const json& j) {
  GenerationBundle b;
  b.prompt = j.at("prompt").get<std::string>();
  b.linearized_graph = j.at("linearized_graph").get<std::string>();
  b.token_count = j.at("token_count").get<size_t>();
  b.graph_token = util::base64_decode_doubles(j.at("graph_token").get<std::string>());
  b.target_dim = j.at("d_t").get<size_t>();
  if (b.graph_token.size() != b.target_dim)
    throw Error(Errc::dimension_mismatch, "graph token width != d_t");
  return b;
}

GenerationBundle make_bundle(const aligner::AlignerModel& model,
                             const PrunedSubgraph& pruned,
                             const aligner::FeatureSet& feats,
                             const std::string& question) {
  if (pruned.graph.node_count() == 0)
    throw Error(Errc::empty_graph, "cannot bundle an empty pruned graph");
  aligner::AlignTrainExample ex;
  ex.id = "bundle";
  ex.subgraph = pruned.graph;
  ex.feats = feats;
  ex.query_vec.assign(model.hyper.feat_dim, 0.0);  // scorer unused here
  num::Tensor h = model.encode(ex);
  num::Tensor token = model.project(num::row_mean(h));

  GenerationBundle bundle;
  bundle.linearized_graph = graph::linearize(pruned.graph);
  bundle.prompt = prompts::render_prompt(
      prompts::TemplateId::generator_qa,
      {{"graph", bundle.linearized_graph}, {"question", question}});
  bundle.token_count = count_tokens(bundle.prompt);
  bundle.graph_token = token.values();
  bundle.target_dim = model.hyper.target_dim;
  return bundle;
}

std::string generate_answer(const GenerationBundle& bundle,
                            gateway::LlmGateway& gw) {
  return gw.complete(bundle.prompt);
}

size_t count_tokens(const std::string& text) {
  size_t count = 0;
  size_t i = 0;
  const size_t n = text.size();
  auto alnum = [](unsigned char c) { return std::isalnum(c) != 0; };
  auto space = [](unsigned char c) { return std::isspace(c) != 0; };
  while (i < n) {
    unsigned char c = text[i];
    if (space(c)) {
      ++i;
    } else if (alnum(c)) {
      while (i < n && alnum(text[i])) ++i;
      ++count;
    } else {
      while (i < n && !alnum(text[i]) && !space(text[i])) ++i;
      ++count;
    }
  }
  return count;
}

TokenCounter::TokenCounter(std::string service_url,
                           std::shared_ptr<gateway::HttpTransport> transport)
    : service_url_(std::move(service_url)), transport_(std::move(transport)) {
  if (!service_url_.empty() && !transport_)
    transport_ = gateway::make_httplib_transport();
}

size_t TokenCounter::count(const std::string& text) const {
  if (service_url_.empty()) return count_tokens(text);
  json body;
  body["text"] = text;
  auto resp = transport_->post_json(service_url_ + "/count",
                                    {{"Content-Type", "application/json"}},
                                    body.dump());
  if (!resp.ok())
    throw Error(Errc::provider_unavailable,
                "tokenizer service status " + std::to_string(resp.status));
  try {
    return json::parse(resp.body).at("count").get<size_t>();
  } catch (const json::exception& e) {
    throw Error(Errc::provider_unavailable,
                std::string("malformed tokenizer reply: ") + e.what());
  }
}

}  // namespace gral::refine
