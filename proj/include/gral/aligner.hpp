#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/graph.hpp"
#include "gral/params.hpp"
#include "gral/tensor.hpp"

namespace gral::aligner {

struct AlignerHyper {
  size_t feat_dim = 1024;    // d_s: node/edge/query/anchor feature width
  size_t hidden_dim = 1024;  // d: encoder output width
  size_t layers = 4;         // L: message-passing rounds
  size_t target_dim = 1024;  // d_t: projected width shared with the generator
  double temperature = 0.07; // tau for the contrastive loss

  nlohmann::json to_json() const;
  static AlignerHyper from_json(const nlohmann::json& j);
  bool operator==(const AlignerHyper&) const = default;
};

// Per-example features, indexed like the subgraph: node_feats by ascending
// node id, edge_feats by edge position. All vectors are feat_dim wide.
struct FeatureSet {
  std::vector<std::vector<double>> node_feats;
  std::vector<std::vector<double>> edge_feats;
};

struct AlignTrainExample {
  std::string id;
  graph::TextualGraph subgraph;
  FeatureSet feats;
  std::vector<double> query_vec;      // q
  std::vector<double> anchor_vec;     // embedded joined anchor spans
  std::vector<double> rationale_vec;  // embedded joined rationale steps
  std::vector<double> graph_vec;      // embedded linearized subgraph (analysis)
};

using NodeScores = std::vector<double>;

// Encoder + node scorer + shared projection head with named parameters.
class AlignerModel {
 public:
  static AlignerModel init(const AlignerHyper& hyper, uint64_t seed);

  // L rounds of mean-aggregated messages m_{u->v} = W_n h_u + W_e e_{uv}
  // over the undirected edges, with a self-message W_n h_v, then relu.
  // Returns |V| x hidden_dim with rows in ascending node-id order.
  num::Tensor encode(const AlignTrainExample& ex) const;

  // concat(n_g(v), query) -> one hidden relu layer -> scalar per node.
  num::Tensor score_logits(const num::Tensor& node_emb,
                           const std::vector<double>& query_vec) const;

  // Shared projection: zero-pad to max(hidden_dim, feat_dim), then one
  // affine map to target_dim. Both overloads use the same weights.
  num::Tensor project(const num::Tensor& vec) const;
  std::vector<double> project(const std::vector<double>& vec) const;

  // softmax(score_logits(encode(ex))) as plain probabilities.
  NodeScores predict_scores(const AlignTrainExample& ex) const;

  void save(const std::string& path) const;
  static AlignerModel load(const std::string& path);

  AlignerHyper hyper;
  num::ParamStore params;
  uint64_t seed = 0;
};

// Anchor target: softmax over cos(node_feat, anchor_vec).
NodeScores anchor_distribution(const std::vector<std::vector<double>>& node_feats,
                               const std::vector<double>& anchor_vec);

// (1/|V|) * KL(p_anchor || p_prediction) with the prediction floored at 1e-12.
double node_alignment_loss(const NodeScores& p_anchor,
                           const NodeScores& p_prediction);

// Symmetric in-batch InfoNCE over cosine/temperature logits.
double graph_alignment_loss(const std::vector<std::vector<double>>& batch_g,
                            const std::vector<std::vector<double>>& batch_s,
                            double temperature);

struct TrainConfig {
  size_t steps = 60;
  size_t batch = 8;
  double lr = 1e-5;
  uint64_t seed = 17;
};

struct TrainLogRow {
  size_t step = 0;
  double loss_na = 0.0;
  double loss_ga = 0.0;
  double total = 0.0;
};

struct TrainResult {
  AlignerModel model;
  std::vector<TrainLogRow> log;
};

// Minimizes mean L_NA + L_GA over seeded shuffled batches for exactly
// cfg.steps optimizer steps ("align degree").
TrainResult train_aligner(const std::vector<AlignTrainExample>& dataset,
                          const AlignerHyper& hyper, const TrainConfig& cfg);

// One batch forward pass; exposed so training, tests, and the gradient
// oracle share the exact same loss graph.
num::Tensor batch_loss(const AlignerModel& model,
                       const std::vector<const AlignTrainExample*>& batch,
                       double* out_na = nullptr, double* out_ga = nullptr);

std::string train_log_csv(const std::vector<TrainLogRow>& log);

}  // namespace gral::aligner
