#include "gral/aligner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gral/embedding.hpp"
#include "gral/error.hpp"
#include "gral/util.hpp"

namespace gral::aligner {

using num::Tensor;
using nlohmann::json;

namespace {

std::vector<double> softmax_values(const std::vector<double>& x) {
  double mx = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (double& v : out) v /= z;
  return out;
}

void check_example(const AlignTrainExample& ex, const AlignerHyper& hyper) {
  size_t n = ex.subgraph.node_count();
  if (n == 0) throw Error(Errc::empty_graph, "example " + ex.id);
  if (ex.feats.node_feats.size() != n ||
      ex.feats.edge_feats.size() != ex.subgraph.edge_count())
    throw Error(Errc::dimension_mismatch,
                "features do not cover subgraph in example " + ex.id);
  for (const auto& f : ex.feats.node_feats)
    if (f.size() != hyper.feat_dim)
      throw Error(Errc::dimension_mismatch, "node feature width in " + ex.id);
  for (const auto& f : ex.feats.edge_feats)
    if (f.size() != hyper.feat_dim)
      throw Error(Errc::dimension_mismatch, "edge feature width in " + ex.id);
  if (ex.query_vec.size() != hyper.feat_dim)
    throw Error(Errc::dimension_mismatch, "query width in " + ex.id);
}

Tensor const_matrix(size_t rows, size_t cols, std::vector<double> values) {
  return Tensor::matrix(rows, cols, std::move(values));
}

}  // namespace

json AlignerHyper::to_json() const {
  return json{{"feat_dim", feat_dim},
              {"hidden_dim", hidden_dim},
              {"layers", layers},
              {"target_dim", target_dim},
              {"temperature", temperature}};
}

AlignerHyper AlignerHyper::from_json(const json& j) {
  AlignerHyper h;
  h.feat_dim = j.at("feat_dim").get<size_t>();
  h.hidden_dim = j.at("hidden_dim").get<size_t>();
  h.layers = j.at("layers").get<size_t>();
  h.target_dim = j.at("target_dim").get<size_t>();
  h.temperature = j.at("temperature").get<double>();
  return h;
}

AlignerModel AlignerModel::init(const AlignerHyper& hyper, uint64_t seed) {
  if (hyper.feat_dim == 0 || hyper.hidden_dim == 0 || hyper.layers == 0 ||
      hyper.target_dim == 0)
    throw Error(Errc::config_invalid, "aligner dimensions must be positive");
  if (hyper.temperature <= 0.0)
    throw Error(Errc::non_positive_temperature,
                "temperature " + std::to_string(hyper.temperature));
  AlignerModel model;
  model.hyper = hyper;
  model.seed = seed;
  util::Rng rng(seed);
  for (size_t l = 0; l < hyper.layers; ++l) {
    size_t in = l == 0 ? hyper.feat_dim : hyper.hidden_dim;
    std::string prefix = "gnn." + std::to_string(l) + ".";
    model.params.add(prefix + "w_node",
                     num::xavier_uniform(in, hyper.hidden_dim, rng));
    model.params.add(prefix + "w_edge",
                     num::xavier_uniform(hyper.feat_dim, hyper.hidden_dim, rng));
    model.params.add(prefix + "bias",
                     Tensor::vector(std::vector<double>(hyper.hidden_dim, 0.0), true));
  }
  size_t concat = hyper.hidden_dim + hyper.feat_dim;
  model.params.add("scorer.w1", num::xavier_uniform(concat, hyper.hidden_dim, rng));
  model.params.add("scorer.b1",
                   Tensor::vector(std::vector<double>(hyper.hidden_dim, 0.0), true));
  model.params.add("scorer.w2", num::xavier_uniform(hyper.hidden_dim, 1, rng));
  model.params.add("scorer.b2", Tensor::vector({0.0}, true));
  size_t padded = std::max(hyper.hidden_dim, hyper.feat_dim);
  model.params.add("proj.w", num::xavier_uniform(padded, hyper.target_dim, rng));
  model.params.add("proj.b",
                   Tensor::vector(std::vector<double>(hyper.target_dim, 0.0), true));
  return model;
}

num::Tensor AlignerModel::encode(const AlignTrainExample& ex) const {
  check_example(ex, hyper);
  const auto ids = ex.subgraph.node_ids();
  const size_t n = ids.size();
  const size_t m = ex.subgraph.edge_count();
  std::map<int64_t, size_t> index;
  for (size_t i = 0; i < n; ++i) index[ids[i]] = i;

  // mean message-count per node: self plus one per incident edge endpoint
  std::vector<double> a(n * n, 0.0);  // neighbor multiplicities
  std::vector<double> b(n * m, 0.0);  // edge incidence
  std::vector<double> count(n, 1.0);
  const auto& edges = ex.subgraph.edges();
  for (size_t e = 0; e < m; ++e) {
    size_t u = index.at(edges[e].src), v = index.at(edges[e].dst);
    a[v * n + u] += 1.0;
    a[u * n + v] += 1.0;
    b[u * m + e] += 1.0;
    b[v * m + e] += 1.0;
    count[u] += 1.0;
    count[v] += 1.0;
  }
  std::vector<double> m1(n * n, 0.0);
  for (size_t v = 0; v < n; ++v) {
    for (size_t u = 0; u < n; ++u) m1[v * n + u] = a[v * n + u] / count[v];
    m1[v * n + v] += 1.0 / count[v];  // self-message
  }
  for (size_t v = 0; v < n; ++v)
    for (size_t e = 0; e < m; ++e) b[v * m + e] /= count[v];

  Tensor m1_t = const_matrix(n, n, std::move(m1));
  Tensor m2_t;
  Tensor edge_t;
  if (m > 0) {
    m2_t = const_matrix(n, m, std::move(b));
    std::vector<double> ef;
    ef.reserve(m * hyper.feat_dim);
    for (const auto& f : ex.feats.edge_feats) ef.insert(ef.end(), f.begin(), f.end());
    edge_t = const_matrix(m, hyper.feat_dim, std::move(ef));
  }
  std::vector<double> nf;
  nf.reserve(n * hyper.feat_dim);
  for (const auto& f : ex.feats.node_feats) nf.insert(nf.end(), f.begin(), f.end());
  Tensor h = const_matrix(n, hyper.feat_dim, std::move(nf));

  for (size_t l = 0; l < hyper.layers; ++l) {
    std::string prefix = "gnn." + std::to_string(l) + ".";
    Tensor msg = num::matmul(m1_t, num::matmul(h, params.get(prefix + "w_node")));
    if (m > 0) {
      Tensor emsg =
          num::matmul(m2_t, num::matmul(edge_t, params.get(prefix + "w_edge")));
      msg = num::add(msg, emsg);
    }
    h = num::relu(num::add(msg, params.get(prefix + "bias")));
  }
  return h;
}

num::Tensor AlignerModel::score_logits(const num::Tensor& node_emb,
                                       const std::vector<double>& query_vec) const {
  if (query_vec.size() != hyper.feat_dim)
    throw Error(Errc::dimension_mismatch, "query width for scorer");
  size_t n = node_emb.rows();
  std::vector<double> q;
  q.reserve(n * query_vec.size());
  for (size_t i = 0; i < n; ++i)
    q.insert(q.end(), query_vec.begin(), query_vec.end());
  Tensor qx = const_matrix(n, query_vec.size(), std::move(q));
  Tensor x = num::concat_cols(node_emb, qx);
  Tensor hidden =
      num::relu(num::add(num::matmul(x, params.get("scorer.w1")),
                         params.get("scorer.b1")));
  Tensor logits = num::add(num::matmul(hidden, params.get("scorer.w2")),
                           params.get("scorer.b2"));
  return num::flatten(logits);
}

num::Tensor AlignerModel::project(const num::Tensor& vec) const {
  size_t padded = std::max(hyper.hidden_dim, hyper.feat_dim);
  if (vec.shape().size() != 1 || vec.size() > padded)
    throw Error(Errc::dimension_mismatch,
                "projection input of size " + std::to_string(vec.size()));
  Tensor x = vec.size() == padded ? vec : num::pad_to(vec, padded);
  return num::add(num::vecmat(x, params.get("proj.w")), params.get("proj.b"));
}

std::vector<double> AlignerModel::project(const std::vector<double>& vec) const {
  return project(Tensor::vector(vec)).values();
}

NodeScores AlignerModel::predict_scores(const AlignTrainExample& ex) const {
  Tensor logits = score_logits(encode(ex), ex.query_vec);
  return softmax_values(logits.values());
}

void AlignerModel::save(const std::string& path) const {
  num::save_checkpoint(path, params, hyper.to_json(), seed);
}

AlignerModel AlignerModel::load(const std::string& path) {
  num::Checkpoint ckpt = num::load_checkpoint(path);
  AlignerModel model;
  model.hyper = AlignerHyper::from_json(ckpt.hyper);
  model.params = std::move(ckpt.params);
  model.seed = ckpt.seed;
  return model;
}

NodeScores anchor_distribution(const std::vector<std::vector<double>>& node_feats,
                               const std::vector<double>& anchor_vec) {
  if (node_feats.empty())
    throw Error(Errc::empty_graph, "anchor distribution over zero nodes");
  std::vector<double> cos(node_feats.size());
  for (size_t i = 0; i < node_feats.size(); ++i)
    cos[i] = embed::cosine(node_feats[i], anchor_vec);
  return softmax_values(cos);
}

double node_alignment_loss(const NodeScores& p_anchor,
                           const NodeScores& p_prediction) {
  if (p_anchor.size() != p_prediction.size() || p_anchor.empty())
    throw Error(Errc::length_mismatch,
                std::to_string(p_anchor.size()) + " vs " +
                    std::to_string(p_prediction.size()));
  double total = 0.0;
  for (size_t i = 0; i < p_anchor.size(); ++i) {
    double a = p_anchor[i];
    if (a == 0.0) continue;
    total += a * (std::log(a) - std::log(std::max(p_prediction[i], 1e-12)));
  }
  return total / double(p_anchor.size());
}

namespace {

// shared tensor path for the symmetric contrastive loss
Tensor graph_alignment_loss_t(const std::vector<Tensor>& g_rows,
                              const std::vector<Tensor>& s_rows, double tau) {
  if (tau <= 0.0)
    throw Error(Errc::non_positive_temperature, std::to_string(tau));
  if (g_rows.empty() || g_rows.size() != s_rows.size())
    throw Error(Errc::batch_mismatch,
                std::to_string(g_rows.size()) + " graph vs " +
                    std::to_string(s_rows.size()) + " text rows");
  Tensor g = num::row_l2_normalize(num::stack_rows(g_rows));
  Tensor s = num::row_l2_normalize(num::stack_rows(s_rows));
  Tensor logits = num::scale(num::matmul(g, num::transpose(s)), 1.0 / tau);
  Tensor fwd = num::diag_cross_entropy(logits);
  Tensor bwd = num::diag_cross_entropy(num::transpose(logits));
  return num::scale(num::add(fwd, bwd), 0.5);
}

}  // namespace

double graph_alignment_loss(const std::vector<std::vector<double>>& batch_g,
                            const std::vector<std::vector<double>>& batch_s,
                            double temperature) {
  if (!batch_g.empty()) {
    size_t width = batch_g[0].size();
    for (const auto& v : batch_g)
      if (v.size() != width) throw Error(Errc::batch_mismatch, "ragged graph batch");
    for (const auto& v : batch_s)
      if (v.size() != width) throw Error(Errc::batch_mismatch, "ragged text batch");
  }
  std::vector<Tensor> g_rows, s_rows;
  for (const auto& v : batch_g) g_rows.push_back(Tensor::vector(v));
  for (const auto& v : batch_s) s_rows.push_back(Tensor::vector(v));
  return graph_alignment_loss_t(g_rows, s_rows, temperature).value();
}

num::Tensor batch_loss(const AlignerModel& model,
                       const std::vector<const AlignTrainExample*>& batch,
                       double* out_na, double* out_ga) {
  if (batch.empty()) throw Error(Errc::empty_dataset, "empty batch");
  std::vector<Tensor> na_terms, g_rows, s_rows;
  for (const AlignTrainExample* ex : batch) {
    Tensor h = model.encode(*ex);
    Tensor pred = num::softmax(model.score_logits(h, ex->query_vec));
    NodeScores anchor = anchor_distribution(ex->feats.node_feats, ex->anchor_vec);
    na_terms.push_back(
        num::scale(num::kl_divergence(anchor, pred), 1.0 / double(pred.size())));
    g_rows.push_back(model.project(num::row_mean(h)));
    s_rows.push_back(model.project(Tensor::vector(ex->rationale_vec)));
  }
  Tensor na = num::scale(num::sum(num::stack_rows(na_terms)),
                         1.0 / double(na_terms.size()));
  Tensor ga = graph_alignment_loss_t(g_rows, s_rows, model.hyper.temperature);
  if (out_na) *out_na = na.value();
  if (out_ga) *out_ga = ga.value();
  return num::add(na, ga);
}

TrainResult train_aligner(const std::vector<AlignTrainExample>& dataset,
                          const AlignerHyper& hyper, const TrainConfig& cfg) {
  if (dataset.empty()) throw Error(Errc::empty_dataset, "no training examples");
  if (cfg.steps < 1)
    throw Error(Errc::config_invalid, "training needs at least one step");
  if (cfg.batch < 1) throw Error(Errc::config_invalid, "batch must be >= 1");

  TrainResult result;
  result.model = AlignerModel::init(hyper, cfg.seed);
  AlignerModel& model = result.model;

  num::AdamConfig adam;
  adam.lr = cfg.lr;

  util::Rng shuffle_rng(cfg.seed);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // forces a shuffle on the first batch

  for (size_t step = 1; step <= cfg.steps; ++step) {
    std::vector<const AlignTrainExample*> batch;
    while (batch.size() < cfg.batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        cursor = 0;
        if (!batch.empty()) break;  // keep partial epoch-tail batches
      }
      batch.push_back(&dataset[order[cursor++]]);
    }
    model.params.zero_grads();
    double na = 0.0, ga = 0.0;
    Tensor loss = batch_loss(model, batch, &na, &ga);
    num::backward(loss);
    num::adam_step(model.params, adam);
    result.log.push_back(TrainLogRow{step, na, ga, loss.value()});
  }
  return result;
}

std::string train_log_csv(const std::vector<TrainLogRow>& log) {
  std::string out = "step,loss_na,loss_ga,total\n";
  for (const auto& row : log)
    out += util::csv_row({std::to_string(row.step), util::format_double(row.loss_na),
                          util::format_double(row.loss_ga),
                          util::format_double(row.total)});
  return out;
}

}  // namespace gral::aligner
