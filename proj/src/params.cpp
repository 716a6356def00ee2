#include "gral/params.hpp"

#include <cmath>
#include <cstring>

#include "gral/error.hpp"

namespace gral::num {

using nlohmann::json;

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  auto [it, inserted] = params_.emplace(name, std::move(t));
  if (!inserted)
    throw Error(Errc::config_invalid, "duplicate parameter " + name);
  names_.push_back(name);
  return it->second;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(Errc::missing_grad, "unknown parameter " + name);
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end())
    throw Error(Errc::missing_grad, "unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grads() {
  for (const auto& name : names_) params_.at(name).zero_grad();
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  int64_t t = ++store.step_count();
  double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
  double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (const auto& name : store.names()) {
    Tensor& p = store.get(name);
    const std::vector<double>& g = p.grad();  // throws MissingGrad if absent
    auto& mom = store.moments()[name];
    if (mom.m.size() != g.size()) {
      mom.m.assign(g.size(), 0.0);
      mom.v.assign(g.size(), 0.0);
    }
    std::vector<double>& w = p.mutable_values();
    for (size_t i = 0; i < g.size(); ++i) {
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g[i];
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      if (!std::isfinite(w[i]))
        throw Error(Errc::non_finite_value, "adam update on " + name);
    }
  }
}

Tensor xavier_uniform(size_t fan_in, size_t fan_out, util::Rng& rng) {
  double a = std::sqrt(6.0 / double(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  std::vector<double> values(fan_in * fan_out);
  for (double& v : values) v = dist(rng);
  return Tensor::matrix(fan_in, fan_out, std::move(values), true);
}

void save_checkpoint(const std::string& path, const ParamStore& store,
                     const json& hyper, uint64_t seed) {
  json header;
  header["format"] = "gral-checkpoint-v1";
  header["hyper"] = hyper;
  header["seed"] = seed;
  header["step_count"] = store.step_count();
  json plist = json::array();
  std::string payload;
  for (const auto& name : store.names()) {
    const Tensor& t = store.get(name);
    json entry;
    entry["name"] = name;
    entry["shape"] = t.shape();
    plist.push_back(entry);
    const auto& v = t.values();
    size_t off = payload.size();
    payload.resize(off + v.size() * 8);
    std::memcpy(payload.data() + off, v.data(), v.size() * 8);
  }
  header["params"] = plist;
  util::write_file(path, header.dump() + "\n" + payload);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string blob = util::read_file(path);
  size_t nl = blob.find('\n');
  if (nl == std::string::npos)
    throw Error(Errc::io_error, "checkpoint missing header line: " + path);
  json header;
  try {
    header = json::parse(blob.substr(0, nl));
  } catch (const json::exception& e) {
    throw Error(Errc::io_error, std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format", "") != "gral-checkpoint-v1")
    throw Error(Errc::io_error, "unrecognized checkpoint format in " + path);

  Checkpoint out;
  out.hyper = header.value("hyper", json::object());
  out.seed = header.value("seed", uint64_t(0));
  out.params.step_count() = header.value("step_count", int64_t(0));

  size_t off = nl + 1;
  for (const auto& entry : header.at("params")) {
    std::string name = entry.at("name").get<std::string>();
    std::vector<size_t> shape = entry.at("shape").get<std::vector<size_t>>();
    size_t count = 1;
    for (size_t d : shape) count *= d;
    if (off + count * 8 > blob.size())
      throw Error(Errc::io_error, "checkpoint payload truncated: " + path);
    std::vector<double> values(count);
    std::memcpy(values.data(), blob.data() + off, count * 8);
    off += count * 8;
    out.params.add(name, Tensor::from_values(shape, std::move(values), true));
  }
  if (off != blob.size())
    throw Error(Errc::io_error, "checkpoint has trailing bytes: " + path);
  return out;
}

}  // namespace gral::num
