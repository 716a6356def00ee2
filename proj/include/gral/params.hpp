#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gral/tensor.hpp"
#include "gral/util.hpp"

namespace gral::num {

// Named trainable tensors plus per-tensor optimizer state. Iteration order is
// insertion order so runs and checkpoints stay deterministic.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  const std::vector<std::string>& names() const { return names_; }
  size_t size() const { return names_.size(); }

  void zero_grads();

  struct Moments {
    std::vector<double> m, v;
  };
  std::map<std::string, Moments>& moments() { return moments_; }
  int64_t& step_count() { return step_count_; }
  int64_t step_count() const { return step_count_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, Tensor> params_;
  std::map<std::string, Moments> moments_;
  int64_t step_count_ = 0;
};

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update over every parameter with a populated
// gradient. Parameters without a gradient are an error.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(size_t fan_in, size_t fan_out, util::Rng& rng);

// Single-file checkpoint: JSON header line, then raw little-endian float64
// parameter payloads in header order. Round trips are bit exact.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& hyper, uint64_t seed);

struct Checkpoint {
  ParamStore params;
  nlohmann::json hyper;
  uint64_t seed = 0;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gral::num
