#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "gral/error.hpp"
#include "gral/params.hpp"
#include "gral/tensor.hpp"
#include "gral/util.hpp"
#include "helpers.hpp"

using namespace gral;
using namespace gral::num;

namespace {

using Builder = std::function<Tensor(std::vector<Tensor>&)>;

// Central finite differences on every element of every leaf vs backward().
void fd_check(const char* op, std::vector<Tensor> leaves, const Builder& build,
              double h = 1e-6, double tol = 2e-6) {
  CAPTURE(op);
  for (auto& l : leaves) l.zero_grad();
  backward(build(leaves));
  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves) analytic.push_back(l.grad());
  for (size_t li = 0; li < leaves.size(); ++li) {
    auto& vals = leaves[li].mutable_values();
    for (size_t i = 0; i < vals.size(); ++i) {
      double orig = vals[i];
      vals[i] = orig + h;
      double fp = build(leaves).value();
      vals[i] = orig - h;
      double fm = build(leaves).value();
      vals[i] = orig;
      double fd = (fp - fm) / (2.0 * h);
      double an = analytic[li][i];
      CAPTURE(li);
      CAPTURE(i);
      CHECK(std::abs(fd - an) <=
            tol * std::max({1.0, std::abs(fd), std::abs(an)}));
    }
  }
}

Tensor leaf(std::vector<double> v) {
  return Tensor::vector(std::move(v), true);
}

Tensor leaf(size_t r, size_t c, std::vector<double> v) {
  return Tensor::matrix(r, c, std::move(v), true);
}

// Weighted sum so the upstream gradient is not uniform.
Tensor weighted(const Tensor& t, double seed_val = 0.3) {
  std::vector<double> w(t.size());
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = seed_val + 0.17 * double(i % 7) - 0.4 * double(i % 3);
  Tensor wt = t.shape().size() == 2
                  ? Tensor::matrix(t.rows(), t.cols(), std::move(w))
                  : Tensor::vector(std::move(w));
  return sum(mul(t, wt));
}

bool fails_with(Errc code, const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

}  // namespace

TEST_CASE("gradients match finite differences per op") {
  fd_check("matmul", {leaf(2, 3, {0.5, -1.2, 0.7, 1.1, 0.3, -0.6}),
                      leaf(3, 2, {0.9, -0.4, 0.2, 1.3, -0.8, 0.6})},
           [](auto& l) { return weighted(matmul(l[0], l[1])); });
  fd_check("transpose", {leaf(2, 3, {1.5, -0.2, 0.7, 0.1, 0.9, -1.1})},
           [](auto& l) { return weighted(transpose(l[0])); });
  fd_check("add", {leaf(2, 2, {0.4, -0.9, 1.2, 0.3}),
                   leaf(2, 2, {-0.5, 0.8, 0.1, -1.4})},
           [](auto& l) { return weighted(add(l[0], l[1])); });
  fd_check("add broadcast", {leaf(2, 3, {0.4, -0.9, 1.2, 0.3, -0.1, 0.8}),
                             leaf({0.25, -0.75, 0.5})},
           [](auto& l) { return weighted(add(l[0], l[1])); });
  fd_check("sub", {leaf({0.9, -0.3, 0.2}), leaf({0.5, 0.5, -1.0})},
           [](auto& l) { return weighted(sub(l[0], l[1])); });
  fd_check("mul", {leaf({0.9, -0.3, 0.2}), leaf({0.5, 0.5, -1.0})},
           [](auto& l) { return weighted(mul(l[0], l[1])); });
  fd_check("scale", {leaf({0.9, -0.3, 0.2})},
           [](auto& l) { return weighted(scale(l[0], -2.5)); });
  fd_check("relu", {leaf({0.9, -0.3, 0.2, -1.7, 1.1})},
           [](auto& l) { return weighted(relu(l[0])); });
  fd_check("concat_cols", {leaf(2, 2, {0.4, -0.9, 1.2, 0.3}),
                           leaf(2, 3, {1.0, 0.2, -0.6, 0.8, -1.2, 0.5})},
           [](auto& l) { return weighted(concat_cols(l[0], l[1])); });
  fd_check("row_mean", {leaf(3, 2, {0.4, -0.9, 1.2, 0.3, -0.1, 0.8})},
           [](auto& l) { return weighted(row_mean(l[0])); });
  fd_check("stack_rows", {leaf({0.4, -0.9}), leaf({1.2, 0.3}), leaf({-0.1, 0.8})},
           [](auto& l) { return weighted(stack_rows({l[0], l[1], l[2]})); });
  fd_check("pad_to", {leaf({0.4, -0.9, 1.2})},
           [](auto& l) { return weighted(pad_to(l[0], 5)); });
  fd_check("flatten", {leaf(2, 2, {0.4, -0.9, 1.2, 0.3})},
           [](auto& l) { return weighted(flatten(l[0])); });
  fd_check("sum", {leaf(2, 2, {0.4, -0.9, 1.2, 0.3})},
           [](auto& l) { return sum(l[0]); });
  fd_check("vecmat", {leaf({0.4, -0.9, 1.2}),
                      leaf(3, 2, {0.9, -0.4, 0.2, 1.3, -0.8, 0.6})},
           [](auto& l) { return weighted(vecmat(l[0], l[1])); });
  fd_check("softmax", {leaf({0.4, -0.9, 1.2, 0.1})},
           [](auto& l) { return weighted(softmax(l[0])); });
  fd_check("row_l2_normalize", {leaf(2, 3, {0.5, -1.2, 0.7, 1.1, 0.3, -0.6})},
           [](auto& l) { return weighted(row_l2_normalize(l[0])); });
  fd_check("diag_cross_entropy", {leaf(3, 3, {1.2, 0.1, -0.4, -0.2, 0.9, 0.3,
                                              0.6, -0.7, 1.5})},
           [](auto& l) { return diag_cross_entropy(l[0]); });
  fd_check("kl_divergence", {leaf({0.3, 0.2, 0.4, 0.1})},
           [](auto& l) {
             return kl_divergence({0.5, 0.25, 0.0, 0.25}, l[0]);
           });
  fd_check("kl after softmax", {leaf({0.4, -0.9, 1.2, 0.1})},
           [](auto& l) {
             return kl_divergence({0.5, 0.25, 0.0, 0.25}, softmax(l[0]));
           });
}

TEST_CASE("softmax hand value") {
  Tensor p = softmax(Tensor::vector({std::log(1.0), std::log(3.0)}));
  CHECK(p.values()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(p.values()[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("kl divergence hand value and zero-anchor entries") {
  double v = kl_divergence({0.5, 0.5}, Tensor::vector({0.25, 0.75})).value();
  CHECK(v == doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0))
                 .epsilon(1e-12));

  // anchor zeros contribute nothing, including to the gradient
  Tensor pred = leaf({0.3, 0.7});
  pred.zero_grad();
  backward(kl_divergence({0.0, 1.0}, pred));
  CHECK(pred.grad()[0] == 0.0);
  CHECK(pred.grad()[1] != 0.0);
}

TEST_CASE("diag cross entropy identity logits") {
  Tensor l = Tensor::matrix(2, 2, {1.0, 0.0, 0.0, 1.0});
  CHECK(diag_cross_entropy(l).value() ==
        doctest::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("shape and loss guards") {
  CHECK(fails_with(Errc::shape_mismatch, [] {
    matmul(Tensor::matrix(2, 3, std::vector<double>(6, 1.0)),
           Tensor::matrix(2, 3, std::vector<double>(6, 1.0)));
  }));
  CHECK(fails_with(Errc::shape_mismatch, [] {
    add(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3}));
  }));
  CHECK(fails_with(Errc::shape_mismatch, [] {
    concat_cols(Tensor::matrix(2, 2, {1, 2, 3, 4}),
                Tensor::matrix(3, 1, {1, 2, 3}));
  }));
  CHECK(fails_with(Errc::shape_mismatch,
                   [] { pad_to(Tensor::vector({1, 2, 3}), 2); }));
  CHECK(fails_with(Errc::shape_mismatch, [] {
    stack_rows({Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})});
  }));
  CHECK(fails_with(Errc::not_scalar_loss,
                   [] { backward(Tensor::vector({1, 2})); }));
  CHECK(fails_with(Errc::non_finite_value,
                   [] { scale(Tensor::vector({1e308}), 1e10); }));
  CHECK(fails_with(Errc::missing_grad,
                   [] { Tensor::vector({1.0}, true).grad(); }));
}

TEST_CASE("backward accumulates through shared subexpressions") {
  Tensor x = leaf({2.0});
  x.zero_grad();
  Tensor y = add(mul(x, x), scale(x, 3.0));  // x^2 + 3x
  backward(sum(y));
  CHECK(x.grad()[0] == doctest::Approx(7.0).epsilon(1e-12));  // 2x + 3
}

TEST_CASE("adam first step hand value") {
  ParamStore store;
  Tensor& w = store.add("w", leaf({1.0}));
  store.zero_grads();
  backward(sum(mul(w, w)));
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step(store, cfg);
  // bias-corrected first step is lr * g / (|g| + eps) with g = 2
  CHECK(w.values()[0] == doctest::Approx(0.9).epsilon(1e-7));

  double prev = std::abs(w.values()[0]);
  for (int i = 0; i < 5; ++i) {
    store.zero_grads();
    backward(sum(mul(w, w)));
    adam_step(store, cfg);
    CHECK(std::abs(w.values()[0]) < prev);
    prev = std::abs(w.values()[0]);
  }
  CHECK(store.step_count() == 6);
}

TEST_CASE("adam requires populated gradients") {
  ParamStore store;
  store.add("w", leaf({1.0}));
  CHECK(fails_with(Errc::missing_grad, [&] { adam_step(store, {}); }));
}

TEST_CASE("xavier range and determinism") {
  util::Rng a(13), b(13);
  Tensor t1 = xavier_uniform(20, 30, a);
  Tensor t2 = xavier_uniform(20, 30, b);
  CHECK(t1.values() == t2.values());
  CHECK(t1.rows() == 20);
  CHECK(t1.cols() == 30);
  double bound = std::sqrt(6.0 / 50.0);
  for (double v : t1.values()) CHECK(std::abs(v) <= bound);
  CHECK(t1.requires_grad());
}

TEST_CASE("checkpoint round trip is bit exact") {
  testutil::TmpDir tmp("gral-ckpt");
  ParamStore store;
  util::Rng rng(99);
  store.add("a.w", xavier_uniform(4, 3, rng));
  store.add("a.b", leaf({1.0 / 3.0, -2.0 / 7.0}));
  nlohmann::json hyper = {{"layers", 2}, {"tau", 0.07}};
  save_checkpoint(tmp.file("model.ckpt"), store, hyper, 42);

  Checkpoint back = load_checkpoint(tmp.file("model.ckpt"));
  CHECK(back.seed == 42);
  CHECK(back.hyper == hyper);
  CHECK(back.params.names() == store.names());
  for (const auto& name : store.names()) {
    CHECK(back.params.get(name).values() == store.get(name).values());
    CHECK(back.params.get(name).shape() == store.get(name).shape());
  }

  // byte-stable on disk for identical stores
  save_checkpoint(tmp.file("model2.ckpt"), back.params, back.hyper, back.seed);
  CHECK(util::read_file(tmp.file("model.ckpt")) ==
        util::read_file(tmp.file("model2.ckpt")));
}
