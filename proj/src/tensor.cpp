#include "gral/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "gral/error.hpp"

namespace gral::num {

namespace {

size_t shape_size(const std::vector<size_t>& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

void check_finite(const std::vector<double>& data, const char* op) {
  for (double x : data)
    if (!std::isfinite(x))
      throw Error(Errc::non_finite_value, std::string(op) + " produced a non-finite value");
}

void require(bool cond, const char* op, const std::string& detail) {
  if (!cond) throw Error(Errc::shape_mismatch, std::string(op) + ": " + detail);
}

std::string shape_str(const std::vector<size_t>& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Tensor make_op(std::vector<size_t> shape, std::vector<double> data,
               std::vector<std::shared_ptr<TensorNode>> parents,
               std::function<void(TensorNode&)> backprop, const char* op) {
  check_finite(data, op);
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  for (const auto& p : parents)
    if (p->requires_grad) node->requires_grad = true;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return Tensor(node);
}

void accumulate(TensorNode& target, size_t i, double v) {
  target.grad[i] += v;
}

}  // namespace

void TensorNode::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

Tensor Tensor::zeros(std::vector<size_t> shape, bool requires_grad) {
  return from_values(shape, std::vector<double>(shape_size(shape), 0.0),
                     requires_grad);
}

Tensor Tensor::from_values(std::vector<size_t> shape,
                           std::vector<double> values, bool requires_grad) {
  require(!shape.empty() && shape.size() <= 2, "from_values",
          "rank must be 1 or 2");
  require(shape_size(shape) == values.size(), "from_values",
          "value count does not match shape " + shape_str(shape));
  check_finite(values, "from_values");
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::scalar(double v) { return from_values({1}, {v}); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  size_t n = values.size();
  return from_values({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(size_t rows, size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return from_values({rows, cols}, std::move(values), requires_grad);
}

double Tensor::value() const {
  if (size() != 1)
    throw Error(Errc::not_scalar_loss,
                "tensor of shape " + shape_str(shape()) + " is not scalar");
  return node_->data[0];
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty())
    throw Error(Errc::missing_grad, "gradient has not been computed");
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

std::vector<double>& Tensor::mutable_values() { return node_->data; }

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "matmul",
          "both operands must be matrices");
  require(a.cols() == b.rows(), "matmul",
          shape_str(a.shape()) + " x " + shape_str(b.shape()));
  size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (size_t i = 0; i < n; ++i)
    for (size_t kk = 0; kk < k; ++kk) {
      double aik = av[i * k + kk];
      if (aik == 0.0) continue;
      const double* brow = bv.data() + kk * m;
      double* orow = out.data() + i * m;
      for (size_t j = 0; j < m; ++j) orow[j] += aik * brow[j];
    }
  return make_op(
      {n, m}, std::move(out), {a.node(), b.node()},
      [n, k, m](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (size_t i = 0; i < n; ++i)
            for (size_t kk = 0; kk < k; ++kk) {
              double s = 0.0;
              for (size_t j = 0; j < m; ++j)
                s += self.grad[i * m + j] * pb.data[kk * m + j];
              accumulate(pa, i * k + kk, s);
            }
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (size_t kk = 0; kk < k; ++kk)
            for (size_t j = 0; j < m; ++j) {
              double s = 0.0;
              for (size_t i = 0; i < n; ++i)
                s += pa.data[i * k + kk] * self.grad[i * m + j];
              accumulate(pb, kk * m + j, s);
            }
        }
      },
      "matmul");
}

Tensor transpose(const Tensor& a) {
  require(a.shape().size() == 2, "transpose", "operand must be a matrix");
  size_t n = a.rows(), m = a.cols();
  std::vector<double> out(n * m);
  const auto& av = a.values();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out[j * n + i] = av[i * m + j];
  return make_op(
      {m, n}, std::move(out), {a.node()},
      [n, m](TensorNode& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < m; ++j)
            accumulate(pa, i * m + j, self.grad[j * n + i]);
      },
      "transpose");
}

Tensor add(const Tensor& a, const Tensor& b) {
  bool broadcast = a.shape().size() == 2 && b.shape().size() == 1 &&
                   b.size() == a.cols();
  require(broadcast || a.shape() == b.shape(), "add",
          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  const auto& av = a.values();
  const auto& bv = b.values();
  size_t m = a.cols();
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = av[i] + (broadcast ? bv[i % m] : bv[i]);
  return make_op(
      a.shape(), std::move(out), {a.node(), b.node()},
      [broadcast, m](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pa, i, self.grad[i]);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pb, broadcast ? i % m : i, self.grad[i]);
        }
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "sub",
          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return make_op(
      a.shape(), std::move(out), {a.node(), b.node()},
      [](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pa, i, self.grad[i]);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pb, i, -self.grad[i]);
        }
      },
      "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(), "mul",
          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_op(
      a.shape(), std::move(out), {a.node(), b.node()},
      [](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pa, i, self.grad[i] * pb.data[i]);
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (size_t i = 0; i < self.grad.size(); ++i)
            accumulate(pb, i, self.grad[i] * pa.data[i]);
        }
      },
      "mul");
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * s;
  return make_op(
      a.shape(), std::move(out), {a.node()},
      [s](TensorNode& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          accumulate(pa, i, self.grad[i] * s);
      },
      "scale");
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.size());
  auto mask = std::make_shared<std::vector<char>>(a.size());
  for (size_t i = 0; i < out.size(); ++i) {
    bool pos = a.values()[i] > 0.0;
    (*mask)[i] = pos;
    out[i] = pos ? a.values()[i] : 0.0;
  }
  return make_op(
      a.shape(), std::move(out), {a.node()},
      [mask](TensorNode& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          if ((*mask)[i]) accumulate(pa, i, self.grad[i]);
      },
      "relu");
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.shape().size() == 2 && b.shape().size() == 2, "concat_cols",
          "both operands must be matrices");
  require(a.rows() == b.rows(), "concat_cols",
          shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  size_t n = a.rows(), p = a.cols(), q = b.cols();
  std::vector<double> out(n * (p + q));
  for (size_t i = 0; i < n; ++i) {
    std::copy_n(a.values().data() + i * p, p, out.data() + i * (p + q));
    std::copy_n(b.values().data() + i * q, q, out.data() + i * (p + q) + p);
  }
  return make_op(
      {n, p + q}, std::move(out), {a.node(), b.node()},
      [n, p, q](TensorNode& self) {
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        for (size_t i = 0; i < n; ++i) {
          if (pa.requires_grad) {
            pa.ensure_grad();
            for (size_t j = 0; j < p; ++j)
              accumulate(pa, i * p + j, self.grad[i * (p + q) + j]);
          }
          if (pb.requires_grad) {
            pb.ensure_grad();
            for (size_t j = 0; j < q; ++j)
              accumulate(pb, i * q + j, self.grad[i * (p + q) + p + j]);
          }
        }
      },
      "concat_cols");
}

Tensor row_mean(const Tensor& a) {
  require(a.shape().size() == 2, "row_mean", "operand must be a matrix");
  size_t n = a.rows(), m = a.cols();
  require(n > 0, "row_mean", "matrix has no rows");
  std::vector<double> out(m, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < m; ++j) out[j] += a.values()[i * m + j];
  for (double& x : out) x /= double(n);
  return make_op(
      {m}, std::move(out), {a.node()},
      [n, m](TensorNode& self) {
        auto& pa = *self.parents[0];
        pa.ensure_grad();
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < m; ++j)
            accumulate(pa, i * m + j, self.grad[j] / double(n));
      },
      "row_mean");
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  require(!rows.empty(), "stack_rows", "no rows");
  size_t m = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * m);
  std::vector<std::shared_ptr<TensorNode>> parents;
  for (const Tensor& r : rows) {
    require(r.shape().size() == 1 && r.size() == m, "stack_rows",
            "rows must be equal-size vectors");
    out.insert(out.end(), r.values().begin(), r.values().end());
    parents.push_back(r.node());
  }
  size_t n = rows.size();
  return make_op(
      {n, m}, std::move(out), std::move(parents),
      [n, m](TensorNode& self) {
        for (size_t i = 0; i < n; ++i) {
          auto& p = *self.parents[i];
          if (!p.requires_grad) continue;
          p.ensure_grad();
          for (size_t j = 0; j < m; ++j)
            accumulate(p, j, self.grad[i * m + j]);
        }
      },
      "stack_rows");
}

Tensor pad_to(const Tensor& v, size_t width) {
  require(v.shape().size() == 1, "pad_to", "operand must be a vector");
  require(width >= v.size(), "pad_to", "target width smaller than input");
  std::vector<double> out(width, 0.0);
  std::copy(v.values().begin(), v.values().end(), out.begin());
  size_t n = v.size();
  return make_op(
      {width}, std::move(out), {v.node()},
      [n](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < n; ++i) accumulate(p, i, self.grad[i]);
      },
      "pad_to");
}

Tensor flatten(const Tensor& a) {
  std::vector<double> out = a.values();
  size_t n = out.size();
  return make_op(
      {n}, std::move(out), {a.node()},
      [](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i)
          accumulate(p, i, self.grad[i]);
      },
      "flatten");
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_op(
      {1}, {s}, {a.node()},
      [](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < p.data.size(); ++i)
          accumulate(p, i, self.grad[0]);
      },
      "sum");
}

Tensor vecmat(const Tensor& v, const Tensor& m);

Tensor softmax(const Tensor& v) {
  require(v.shape().size() == 1 && v.size() > 0, "softmax",
          "operand must be a non-empty vector");
  double mx = *std::max_element(v.values().begin(), v.values().end());
  std::vector<double> out(v.size());
  double z = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(v.values()[i] - mx);
    z += out[i];
  }
  for (double& x : out) x /= z;
  auto probs = std::make_shared<std::vector<double>>(out);
  return make_op(
      v.shape(), std::move(out), {v.node()},
      [probs](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const auto& s = *probs;
        double dot = 0.0;
        for (size_t j = 0; j < s.size(); ++j) dot += self.grad[j] * s[j];
        for (size_t i = 0; i < s.size(); ++i)
          accumulate(p, i, s[i] * (self.grad[i] - dot));
      },
      "softmax");
}

Tensor row_l2_normalize(const Tensor& a) {
  require(a.shape().size() == 2, "row_l2_normalize", "operand must be a matrix");
  size_t n = a.rows(), m = a.cols();
  std::vector<double> out(n * m);
  auto norms = std::make_shared<std::vector<double>>(n);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t j = 0; j < m; ++j) {
      double x = a.values()[i * m + j];
      s += x * x;
    }
    double norm = std::max(std::sqrt(s), 1e-30);
    (*norms)[i] = norm;
    for (size_t j = 0; j < m; ++j) out[i * m + j] = a.values()[i * m + j] / norm;
  }
  return make_op(
      {n, m}, std::move(out), {a.node()},
      [n, m, norms](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < n; ++i) {
          double norm = (*norms)[i];
          double rdotg = 0.0;
          for (size_t j = 0; j < m; ++j)
            rdotg += p.data[i * m + j] * self.grad[i * m + j];
          for (size_t j = 0; j < m; ++j) {
            double g = self.grad[i * m + j] / norm -
                       p.data[i * m + j] * rdotg / (norm * norm * norm);
            accumulate(p, i * m + j, g);
          }
        }
      },
      "row_l2_normalize");
}

Tensor diag_cross_entropy(const Tensor& logits) {
  require(logits.shape().size() == 2 && logits.rows() == logits.cols(),
          "diag_cross_entropy", "operand must be a square matrix");
  size_t n = logits.rows();
  auto probs = std::make_shared<std::vector<double>>(n * n);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double* row = logits.values().data() + i * n;
    double mx = *std::max_element(row, row + n);
    double z = 0.0;
    for (size_t j = 0; j < n; ++j) {
      (*probs)[i * n + j] = std::exp(row[j] - mx);
      z += (*probs)[i * n + j];
    }
    for (size_t j = 0; j < n; ++j) (*probs)[i * n + j] /= z;
    total += std::log(z) + mx - row[i];
  }
  total /= double(n);
  return make_op(
      {1}, {total}, {logits.node()},
      [n, probs](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        double g = self.grad[0] / double(n);
        for (size_t i = 0; i < n; ++i)
          for (size_t j = 0; j < n; ++j) {
            double delta = (i == j) ? 1.0 : 0.0;
            accumulate(p, i * n + j, g * ((*probs)[i * n + j] - delta));
          }
      },
      "diag_cross_entropy");
}

Tensor kl_divergence(const std::vector<double>& anchor, const Tensor& pred) {
  require(pred.shape().size() == 1 && pred.size() == anchor.size(),
          "kl_divergence", "anchor and prediction sizes differ");
  constexpr double kFloor = 1e-12;
  double total = 0.0;
  for (size_t i = 0; i < anchor.size(); ++i) {
    double a = anchor[i];
    if (!(a >= 0.0) || !std::isfinite(a))
      throw Error(Errc::non_finite_value, "kl_divergence: bad anchor entry");
    if (a == 0.0) continue;
    total += a * (std::log(a) - std::log(std::max(pred.values()[i], kFloor)));
  }
  auto anchor_copy = std::make_shared<std::vector<double>>(anchor);
  return make_op(
      {1}, {total}, {pred.node()},
      [anchor_copy](TensorNode& self) {
        auto& p = *self.parents[0];
        p.ensure_grad();
        const auto& a = *anchor_copy;
        for (size_t i = 0; i < a.size(); ++i) {
          if (a[i] == 0.0 || p.data[i] <= kFloor) continue;
          accumulate(p, i, -self.grad[0] * a[i] / p.data[i]);
        }
      },
      "kl_divergence");
}

Tensor vecmat(const Tensor& v, const Tensor& m) {
  require(v.shape().size() == 1 && m.shape().size() == 2, "vecmat",
          "expects vector x matrix");
  require(v.size() == m.rows(), "vecmat",
          shape_str(v.shape()) + " x " + shape_str(m.shape()));
  size_t k = v.size(), cols = m.cols();
  std::vector<double> out(cols, 0.0);
  for (size_t i = 0; i < k; ++i) {
    double vi = v.values()[i];
    if (vi == 0.0) continue;
    for (size_t j = 0; j < cols; ++j) out[j] += vi * m.values()[i * cols + j];
  }
  return make_op(
      {cols}, std::move(out), {v.node(), m.node()},
      [k, cols](TensorNode& self) {
        auto& pv = *self.parents[0];
        auto& pm = *self.parents[1];
        if (pv.requires_grad) {
          pv.ensure_grad();
          for (size_t i = 0; i < k; ++i) {
            double s = 0.0;
            for (size_t j = 0; j < cols; ++j)
              s += self.grad[j] * pm.data[i * cols + j];
            accumulate(pv, i, s);
          }
        }
        if (pm.requires_grad) {
          pm.ensure_grad();
          for (size_t i = 0; i < k; ++i)
            for (size_t j = 0; j < cols; ++j)
              accumulate(pm, i * cols + j, pv.data[i] * self.grad[j]);
        }
      },
      "vecmat");
}

void backward(const Tensor& loss) {
  if (!loss.defined())
    throw Error(Errc::not_scalar_loss, "backward on an undefined tensor");
  auto root = loss.node();
  if (root->size() != 1)
    throw Error(Errc::not_scalar_loss, "loss must be a scalar");

  // iterative post-order DFS so deep graphs cannot overflow the stack
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backprop && node->requires_grad && !node->grad.empty())
      node->backprop(*node);
  }
  // release the tape; leaf gradients stay until zero_grad
  for (TensorNode* node : order) {
    node->backprop = nullptr;
    node->parents.clear();
  }
}

}  // namespace gral::num
