#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace gral::num {

// Node in the dynamically built computation graph. Rank is 1 or 2; data is
// row major. Scalars are rank-1 tensors of size 1.
struct TensorNode {
  std::vector<size_t> shape;
  std::vector<double> data;
  std::vector<double> grad;  // sized lazily at backward time
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backprop;

  size_t size() const { return data.size(); }
  size_t rows() const { return shape[0]; }
  size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }
  void ensure_grad();
};

// Value handle. Copies share the underlying node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<size_t> shape, bool requires_grad = false);
  static Tensor from_values(std::vector<size_t> shape,
                            std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(size_t rows, size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<size_t>& shape() const { return node_->shape; }
  size_t size() const { return node_->size(); }
  size_t rows() const { return node_->rows(); }
  size_t cols() const { return node_->cols(); }
  const std::vector<double>& values() const { return node_->data; }
  double value() const;  // scalar convenience
  bool requires_grad() const { return node_->requires_grad; }
  const std::vector<double>& grad() const;
  void zero_grad();

  // Raw mutation hook for the optimizer; only valid on leaf tensors.
  std::vector<double>& mutable_values();

  std::shared_ptr<TensorNode> node() const { return node_; }

 private:
  std::shared_ptr<TensorNode> node_;
};

// All ops validate shapes (ShapeMismatch) and reject non-finite results
// (NonFiniteValue).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// Same shape, or b a vector broadcast across each row of matrix a.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
// Horizontal concat of equal-row-count matrices.
Tensor concat_cols(const Tensor& a, const Tensor& b);
// Column-wise mean of a matrix: (n x m) -> vector of size m.
Tensor row_mean(const Tensor& a);
// Stack rank-1 tensors of equal size into a matrix, one per row.
Tensor stack_rows(const std::vector<Tensor>& rows);
// Append zeros to a vector until it has `width` entries.
Tensor pad_to(const Tensor& v, size_t width);
Tensor flatten(const Tensor& a);
Tensor sum(const Tensor& a);
// vector (k) times matrix (k x m) -> vector (m).
Tensor vecmat(const Tensor& v, const Tensor& m);
// Max-subtracted softmax over a rank-1 tensor.
Tensor softmax(const Tensor& v);
// Rows scaled to unit L2 norm (norm floored at 1e-30).
Tensor row_l2_normalize(const Tensor& a);
// Mean over rows of cross entropy between softmax(row i) and one-hot(i).
Tensor diag_cross_entropy(const Tensor& logits);
// sum_i anchor[i] * ln(anchor[i] / max(pred[i], 1e-12)); anchor is constant,
// zero anchor entries contribute nothing.
Tensor kl_divergence(const std::vector<double>& anchor, const Tensor& pred);

// Reverse-mode sweep from a scalar loss. Touched grads accumulate; the tape
// (parent links and closures) is released afterwards.
void backward(const Tensor& loss);

}  // namespace gral::num
