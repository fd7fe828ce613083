#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace coplan::ag {

/// Dense row-major matrix of doubles.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t size() const { return v.size(); }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct Node {
  Matrix value;
  Matrix grad;  // allocated lazily
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
  bool requires_grad = false;

  Matrix& g() {
    if (grad.size() != value.size()) grad = Matrix(value.rows, value.cols);
    return grad;
  }
};

/// Handle to a node of the computation graph. Copies share the node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix value, bool requires_grad = false);

  static Tensor param(Matrix value) { return Tensor(std::move(value), true); }

  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  /// Zero matrix when nothing flowed back.
  const Matrix& grad() const { return node_->g(); }
  Matrix& mutable_grad() { return node_->g(); }
  void zero_grad() { node_->grad = Matrix(); }
  int rows() const { return node_->value.rows; }
  int cols() const { return node_->value.cols; }
  double item() const { return node_->value.v.at(0); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const { return node_ != nullptr; }

  /// Reverse-mode sweep from this scalar; gradients accumulate into leaves.
  void backward(double seed = 1.0);

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// While alive, new operations record no graph on this thread.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};
bool grad_enabled();

Tensor matmul(const Tensor& a, const Tensor& b);     // a b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a b^T
Tensor add(const Tensor& a, const Tensor& b);
/// Adds a 1 x cols row to every row.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor scale(const Tensor& a, double s);
Tensor tanh(const Tensor& a);
/// Row softmax over entries where mask(r, c) != 0; fully masked rows are zero.
Tensor masked_softmax(const Tensor& a, const std::vector<std::uint8_t>& mask);
/// Row layer norm followed by gamma * x + beta (both 1 x cols).
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps);
/// Rows of `table` selected by `index`.
Tensor gather_rows(const Tensor& table, const std::vector<int>& index);
Tensor concat_rows(const std::vector<Tensor>& parts);
/// Sum over rows of -log softmax(a_r)[target_r]; 1 x 1.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
Tensor sum(const std::vector<Tensor>& scalars);

/// Plain helpers on values.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix softmax_row(const Matrix& logits, int row);

}  // namespace coplan::ag
