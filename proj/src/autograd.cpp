#include "coplan/autograd.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "coplan/error.hpp"

namespace coplan::ag {

namespace {

thread_local bool g_grad_enabled = true;

void require(bool ok, const char* what) {
  if (!ok) throw Error(std::string("tensor shape mismatch in ") + what, false);
}

// Builds the result node; parents and backward are recorded only when needed.
Tensor make(Matrix value, std::vector<Tensor> inputs, std::function<void(Node&)> backward) {
  Tensor out(std::move(value));
  if (!g_grad_enabled) return out;
  bool any = false;
  for (const auto& t : inputs) any = any || t.requires_grad();
  if (!any) return out;
  Node& n = *out.node();
  n.requires_grad = true;
  for (auto& t : inputs) n.parents.push_back(t.node());
  n.backward = std::move(backward);
  return out;
}

// C += A * B (a: m x k, b: k x n)
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    double* ci = c + static_cast<std::size_t>(i) * n;
    const double* ai = a + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double x = ai[p];
      if (x == 0.0) continue;
      const double* bp = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) ci[j] += x * bp[j];
    }
  }
}

// C += A * B^T (a: m x k, b: n x k)
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* bj = b + static_cast<std::size_t>(j) * k;
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
      ci[j] += s;
    }
  }
}

// C += A^T * B (a: k x m, b: k x n)
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int p = 0; p < k; ++p) {
    const double* ap = a + static_cast<std::size_t>(p) * m;
    const double* bp = b + static_cast<std::size_t>(p) * n;
    for (int i = 0; i < m; ++i) {
      const double x = ap[i];
      if (x == 0.0) continue;
      double* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) ci[j] += x * bp[j];
    }
  }
}

}  // namespace

Tensor::Tensor(Matrix value, bool requires_grad) : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

void Tensor::backward(double seed) {
  require(node_ && node_->value.size() == 1, "backward (needs a scalar)");
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, k] = stack.back();
    if (k < n->parents.size()) {
      Node* p = n->parents[k++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  node_->g().v[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward && (*it)->grad.size() != 0) (*it)->backward(**it);
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }
bool grad_enabled() { return g_grad_enabled; }

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, "matmul");
  Matrix c(a.rows, b.cols);
  gemm_nn(a.v.data(), b.v.data(), c.v.data(), a.rows, a.cols, b.cols);
  return c;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  return make(matmul(a.value(), b.value()), {a, b}, [](Node& n) {
    Node& A = *n.parents[0];
    Node& B = *n.parents[1];
    const Matrix& G = n.grad;
    if (A.requires_grad)
      gemm_nt(G.v.data(), B.value.v.data(), A.g().v.data(), G.rows, G.cols, B.value.rows);
    if (B.requires_grad)
      gemm_tn(A.value.v.data(), G.v.data(), B.g().v.data(), A.value.cols, A.value.rows, G.cols);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt");
  Matrix c(a.rows(), b.rows());
  gemm_nt(a.value().v.data(), b.value().v.data(), c.v.data(), a.rows(), a.cols(), b.rows());
  return make(std::move(c), {a, b}, [](Node& n) {
    Node& A = *n.parents[0];
    Node& B = *n.parents[1];
    const Matrix& G = n.grad;  // m x n
    if (A.requires_grad)
      gemm_nn(G.v.data(), B.value.v.data(), A.g().v.data(), G.rows, G.cols, B.value.cols);
    if (B.requires_grad)
      gemm_tn(G.v.data(), A.value.v.data(), B.g().v.data(), G.cols, G.rows, A.value.cols);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add");
  Matrix c = a.value();
  for (std::size_t i = 0; i < c.size(); ++i) c.v[i] += b.value().v[i];
  return make(std::move(c), {a, b}, [](Node& n) {
    for (auto& p : n.parents)
      if (p->requires_grad) {
        Matrix& g = p->g();
        for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
      }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row");
  Matrix c = a.value();
  for (int r = 0; r < c.rows; ++r)
    for (int k = 0; k < c.cols; ++k) c(r, k) += row.value().v[k];
  return make(std::move(c), {a, row}, [](Node& n) {
    Node& A = *n.parents[0];
    Node& R = *n.parents[1];
    if (A.requires_grad) {
      Matrix& g = A.g();
      for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += n.grad.v[i];
    }
    if (R.requires_grad) {
      Matrix& g = R.g();
      for (int r = 0; r < n.grad.rows; ++r)
        for (int k = 0; k < n.grad.cols; ++k) g.v[k] += n.grad(r, k);
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  Matrix c = a.value();
  for (double& x : c.v) x *= s;
  return make(std::move(c), {a}, [s](Node& n) {
    Matrix& g = n.parents[0]->g();
    for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += s * n.grad.v[i];
  });
}

Tensor tanh(const Tensor& a) {
  Matrix c = a.value();
  for (double& x : c.v) x = std::tanh(x);
  return make(c, {a}, [c](Node& n) {
    Matrix& g = n.parents[0]->g();
    for (std::size_t i = 0; i < g.size(); ++i) g.v[i] += (1.0 - c.v[i] * c.v[i]) * n.grad.v[i];
  });
}

Tensor masked_softmax(const Tensor& a, const std::vector<std::uint8_t>& mask) {
  const Matrix& x = a.value();
  require(mask.size() == x.size(), "masked_softmax");
  Matrix p(x.rows, x.cols);
  for (int r = 0; r < x.rows; ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < x.cols; ++c)
      if (mask[static_cast<std::size_t>(r) * x.cols + c]) mx = std::max(mx, x(r, c));
    if (mx == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (int c = 0; c < x.cols; ++c)
      if (mask[static_cast<std::size_t>(r) * x.cols + c]) z += (p(r, c) = std::exp(x(r, c) - mx));
    for (int c = 0; c < x.cols; ++c) p(r, c) /= z;
  }
  return make(p, {a}, [p](Node& n) {
    Matrix& g = n.parents[0]->g();
    for (int r = 0; r < p.rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < p.cols; ++c) dot += p(r, c) * n.grad(r, c);
      for (int c = 0; c < p.cols; ++c) g(r, c) += p(r, c) * (n.grad(r, c) - dot);
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta, double eps) {
  const Matrix& x = a.value();
  require(gamma.rows() == 1 && gamma.cols() == x.cols && beta.rows() == 1 && beta.cols() == x.cols,
          "layer_norm");
  const int d = x.cols;
  Matrix xhat(x.rows, d);
  std::vector<double> inv(x.rows);
  Matrix y(x.rows, d);
  for (int r = 0; r < x.rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += x(r, c);
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= d;
    inv[r] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < d; ++c) {
      xhat(r, c) = (x(r, c) - mean) * inv[r];
      y(r, c) = gamma.value().v[c] * xhat(r, c) + beta.value().v[c];
    }
  }
  return make(std::move(y), {a, gamma, beta}, [xhat, inv](Node& n) {
    Node& A = *n.parents[0];
    Node& G = *n.parents[1];
    Node& B = *n.parents[2];
    const int d = xhat.cols;
    for (int r = 0; r < xhat.rows; ++r) {
      if (G.requires_grad)
        for (int c = 0; c < d; ++c) G.g().v[c] += n.grad(r, c) * xhat(r, c);
      if (B.requires_grad)
        for (int c = 0; c < d; ++c) B.g().v[c] += n.grad(r, c);
      if (A.requires_grad) {
        double s1 = 0.0, s2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double dxh = n.grad(r, c) * G.value.v[c];
          s1 += dxh;
          s2 += dxh * xhat(r, c);
        }
        Matrix& ga = A.g();
        for (int c = 0; c < d; ++c) {
          const double dxh = n.grad(r, c) * G.value.v[c];
          ga(r, c) += inv[r] * (dxh - s1 / d - xhat(r, c) * s2 / d);
        }
      }
    }
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& index) {
  const Matrix& t = table.value();
  Matrix out(static_cast<int>(index.size()), t.cols);
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] < 0 || index[r] >= t.rows) throw Error("row index out of range", false);
    std::copy_n(t.v.begin() + static_cast<std::ptrdiff_t>(index[r]) * t.cols, t.cols,
                out.v.begin() + static_cast<std::ptrdiff_t>(r) * t.cols);
  }
  return make(std::move(out), {table}, [index](Node& n) {
    Matrix& g = n.parents[0]->g();
    for (std::size_t r = 0; r < index.size(); ++r)
      for (int c = 0; c < g.cols; ++c) g(index[r], c) += n.grad(static_cast<int>(r), c);
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  int rows = 0;
  int cols = -1;
  for (const auto& p : parts) {
    if (p.rows() == 0) continue;
    require(cols < 0 || p.cols() == cols, "concat_rows");
    cols = p.cols();
    rows += p.rows();
  }
  Matrix out(rows, std::max(cols, 0));
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.value().v.begin(), p.value().v.end(), out.v.begin() + static_cast<std::ptrdiff_t>(at));
    at += p.value().size();
  }
  return make(std::move(out), parts, [](Node& n) {
    std::size_t at = 0;
    for (auto& p : n.parents) {
      const std::size_t len = p->value.size();
      if (p->requires_grad) {
        Matrix& g = p->g();
        for (std::size_t i = 0; i < len; ++i) g.v[i] += n.grad.v[at + i];
      }
      at += len;
    }
  });
}

Matrix softmax_row(const Matrix& logits, int row) {
  Matrix p(1, logits.cols);
  double mx = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < logits.cols; ++c) mx = std::max(mx, logits(row, c));
  double z = 0.0;
  for (int c = 0; c < logits.cols; ++c) z += (p.v[c] = std::exp(logits(row, c) - mx));
  for (double& x : p.v) x /= z;
  return p;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets) {
  const Matrix& u = logits.value();
  require(static_cast<int>(targets.size()) == u.rows, "cross_entropy");
  Matrix probs(u.rows, u.cols);
  double loss = 0.0;
  for (int r = 0; r < u.rows; ++r) {
    if (targets[r] < 0 || targets[r] >= u.cols) throw Error("target token out of vocabulary");
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < u.cols; ++c) mx = std::max(mx, u(r, c));
    double z = 0.0;
    for (int c = 0; c < u.cols; ++c) z += (probs(r, c) = std::exp(u(r, c) - mx));
    for (int c = 0; c < u.cols; ++c) probs(r, c) /= z;
    loss += -(u(r, targets[r]) - mx - std::log(z));
  }
  return make(Matrix(1, 1, loss), {logits}, [probs, targets](Node& n) {
    Matrix& g = n.parents[0]->g();
    const double s = n.grad.v[0];
    for (int r = 0; r < probs.rows; ++r)
      for (int c = 0; c < probs.cols; ++c)
        g(r, c) += s * (probs(r, c) - (c == targets[r] ? 1.0 : 0.0));
  });
}

Tensor sum(const std::vector<Tensor>& scalars) {
  double total = 0.0;
  for (const auto& t : scalars) {
    require(t.value().size() == 1, "sum");
    total += t.item();
  }
  return make(Matrix(1, 1, total), scalars, [](Node& n) {
    for (auto& p : n.parents)
      if (p->requires_grad) p->g().v[0] += n.grad.v[0];
  });
}

}  // namespace coplan::ag
