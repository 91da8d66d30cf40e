#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "kgm/kg.hpp"

namespace kgm::ad {

/// Dense row-major matrix of doubles. All model math runs in 64-bit
/// precision so the oracle tolerances stay tight.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }

  std::size_t size() const { return a.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Reverse-mode tape over Matrix values. Nodes are created in topological
/// order; backward() sweeps them in reverse. The op set is exactly what the
/// two message-passing encoders and the BCE loss need. Node storage is a
/// deque so value()/grad() references stay valid while new ops are added.
class Tape {
 public:
  using Var = int;

  Var input(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v].value; }
  const Matrix& grad(Var v) const { return nodes_[v].grad; }

  Var matmul(Var a, Var b);     // A * B
  Var matmul_nt(Var a, Var b);  // A * B^T
  Var add(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var a, double k);
  Var row_broadcast_add(Var m, Var row);
  Var row_broadcast_mul(Var m, Var row);
  Var relu(Var a);
  Var logistic(Var a);
  Var log_logistic(Var a);    // log sigma(x), stable
  Var log1m_logistic(Var a);  // log(1 - sigma(x)), stable
  Var layer_norm_rows(Var x, Var gain, double eps);
  Var gather_rows(Var m, std::vector<int> idx);
  Var scatter_add_rows(Var m, std::vector<int> dst, int out_rows);
  Var concat_cols(Var a, Var b);
  Var sum_all(Var a);  // 1x1

  /// Seeds d(root)=1 and accumulates gradients into every ancestor.
  /// root must be 1x1.
  void backward(Var root);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&)> backward;
  };

  Var push(Matrix value, std::function<void(Tape&)> backward);
  Matrix& grad_ref(Var v) { return nodes_[v].grad; }

  std::deque<Node> nodes_;
};

}  // namespace kgm::ad
