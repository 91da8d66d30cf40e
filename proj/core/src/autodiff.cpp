#include "kgm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace kgm::ad {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow
double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

Tape::Var Tape::push(Matrix value, std::function<void(Tape&)> backward) {
  Node n;
  n.grad = Matrix(value.rows, value.cols);
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<Var>(nodes_.size() - 1);
}

Tape::Var Tape::input(Matrix value) { return push(std::move(value), nullptr); }

Tape::Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols != B.rows) throw Error("matmul: shape mismatch");
  Matrix C(A.rows, B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < B.cols; ++j) C(i, j) += aik * B(k, j);
    }
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, b, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    Matrix& dB = t.grad_ref(b);
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < B.cols; ++j) {
        const double g = dC(i, j);
        if (g == 0.0) continue;
        for (int k = 0; k < A.cols; ++k) {
          dA(i, k) += g * B(k, j);
          dB(k, j) += g * A(i, k);
        }
      }
    }
  };
  return out;
}

Tape::Var Tape::matmul_nt(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols != B.cols) throw Error("matmul_nt: shape mismatch");
  Matrix C(A.rows, B.rows);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < B.rows; ++j) {
      double s = 0;
      for (int k = 0; k < A.cols; ++k) s += A(i, k) * B(j, k);
      C(i, j) = s;
    }
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, b, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    Matrix& dB = t.grad_ref(b);
    for (int i = 0; i < A.rows; ++i) {
      for (int j = 0; j < B.rows; ++j) {
        const double g = dC(i, j);
        if (g == 0.0) continue;
        for (int k = 0; k < A.cols; ++k) {
          dA(i, k) += g * B(j, k);
          dB(j, k) += g * A(i, k);
        }
      }
    }
  };
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) throw Error("add: shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.a[i] += B.a[i];
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, b, out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    Matrix& dB = t.grad_ref(b);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      dA.a[i] += dC.a[i];
      dB.a[i] += dC.a[i];
    }
  };
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (!A.same_shape(B)) throw Error("mul: shape mismatch");
  Matrix C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.a[i] *= B.a[i];
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, b, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& B = t.value(b);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    Matrix& dB = t.grad_ref(b);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      dA.a[i] += dC.a[i] * B.a[i];
      dB.a[i] += dC.a[i] * A.a[i];
    }
  };
  return out;
}

Tape::Var Tape::scale(Var a, double k) {
  Matrix C = value(a);
  for (double& x : C.a) x *= k;
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, k, out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    for (std::size_t i = 0; i < dC.size(); ++i) dA.a[i] += k * dC.a[i];
  };
  return out;
}

Tape::Var Tape::row_broadcast_add(Var m, Var row) {
  const Matrix& M = value(m);
  const Matrix& R = value(row);
  if (R.rows != 1 || R.cols != M.cols) throw Error("row_broadcast_add: shape mismatch");
  Matrix C = M;
  for (int i = 0; i < C.rows; ++i) {
    for (int j = 0; j < C.cols; ++j) C(i, j) += R(0, j);
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [m, row, out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dM = t.grad_ref(m);
    Matrix& dR = t.grad_ref(row);
    for (int i = 0; i < dC.rows; ++i) {
      for (int j = 0; j < dC.cols; ++j) {
        dM(i, j) += dC(i, j);
        dR(0, j) += dC(i, j);
      }
    }
  };
  return out;
}

Tape::Var Tape::row_broadcast_mul(Var m, Var row) {
  const Matrix& M = value(m);
  const Matrix& R = value(row);
  if (R.rows != 1 || R.cols != M.cols) throw Error("row_broadcast_mul: shape mismatch");
  Matrix C = M;
  for (int i = 0; i < C.rows; ++i) {
    for (int j = 0; j < C.cols; ++j) C(i, j) *= R(0, j);
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [m, row, out](Tape& t) {
    const Matrix& M = t.value(m);
    const Matrix& R = t.value(row);
    const Matrix& dC = t.grad(out);
    Matrix& dM = t.grad_ref(m);
    Matrix& dR = t.grad_ref(row);
    for (int i = 0; i < dC.rows; ++i) {
      for (int j = 0; j < dC.cols; ++j) {
        dM(i, j) += dC(i, j) * R(0, j);
        dR(0, j) += dC(i, j) * M(i, j);
      }
    }
  };
  return out;
}

Tape::Var Tape::relu(Var a) {
  Matrix C = value(a);
  for (double& x : C.a) x = x > 0 ? x : 0.0;
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      if (A.a[i] > 0) dA.a[i] += dC.a[i];
    }
  };
  return out;
}

Tape::Var Tape::logistic(Var a) {
  Matrix C = value(a);
  for (double& x : C.a) x = sigmoid(x);
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, out](Tape& t) {
    const Matrix& Y = t.value(out);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      dA.a[i] += dC.a[i] * Y.a[i] * (1.0 - Y.a[i]);
    }
  };
  return out;
}

Tape::Var Tape::log_logistic(Var a) {
  Matrix C = value(a);
  for (double& x : C.a) x = -softplus(-x);
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      dA.a[i] += dC.a[i] * sigmoid(-A.a[i]);
    }
  };
  return out;
}

Tape::Var Tape::log1m_logistic(Var a) {
  Matrix C = value(a);
  for (double& x : C.a) x = -softplus(x);
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, out](Tape& t) {
    const Matrix& A = t.value(a);
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    for (std::size_t i = 0; i < dC.size(); ++i) {
      dA.a[i] -= dC.a[i] * sigmoid(A.a[i]);
    }
  };
  return out;
}

Tape::Var Tape::layer_norm_rows(Var x, Var gain, double eps) {
  const Matrix& X = value(x);
  const Matrix& G = value(gain);
  if (G.rows != 1 || G.cols != X.cols) throw Error("layer_norm_rows: shape mismatch");
  const int d = X.cols;
  Matrix Y(X.rows, d);
  for (int i = 0; i < X.rows; ++i) {
    double mean = 0;
    for (int j = 0; j < d; ++j) mean += X(i, j);
    mean /= d;
    double var = 0;
    for (int j = 0; j < d; ++j) {
      const double c = X(i, j) - mean;
      var += c * c;
    }
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < d; ++j) Y(i, j) = (X(i, j) - mean) * inv * G(0, j);
  }
  Var out = push(std::move(Y), nullptr);
  nodes_[out].backward = [x, gain, eps, out](Tape& t) {
    const Matrix& X = t.value(x);
    const Matrix& G = t.value(gain);
    const Matrix& dY = t.grad(out);
    Matrix& dX = t.grad_ref(x);
    Matrix& dG = t.grad_ref(gain);
    const int d = X.cols;
    std::vector<double> xhat(d);
    std::vector<double> dxhat(d);
    for (int i = 0; i < X.rows; ++i) {
      double mean = 0;
      for (int j = 0; j < d; ++j) mean += X(i, j);
      mean /= d;
      double var = 0;
      for (int j = 0; j < d; ++j) {
        const double c = X(i, j) - mean;
        var += c * c;
      }
      var /= d;
      const double inv = 1.0 / std::sqrt(var + eps);
      double mean_dxhat = 0;
      double mean_dxhat_xhat = 0;
      for (int j = 0; j < d; ++j) {
        xhat[j] = (X(i, j) - mean) * inv;
        dxhat[j] = dY(i, j) * G(0, j);
        dG(0, j) += dY(i, j) * xhat[j];
        mean_dxhat += dxhat[j];
        mean_dxhat_xhat += dxhat[j] * xhat[j];
      }
      mean_dxhat /= d;
      mean_dxhat_xhat /= d;
      for (int j = 0; j < d; ++j) {
        dX(i, j) += inv * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
      }
    }
  };
  return out;
}

Tape::Var Tape::gather_rows(Var m, std::vector<int> idx) {
  const Matrix& M = value(m);
  Matrix C(static_cast<int>(idx.size()), M.cols);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= M.rows) throw Error("gather_rows: index out of range");
    for (int j = 0; j < M.cols; ++j) C(static_cast<int>(i), j) = M(idx[i], j);
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [m, idx = std::move(idx), out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dM = t.grad_ref(m);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int j = 0; j < dC.cols; ++j) {
        dM(idx[i], j) += dC(static_cast<int>(i), j);
      }
    }
  };
  return out;
}

Tape::Var Tape::scatter_add_rows(Var m, std::vector<int> dst, int out_rows) {
  const Matrix& M = value(m);
  if (static_cast<int>(dst.size()) != M.rows) {
    throw Error("scatter_add_rows: one destination per row required");
  }
  Matrix C(out_rows, M.cols);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i] < 0 || dst[i] >= out_rows) throw Error("scatter_add_rows: index out of range");
    for (int j = 0; j < M.cols; ++j) C(dst[i], j) += M(static_cast<int>(i), j);
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [m, dst = std::move(dst), out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dM = t.grad_ref(m);
    for (std::size_t i = 0; i < dst.size(); ++i) {
      for (int j = 0; j < dC.cols; ++j) {
        dM(static_cast<int>(i), j) += dC(dst[i], j);
      }
    }
  };
  return out;
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.rows != B.rows) throw Error("concat_cols: row mismatch");
  Matrix C(A.rows, A.cols + B.cols);
  for (int i = 0; i < A.rows; ++i) {
    for (int j = 0; j < A.cols; ++j) C(i, j) = A(i, j);
    for (int j = 0; j < B.cols; ++j) C(i, A.cols + j) = B(i, j);
  }
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, b, out](Tape& t) {
    const Matrix& dC = t.grad(out);
    Matrix& dA = t.grad_ref(a);
    Matrix& dB = t.grad_ref(b);
    for (int i = 0; i < dA.rows; ++i) {
      for (int j = 0; j < dA.cols; ++j) dA(i, j) += dC(i, j);
      for (int j = 0; j < dB.cols; ++j) dB(i, j) += dC(i, dA.cols + j);
    }
  };
  return out;
}

Tape::Var Tape::sum_all(Var a) {
  const Matrix& A = value(a);
  Matrix C(1, 1);
  for (double x : A.a) C.a[0] += x;
  Var out = push(std::move(C), nullptr);
  nodes_[out].backward = [a, out](Tape& t) {
    const double g = t.grad(out).a[0];
    Matrix& dA = t.grad_ref(a);
    for (double& x : dA.a) x += g;
  };
  return out;
}

void Tape::backward(Var root) {
  if (root < 0 || root >= static_cast<Var>(nodes_.size())) {
    throw Error("backward: bad root");
  }
  const Matrix& r = nodes_[root].value;
  if (r.rows != 1 || r.cols != 1) throw Error("backward: root must be 1x1");
  for (auto& n : nodes_) {
    std::fill(n.grad.a.begin(), n.grad.a.end(), 0.0);
  }
  nodes_[root].grad.a[0] = 1.0;
  for (Var v = root; v >= 0; --v) {
    if (nodes_[v].backward) nodes_[v].backward(*this);
  }
}

}  // namespace kgm::ad
