#pragma once

// Dense row-major matrices, activations, Adam, finite differences and
// seeded initialization. Everything the LSTM and GCN models need and nothing
// more: no broadcasting rules beyond row-bias addition, no views, no BLAS.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gphpa/rng.hpp"

namespace gphpa {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw ShapeError("Matrix: " + std::to_string(values_.size()) +
                       " values do not fill a " + std::to_string(rows_) + "x" +
                       std::to_string(cols_) + " matrix");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
      v.insert(v.end(), row.begin(), row.end());
    }
    return Matrix(r, c, std::move(v));
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const double& operator[](std::size_t i) const { return values_[i]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& storage() const noexcept { return values_; }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

  void fill(double v) { std::fill(values_.begin(), values_.end(), v); }

  bool all_finite() const noexcept {
    for (double v : values_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

namespace detail {

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

inline const Matrix& require_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) throw NonFiniteError(std::string(op) + ": non-finite result");
  return m;
}

// Unchecked row-major kernels for the training hot loops. Each accumulates
// into c; the summation order is fixed, so results are reproducible.

/// c[m x n] += a[m x k] * b[k x n]
inline void gemm_acc(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m, std::size_t k,
                     std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      const double* bp = b + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += s * bp[j];
    }
  }
}

/// c[k x n] += a[m x k]^T * b[m x n]
inline void gemm_tn_acc(const double* __restrict a, const double* __restrict b, double* __restrict c, std::size_t m, std::size_t k,
                        std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ai = a + i * k;
    const double* bi = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ai[p];
      double* cp = c + p * n;
      for (std::size_t j = 0; j < n; ++j) cp[j] += s * bi[j];
    }
  }
}

}  // namespace detail

/// a * b. Throws ShapeError naming both shapes when a.cols != b.rows.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = &out(i, 0);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = &b(k, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  detail::require_finite(out, "matmul");
  return out;
}

/// a^T * b without materializing the transpose.
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply (" + a.shape_string() + ")^T by " +
                     b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = &b(k, 0);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* o = &out(i, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * brow[j];
    }
  }
  detail::require_finite(out, "matmul_tn");
  return out;
}

/// a * b^T without materializing the transpose.
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape_string() + " by (" +
                     b.shape_string() + ")^T");
  }
  // Row-times-row dot products do not vectorize without reassociation, so go
  // through an explicit transpose and the saxpy kernel instead.
  Matrix bt(b.cols(), b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) bt(j, i) = b(i, j);
  Matrix out(a.rows(), b.rows());
  const std::size_t n = b.rows();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* btrow = bt.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * btrow[j];
    }
  }
  detail::require_finite(out, "matmul_nt");
  return out;
}

inline Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  detail::require_finite(out, "add");
  return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "subtract");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  detail::require_finite(out, "subtract");
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  detail::require_finite(out, "hadamard");
  return out;
}

inline Matrix scale(const Matrix& m, double s) {
  Matrix out = m;
  for (double& v : out.values()) v *= s;
  detail::require_finite(out, "scale");
  return out;
}

/// In-place a += b.
inline void accumulate(Matrix& a, const Matrix& b) {
  detail::require_same_shape(a, b, "accumulate");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

/// Adds a 1xC bias row to every row of m.
inline Matrix add_row_bias(const Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw ShapeError("add_row_bias: bias " + bias.shape_string() + " does not broadcast over " +
                     m.shape_string());
  }
  Matrix out = m;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  return out;
}

/// Column sums as a 1xC row (the gradient of a broadcast row bias).
inline Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) out[j] += r[j];
  }
  return out;
}

enum class Activation { kTanh, kSigmoid, kRelu, kLinear };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kRelu: return "relu";
    case Activation::kLinear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "relu") return Activation::kRelu;
  if (s == "linear") return Activation::kLinear;
  throw std::invalid_argument("unknown activation '" + s + "'");
}

inline double sigmoid(double x) {
  // Split on sign so exp never overflows.
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double apply(Activation kind, double x) {
  switch (kind) {
    case Activation::kTanh: return std::tanh(x);
    case Activation::kSigmoid: return sigmoid(x);
    case Activation::kRelu: return x > 0.0 ? x : 0.0;
    case Activation::kLinear: return x;
  }
  return x;
}

/// Derivative expressed through the pre-activation x and the output y.
inline double derivative(Activation kind, double x, double y) {
  switch (kind) {
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
    case Activation::kRelu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::kLinear: return 1.0;
  }
  return 1.0;
}

inline Matrix activation(const Matrix& m, Activation kind) {
  Matrix out = m;
  for (double& v : out.values()) v = apply(kind, v);
  return out;
}

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Matrix first_moment;
  Matrix second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState fresh(std::size_t rows, std::size_t cols, const AdamConfig& cfg = {}) {
    if (!(cfg.beta1 > 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 > 0.0 && cfg.beta2 < 1.0) ||
        !(cfg.epsilon > 0.0)) {
      throw std::invalid_argument("AdamState: betas must lie in (0,1) and epsilon must be > 0");
    }
    return {Matrix(rows, cols), Matrix(rows, cols), 0, cfg.learning_rate, cfg.beta1, cfg.beta2,
            cfg.epsilon};
  }
  static AdamState fresh_like(const Matrix& p, const AdamConfig& cfg = {}) {
    return fresh(p.rows(), p.cols(), cfg);
  }
};

/// Bias-corrected Adam, in place. The training loops use this form.
inline void adam_update(Matrix& param, const Matrix& grad, AdamState& state) {
  detail::require_same_shape(param, grad, "adam_step");
  detail::require_same_shape(param, state.first_moment, "adam_step");
  detail::require_same_shape(param, state.second_moment, "adam_step");
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / c1;
    const double v_hat = v / c2;
    param[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
  detail::require_finite(param, "adam_step");
}

inline std::pair<Matrix, AdamState> adam_step(const Matrix& param, const Matrix& grad,
                                              AdamState state) {
  Matrix p = param;
  adam_update(p, grad, state);
  return {std::move(p), std::move(state)};
}

/// Central differences, one entry at a time.
inline Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f,
                                   const Matrix& param, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_gradient: eps must be > 0");
  Matrix grad(param.rows(), param.cols());
  Matrix probe = param;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      std::ostringstream os;
      os << "finite_diff_gradient: objective is non-finite at entry " << i;
      throw NonFiniteError(os.str());
    }
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// Uniform in +-sqrt(6 / (rows + cols)).
inline Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("glorot_init: empty shape");
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace gphpa
