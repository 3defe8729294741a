#pragma once

// Dense row-major matrices, activations and a small LU solver.
// Everything here is pure and summation order is fixed (ascending index),
// so identical inputs give bit-identical outputs.

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ynn/error.hpp"

namespace ynn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                       " does not match " + shape_string());
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw ShapeError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Matrix row(std::vector<double> values) {
    const auto n = values.size();
    return Matrix(1, n, std::move(values));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<const double> row_view(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  std::string shape_string() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, std::string_view op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

// a += s * b
inline void axpy(Matrix& a, double s, const Matrix& b) {
  require_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

inline double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// [1, row...] as a 1x(n+1) row.
inline Matrix augment_with_one(const Matrix& row) {
  Matrix out(1, row.size() + 1);
  out[0] = 1.0;
  for (std::size_t i = 0; i < row.size(); ++i) out[i + 1] = row[i];
  return out;
}

// ---------------------------------------------------------------------------
// Activations

enum class ActivationKind { Identity, Tanh, Sigmoid };

inline std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return "identity";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline ActivationKind parse_activation(std::string_view name) {
  if (name == "identity") return ActivationKind::Identity;
  if (name == "tanh") return ActivationKind::Tanh;
  if (name == "sigmoid") return ActivationKind::Sigmoid;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

inline double activate(double x, ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return x;
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
  }
  return x;
}

inline double activate_deriv(double x, ActivationKind k) {
  switch (k) {
    case ActivationKind::Identity: return 1.0;
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

inline Matrix activate(const Matrix& x, ActivationKind k) {
  Matrix out = x;
  for (double& v : out.values()) v = activate(v, k);
  return out;
}

inline Matrix activate_deriv(const Matrix& x, ActivationKind k) {
  Matrix out = x;
  for (double& v : out.values()) v = activate_deriv(v, k);
  return out;
}

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting.

class LuDecomposition {
 public:
  // Throws SingularError when a pivot falls below rel_pivot_tol * max|a|.
  explicit LuDecomposition(Matrix a, double rel_pivot_tol = 1e-13)
      : lu_(std::move(a)), perm_(lu_.rows()) {
    if (lu_.rows() != lu_.cols()) {
      throw ShapeError("LU requires a square matrix, got " + lu_.shape_string());
    }
    const std::size_t n = lu_.rows();
    const double scale_ref = std::max(max_abs(lu_), 1e-300);
    for (std::size_t i = 0; i < n; ++i) perm_[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      double best = std::abs(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        if (std::abs(lu_(i, k)) > best) {
          best = std::abs(lu_(i, k));
          piv = i;
        }
      }
      if (!(best > rel_pivot_tol * scale_ref)) {
        throw SingularError("singular matrix in LU (pivot " + std::to_string(best) +
                            " at column " + std::to_string(k) + ")");
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
      }
      const double inv = 1.0 / lu_(k, k);
      for (std::size_t i = k + 1; i < n; ++i) {
        const double factor = lu_(i, k) * inv;
        lu_(i, k) = factor;
        if (factor == 0.0) continue;
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= factor * lu_(k, j);
      }
    }
  }

  // Solves A x = b for a column given as a flat vector.
  std::vector<double> solve(std::span<const double> b) const {
    const std::size_t n = lu_.rows();
    if (b.size() != n) throw ShapeError("LU solve: rhs length mismatch");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t j = ii + 1; j < n; ++j) s -= lu_(ii, j) * x[j];
      x[ii] = s / lu_(ii, ii);
    }
    return x;
  }

 private:
  Matrix lu_;
  std::vector<std::size_t> perm_;
};

inline std::vector<double> solve_linear(const Matrix& a, std::span<const double> b) {
  return LuDecomposition(a).solve(b);
}

}  // namespace ynn
