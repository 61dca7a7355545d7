#pragma once

// Small dense real linear algebra for the identifier: row-major matrices,
// a cyclic Jacobi symmetric eigensolver, and the minimum-norm projection onto
// the affine set {v : G v = Z}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "etac/errors.hpp"

namespace etac {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  /// Row-major literal: Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("Matrix literal: ragged rows");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix diagonal(std::span<const double> d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  static Matrix from_row_major(std::size_t rows, std::size_t cols, std::span<const double> values) {
    if (values.size() != rows * cols) {
      throw DimensionError("Matrix::from_row_major: expected " + std::to_string(rows * cols) +
                           " values, got " + std::to_string(values.size()));
    }
    Matrix m(rows, cols);
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> flat() noexcept { return data_; }
  std::span<const double> flat() const noexcept { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  Vector column(std::size_t c) const {
    Vector v(rows_);
    for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
    return v;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(double s) {
    for (double& x : data_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw DimensionError("Matrix product: inner dimensions differ");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend Vector operator*(const Matrix& a, std::span<const double> x) {
    if (a.cols_ != x.size()) throw DimensionError("Matrix-vector product: dimension mismatch");
    Vector y(a.rows_, 0.0);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols_; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }
  friend Vector operator*(const Matrix& a, const Vector& x) { return a * std::span<const double>(x); }

  bool operator==(const Matrix&) const = default;

 private:
  void check_same(const Matrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionError(std::string("Matrix ") + op + ": shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---- vector helpers --------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline Vector operator+(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("vector +: length mismatch");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw DimensionError("vector -: length mismatch");
  Vector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

inline Vector operator*(double s, Vector a) {
  for (double& x : a) x *= s;
  return a;
}

/// A' x without forming the transpose.
inline Vector transpose_times(const Matrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw DimensionError("transpose_times: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) y[c] += a(r, c) * x[r];
  return y;
}

/// A' B without forming the transpose.
inline Matrix transpose_times(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("transpose_times: row counts differ");
  Matrix c(a.cols(), b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double ari = a(r, i);
      if (ari == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += ari * b(r, j);
    }
  return c;
}

/// Frobenius norm.
inline double norm(const Matrix& m) { return norm(m.flat()); }

inline Matrix symmetrized(const Matrix& m) {
  if (!m.square()) throw DimensionError("symmetrized: matrix is not square");
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// ---- symmetric eigendecomposition ------------------------------------------

/// Spectral factorization S = V diag(eigenvalues) V'. Eigenvalues descend;
/// column j of `eigenvectors` belongs to eigenvalues[j].
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;

  double lambda_max() const { return eigenvalues.empty() ? 0.0 : eigenvalues.front(); }
};

inline void require_symmetric(const Matrix& s, double rel_tol = 1e-12) {
  if (!s.square()) {
    throw DimensionError("expected a square matrix, got " + std::to_string(s.rows()) + "x" +
                         std::to_string(s.cols()));
  }
  const double scale = std::max(1.0, norm_inf(s.flat()));
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j)
      if (std::abs(s(i, j) - s(j, i)) > rel_tol * scale)
        throw SymmetryError("matrix is not symmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
}

/// Cyclic Jacobi rotations. Intended for the tiny (l <= ~10) Gram matrices.
inline SymEig sym_eig(const Matrix& s) {
  require_symmetric(s);
  const std::size_t n = s.rows();
  Matrix a = symmetrized(s);
  Matrix v = Matrix::identity(n);

  auto off_diagonal = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) sum += a(i, j) * a(i, j);
    return std::sqrt(sum);
  };

  const double scale = norm(a);
  for (int sweep = 0; sweep < 100; ++sweep) {
    if (off_diagonal() <= 1e-300 + 1e-17 * scale) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle from the classic t = sgn(tau) / (|tau| + sqrt(1 + tau^2)).
        const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymEig out{Vector(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, j) = v(k, order[j]);
  }
  return out;
}

// ---- constrained projection --------------------------------------------------

inline constexpr double kDefaultRankTol = 1e-9;

struct MinNormResult {
  Vector theta;
  int rank = 0;
  /// ||G theta - P_range(G) Z||; nonzero only when Z has a component outside range(G)
  /// beyond roundoff.
  double residual = 0.0;
};

/// argmin |v - theta_prev|^2 subject to G v = Z, i.e. theta_prev + G^+ (Z - G theta_prev).
/// Eigenvalues at or below rank_tol * max(1, lambda_max) are treated as zero and Z is
/// projected onto the retained eigenspace first.
inline MinNormResult min_norm_update(const Matrix& g, std::span<const double> z,
                                     std::span<const double> theta_prev,
                                     double rank_tol = kDefaultRankTol) {
  if (!g.square()) throw DimensionError("min_norm_update: G must be square");
  const std::size_t l = g.rows();
  if (z.size() != l || theta_prev.size() != l)
    throw DimensionError("min_norm_update: G is " + std::to_string(l) + "x" + std::to_string(l) +
                         " but |Z| = " + std::to_string(z.size()) +
                         ", |theta_prev| = " + std::to_string(theta_prev.size()));
  if (!(rank_tol >= 0.0)) throw ParameterError("min_norm_update: rank_tol must be >= 0");

  const SymEig eig = sym_eig(g);
  const double cutoff = rank_tol * std::max(1.0, eig.lambda_max());
  if (l > 0 && eig.eigenvalues.back() < -cutoff)
    throw NotPsdError("min_norm_update: G has eigenvalue " + std::to_string(eig.eigenvalues.back()) +
                      " below -" + std::to_string(cutoff));

  const Vector innovation = Vector(z.begin(), z.end()) - g * theta_prev;
  MinNormResult out{Vector(theta_prev.begin(), theta_prev.end()), 0, 0.0};
  Vector z_ranged(l, 0.0);
  for (std::size_t j = 0; j < l; ++j) {
    const double lambda = eig.eigenvalues[j];
    if (lambda <= cutoff) continue;
    ++out.rank;
    const Vector vj = eig.eigenvectors.column(j);
    const double coeff = dot(vj, innovation) / lambda;
    const double zc = dot(vj, z);
    for (std::size_t k = 0; k < l; ++k) {
      out.theta[k] += coeff * vj[k];
      z_ranged[k] += zc * vj[k];
    }
  }
  out.residual = norm(g * out.theta - z_ranged);
  return out;
}

/// Solves the SPD system A x = b by Cholesky factorization.
inline Vector cholesky_solve(const Matrix& a, std::span<const double> b) {
  require_symmetric(a);
  const std::size_t n = a.rows();
  if (b.size() != n) throw DimensionError("cholesky_solve: right-hand side length mismatch");
  Matrix lower(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= lower(j, k) * lower(j, k);
    if (!(d > 0.0)) throw NotPsdError("cholesky_solve: matrix is not positive definite");
    lower(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
      lower(i, j) = s / lower(j, j);
    }
  }
  Vector y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
    y[i] /= lower(i, i);
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= lower(k, ii) * y[k];
    y[ii] /= lower(ii, ii);
  }
  return y;
}

/// Regularized constraint (eta I + G) v = Z.
inline Vector tikhonov_update(const Matrix& g, std::span<const double> z, double eta) {
  if (!(eta > 0.0)) throw ParameterError("tikhonov_update: eta must be > 0");
  if (!g.square() || g.rows() != z.size()) throw DimensionError("tikhonov_update: dimension mismatch");
  Matrix reg = symmetrized(g);
  for (std::size_t i = 0; i < reg.rows(); ++i) reg(i, i) += eta;
  return cholesky_solve(reg, z);
}

}  // namespace etac
