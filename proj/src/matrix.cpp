#include "cellcov/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "cellcov/error.hpp"
#include "cellcov/kernels.hpp"

namespace cellcov {

// ---------------------------------------------------------------- Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

std::vector<double> Matrix::column(std::size_t j) const {
  std::vector<double> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
  return out;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matrix product: inner dimensions differ");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

// ---------------------------------------------------------------- SymMatrix

SymMatrix::SymMatrix(std::size_t p) : dim_(p), data_(p * p, 0.0) {
  if (p == 0) throw DimensionError("SymMatrix: dimension must be >= 1");
}

SymMatrix SymMatrix::identity(std::size_t p) {
  SymMatrix m(p);
  for (std::size_t i = 0; i < p; ++i) m.data_[i * p + i] = 1.0;
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) throw DomainError("SymMatrix::diagonal: non-finite entry");
    m.data_[i * d.size() + i] = d[i];
  }
  return m;
}

SymMatrix SymMatrix::from_dense(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw DimensionError("SymMatrix::from_dense: matrix is not square");
  const std::size_t p = a.rows();
  SymMatrix m(p);
  double scale = 1.0;
  for (double v : a.data()) {
    if (!std::isfinite(v)) throw DomainError("SymMatrix::from_dense: non-finite entry");
    scale = std::max(scale, std::abs(v));
  }
  for (std::size_t i = 0; i < p; ++i) {
    m.data_[i * p + i] = a(i, i);
    for (std::size_t j = i + 1; j < p; ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol * scale)
        throw DomainError("SymMatrix::from_dense: matrix is not symmetric at (" +
                          std::to_string(i) + ", " + std::to_string(j) + ")");
      m.set(i, j, 0.5 * (a(i, j) + a(j, i)));
    }
  }
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += data_[i * dim_ + i];
  return t;
}

std::vector<double> SymMatrix::diag() const {
  std::vector<double> d(dim_);
  for (std::size_t i = 0; i < dim_; ++i) d[i] = data_[i * dim_ + i];
  return d;
}

SymMatrix SymMatrix::diag_part() const { return diagonal(diag()); }

Matrix SymMatrix::to_dense() const {
  Matrix m(dim_, dim_);
  std::copy(data_.begin(), data_.end(), m.data().begin());
  return m;
}

bool SymMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.dim_ != dim_) throw DimensionError("SymMatrix +: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& other) {
  if (other.dim_ != dim_) throw DimensionError("SymMatrix -: dimension mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double c) {
  for (double& v : data_) v *= c;
  return *this;
}

SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
SymMatrix operator*(double c, SymMatrix a) { return a *= c; }

// ---------------------------------------------------------------- spectra

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kJacobiTol = 1e-12;

double off_diagonal_norm(const std::vector<double>& a, std::size_t p) {
  double s = 0.0;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) s += a[i * p + j] * a[i * p + j];
  return std::sqrt(2.0 * s);
}

}  // namespace

Spectrum eigh(const SymMatrix& a) {
  const std::size_t p = a.dim();
  if (!a.all_finite()) throw DomainError("eigh: matrix has non-finite entries");

  std::vector<double> w(a.data().begin(), a.data().end());
  // Rows of vt are the eigenvectors, so rotations touch contiguous memory.
  std::vector<double> vt(p * p, 0.0);
  for (std::size_t i = 0; i < p; ++i) vt[i * p + i] = 1.0;

  const double norm = frobenius_norm(a);
  const auto isa = kernels::detected_isa();
  bool converged = false;
  for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(w, p) <= kJacobiTol * norm) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t k = 0; k + 1 < p; ++k) {
      for (std::size_t l = k + 1; l < p; ++l) {
        const double akl = w[k * p + l];
        if (akl == 0.0) continue;
        const double akk = w[k * p + k];
        const double all = w[l * p + l];
        const double tau = (all - akk) / (2.0 * akl);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::hypot(1.0, tau));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;

        std::span<double> rk(w.data() + k * p, p);
        std::span<double> rl(w.data() + l * p, p);
        kernels::rotate_pair(rk, rl, c, s, isa);
        rk[k] = akk - t * akl;
        rl[l] = all + t * akl;
        rk[l] = 0.0;
        rl[k] = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
          if (i == k || i == l) continue;
          w[i * p + k] = rk[i];
          w[i * p + l] = rl[i];
        }
        kernels::rotate_pair(std::span<double>(vt.data() + k * p, p),
                             std::span<double>(vt.data() + l * p, p), c, s, isa);
      }
    }
  }
  if (!converged)
    throw ConvergenceError("eigh: Jacobi iteration did not converge for a " + std::to_string(p) +
                           "x" + std::to_string(p) + " matrix after " +
                           std::to_string(kMaxSweeps) + " sweeps");

  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return w[x * p + x] > w[y * p + y]; });

  Spectrum out;
  out.eigenvalues.resize(p);
  out.eigenvectors = Matrix(p, p);
  for (std::size_t c = 0; c < p; ++c) {
    const std::size_t src = order[c];
    out.eigenvalues[c] = w[src * p + src];
    for (std::size_t i = 0; i < p; ++i) out.eigenvectors(i, c) = vt[src * p + i];
  }
  return out;
}

namespace {

constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIter = 10000;

// Returns a negative value if the iteration did not converge.
double power_iteration_norm(const SymMatrix& a) {
  const std::size_t p = a.dim();
  std::mt19937_64 engine(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  std::vector<double> x(p), y(p);
  for (double& v : x) v = normal(engine);
  double xn = std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0));
  for (double& v : x) v /= xn;

  double estimate = 0.0;
  for (int it = 0; it < kPowerMaxIter; ++it) {
    for (std::size_t i = 0; i < p; ++i) {
      const auto r = a.row(i);
      y[i] = std::inner_product(r.begin(), r.end(), x.begin(), 0.0);
    }
    const double yn = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    if (yn == 0.0) return 0.0;
    if (it > 0 && std::abs(yn - estimate) <= kPowerTol * yn) return yn;
    estimate = yn;
    for (std::size_t i = 0; i < p; ++i) x[i] = y[i] / yn;
  }
  return -1.0;
}

}  // namespace

double operator_norm(const SymMatrix& a) {
  if (a.dim() > kPowerIterationMinDim) {
    const double fast = power_iteration_norm(a);
    if (fast >= 0.0) return fast;
  }
  const auto s = eigh(a);
  return std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
}

double frobenius_norm(const SymMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return std::sqrt(s);
}

double effective_rank(const SymMatrix& a) {
  const auto s = eigh(a);
  const double norm = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  if (norm == 0.0) throw DomainError("effective_rank: zero matrix");
  if (s.eigenvalues.back() < -1e-9 * norm)
    throw DomainError("effective_rank: matrix is not positive semi-definite (min eigenvalue " +
                      std::to_string(s.eigenvalues.back()) + ")");
  return a.trace() / norm;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("hadamard: operand shapes differ");
  Matrix c(a.rows(), a.cols());
  auto cd = c.data();
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] = ad[i] * bd[i];
  return c;
}

SymMatrix hadamard(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("hadamard: operand shapes differ");
  SymMatrix c(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) c.set(i, j, a(i, j) * b(i, j));
  return c;
}

Matrix hadamard(const Matrix& a, const SymMatrix& b) { return hadamard(a, b.to_dense()); }

Matrix outer(std::span<const double> x, std::span<const double> y) {
  Matrix m(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) m(i, j) = x[i] * y[j];
  return m;
}

SymMatrix outer(std::span<const double> x) {
  SymMatrix m(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i; j < x.size(); ++j) m.set(i, j, x[i] * x[j]);
  return m;
}

SymMatrix reconstruct(const Spectrum& s, std::span<const double> eigenvalues) {
  const std::size_t p = s.eigenvalues.size();
  if (eigenvalues.size() != p) throw DimensionError("reconstruct: eigenvalue count mismatch");
  SymMatrix m(p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double v = 0.0;
      for (std::size_t k = 0; k < p; ++k)
        v += s.eigenvectors(i, k) * eigenvalues[k] * s.eigenvectors(j, k);
      m.set(i, j, v);
    }
  }
  return m;
}

}  // namespace cellcov
