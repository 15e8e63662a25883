#include "huc/symmat.hpp"

#include <algorithm>
#include <cmath>

#include "huc/errors.hpp"

namespace huc {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

// Deterministic sign convention for eigen/singular vectors: the entry of
// largest magnitude (lowest index on ties) is made positive.
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  int best = 0;
  double mag = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > mag + 1e-300) {
      mag = std::abs(v(i));
      best = i;
    }
  }
  if (v(best) < 0.0) v = -v;
}
}  // namespace

SymMatrix::SymMatrix(int n) : n_(n) {
  if (n < 1) throw DimensionError("SymMatrix: dimension must be >= 1");
  data_.assign(static_cast<size_t>(n) * (n + 1) / 2, 0.0);
}

int SymMatrix::offset(int i, int j) const {
  if (i < 0 || j < 0 || i >= n_ || j >= n_)
    throw DimensionError("SymMatrix: index out of range");
  if (i > j) std::swap(i, j);
  // row-major upper triangle: row i starts after i full rows
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

SymMatrix SymMatrix::from_dense(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionError("from_dense: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw DimensionError("from_dense: matrix is not symmetric");
  return from_dense_symmetrized(m);
}

SymMatrix SymMatrix::from_dense_symmetrized(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionError("from_dense: matrix must be square");
  SymMatrix out(static_cast<int>(m.rows()));
  for (int i = 0; i < out.n_; ++i)
    for (int j = i; j < out.n_; ++j)
      out.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return out;
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix out(n);
  for (int i = 0; i < n; ++i) out.set(i, i, 1.0);
  return out;
}

Eigen::MatrixXd SymMatrix::dense() const {
  Eigen::MatrixXd m(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j);
  return m;
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool SymMatrix::is_zero(double tol) const {
  for (double v : data_)
    if (std::abs(v) > tol) return false;
  return true;
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& other) {
  if (other.n_ != n_) throw DimensionError("SymMatrix +=: dimension mismatch");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

std::vector<double> svec(const SymMatrix& m) {
  const int n = m.dim();
  std::vector<double> v;
  v.reserve(static_cast<size_t>(n) * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      v.push_back(i == j ? m(i, j) : kSqrt2 * m(i, j));
  return v;
}

SymMatrix smat(const std::vector<double>& v) {
  // invert len = n(n+1)/2
  const size_t len = v.size();
  const int n = static_cast<int>(std::floor((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0 + 0.5));
  if (n < 1 || static_cast<size_t>(n) * (n + 1) / 2 != len)
    throw DimensionError("smat: length is not a triangular number");
  SymMatrix m(n);
  size_t k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j, ++k)
      m.set(i, j, i == j ? v[k] : v[k] / kSqrt2);
  return m;
}

double frobenius(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("frobenius: dimension mismatch");
  const int n = a.dim();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += a(i, i) * b(i, i);
    for (int j = i + 1; j < n; ++j) sum += 2.0 * a(i, j) * b(i, j);
  }
  return sum;
}

EigResult eig_sym(const SymMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.dense());
  if (es.info() != Eigen::Success)
    throw NumericalError("eig_sym: eigendecomposition did not converge (n=" +
                         std::to_string(m.dim()) + ")");
  const int n = m.dim();
  EigResult out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order; flip to descending.
  for (int i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    fix_sign(out.vectors.col(i));
  }
  return out;
}

FactorResult psd_factor(const SymMatrix& m, double eps_rank, double eps_psd) {
  const EigResult eig = eig_sym(m);
  const int n = m.dim();
  const double lmax = std::max(0.0, eig.values(0));
  const double lmin = eig.values(n - 1);
  if (lmin < -eps_psd * std::max(lmax, 1e-300))
    throw NotPsdError("psd_factor: matrix indefinite (lambda_min=" +
                      std::to_string(lmin) + ", lambda_max=" + std::to_string(lmax) + ")");
  int k = 0;
  while (k < n && eig.values(k) > eps_rank * lmax && eig.values(k) > 0.0) ++k;
  FactorResult out;
  out.rank = k;
  out.factor.resize(n, k);
  for (int i = 0; i < k; ++i)
    out.factor.col(i) = eig.vectors.col(i) * std::sqrt(eig.values(i));
  return out;
}

std::vector<Eigen::VectorXd> null_space(const Eigen::MatrixXd& a, double eps_null) {
  const int cols = static_cast<int>(a.cols());
  std::vector<Eigen::VectorXd> basis;
  if (cols == 0) return basis;
  if (a.rows() == 0 || a.cwiseAbs().maxCoeff() == 0.0) {
    for (int i = 0; i < cols; ++i) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(cols);
      e(i) = 1.0;
      basis.push_back(e);
    }
    return basis;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const int nsv = static_cast<int>(sv.size());
  for (int i = 0; i < cols; ++i) {
    const double s = i < nsv ? sv(i) : 0.0;
    if (s <= eps_null * smax) {
      Eigen::VectorXd v = svd.matrixV().col(i);
      fix_sign(v);
      basis.push_back(v);
    }
  }
  return basis;
}

}  // namespace huc
