#pragma once

#include <Eigen/Dense>
#include <vector>

#include "huc/defaults.hpp"

namespace huc {

// Dense symmetric matrix. Only the upper triangle is stored (row-major:
// (0,0),(0,1),...,(0,n-1),(1,1),...), so symmetry is structural and
// smat(svec(M)) == M holds exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);

  // Symmetrizes nothing: requires |m - m^T|_max <= sym_tol * max(1,|m|_max).
  static SymMatrix from_dense(const Eigen::MatrixXd& m, double sym_tol = 1e-9);
  // Averages the two triangles.
  static SymMatrix from_dense_symmetrized(const Eigen::MatrixXd& m);
  static SymMatrix identity(int n);

  int dim() const { return n_; }
  double operator()(int i, int j) const { return data_[offset(i, j)]; }
  void set(int i, int j, double v) { data_[offset(i, j)] = v; }
  void add(int i, int j, double v) { data_[offset(i, j)] += v; }

  Eigen::MatrixXd dense() const;
  const std::vector<double>& packed() const { return data_; }

  double max_abs() const;
  bool is_zero(double tol = 0.0) const;

  SymMatrix& operator+=(const SymMatrix& other);
  SymMatrix& operator*=(double s);

 private:
  int offset(int i, int j) const;

  int n_ = 0;
  std::vector<double> data_;  // n(n+1)/2 upper-triangle entries
};

// Isometric vectorization: off-diagonals scaled by sqrt(2) so that
// <svec(A), svec(B)> equals the Frobenius product A . B.
std::vector<double> svec(const SymMatrix& m);

// Inverse of svec. Throws DimensionError if the length is not triangular.
SymMatrix smat(const std::vector<double>& v);

// Entrywise inner product sum_ij A_ij B_ij. Throws DimensionError on
// mismatched dimensions.
double frobenius(const SymMatrix& a, const SymMatrix& b);

struct FactorResult {
  Eigen::MatrixXd factor;  // n x k with M ~= factor * factor^T
  int rank = 0;            // numerical rank (eigenvalues above eps_rank * lambda_max)
};

// Rank-revealing PSD factorization. Eigenvalues in
// [-eps_psd*lambda_max, eps_rank*lambda_max] are clamped to zero; anything
// below -eps_psd*lambda_max raises NotPsdError.
FactorResult psd_factor(const SymMatrix& m,
                        double eps_rank = defaults::kEpsRank,
                        double eps_psd = defaults::kEpsPsd);

struct EigResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // orthonormal columns, vectors.col(i) pairs values(i)
};

EigResult eig_sym(const SymMatrix& m);

// Orthonormal basis of the (right) null space of a general m x k matrix.
// Singular values below eps_null * sigma_max count as zero. Full-rank input
// yields an empty list.
std::vector<Eigen::VectorXd> null_space(const Eigen::MatrixXd& a,
                                        double eps_null = defaults::kEpsNull);

}  // namespace huc
