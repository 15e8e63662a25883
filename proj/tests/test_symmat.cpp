#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "huc/errors.hpp"
#include "huc/symmat.hpp"

using namespace huc;

namespace {
const double kSqrt2 = std::sqrt(2.0);

SymMatrix random_sym(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m.set(i, j, g(rng));
  return m;
}
}  // namespace

TEST_CASE("svec scaling and ordering") {
  SymMatrix m(2);
  m.set(0, 0, 1.0);
  m.set(0, 1, 2.0);
  m.set(1, 1, 3.0);
  const auto v = svec(m);
  REQUIRE(v.size() == 3);
  CHECK(v[0] == doctest::Approx(1.0));
  CHECK(v[1] == doctest::Approx(2.0 * kSqrt2));
  CHECK(v[2] == doctest::Approx(3.0));

  const auto id = svec(SymMatrix::identity(2));
  CHECK(id[0] == 1.0);
  CHECK(id[1] == 0.0);
  CHECK(id[2] == 1.0);
}

TEST_CASE("smat inverts svec") {
  SymMatrix id = smat({1.0, 0.0, 1.0});
  CHECK(id(0, 0) == 1.0);
  CHECK(id(0, 1) == 0.0);
  CHECK(id(1, 1) == 1.0);

  SymMatrix z = smat({0.0, 0.0, 0.0});
  CHECK(z.is_zero());

  SymMatrix m = smat({4.0, 2.0 * kSqrt2, 1.0});
  CHECK(m(0, 0) == doctest::Approx(4.0));
  CHECK(m(0, 1) == doctest::Approx(2.0));
  CHECK(m(1, 1) == doctest::Approx(1.0));

  CHECK_THROWS_AS(smat(std::vector<double>{1.0, 2.0, 3.0, 4.0}), DimensionError);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    SymMatrix a = random_sym(rng, 1 + trial % 8);
    SymMatrix b = smat(svec(a));
    REQUIRE(b.dim() == a.dim());
    for (int i = 0; i < a.dim(); ++i)
      for (int j = i; j < a.dim(); ++j) {
        if (i == j)
          CHECK(b(i, j) == a(i, j));  // diagonal is untouched, bit-exact
        else
          CHECK(b(i, j) == doctest::Approx(a(i, j)).epsilon(1e-15));
      }
  }
}

TEST_CASE("frobenius product") {
  SymMatrix d(3);
  d.set(0, 0, 1.0);
  d.set(1, 1, 2.0);
  d.set(2, 2, 3.0);
  CHECK(frobenius(SymMatrix::identity(3), d) == doctest::Approx(6.0));
  CHECK(frobenius(SymMatrix(3), d) == 0.0);
  CHECK_THROWS_AS(frobenius(SymMatrix(2), d), DimensionError);

  // svec isometry
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 7;
    SymMatrix a = random_sym(rng, n), b = random_sym(rng, n);
    const auto va = svec(a), vb = svec(b);
    double dot = 0.0;
    for (size_t k = 0; k < va.size(); ++k) dot += va[k] * vb[k];
    CHECK(dot == doctest::Approx(frobenius(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("psd_factor") {
  SymMatrix m(2);
  m.set(0, 0, 4.0);
  m.set(0, 1, 2.0);
  m.set(1, 1, 1.0);
  const FactorResult f = psd_factor(m);
  CHECK(f.rank == 1);
  REQUIRE(f.factor.cols() == 1);
  CHECK(f.factor(0, 0) == doctest::Approx(2.0));
  CHECK(f.factor(1, 0) == doctest::Approx(1.0));

  const FactorResult fi = psd_factor(SymMatrix::identity(4));
  CHECK(fi.rank == 4);
  CHECK((fi.factor * fi.factor.transpose() - Eigen::MatrixXd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  SymMatrix indef(2);
  indef.set(0, 0, 1.0);
  indef.set(1, 1, -1.0);
  CHECK_THROWS_AS(psd_factor(indef), NotPsdError);

  // rank recovery on random R R^T
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 6;
    const int k = 1 + trial % n;
    Eigen::MatrixXd r(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) r(i, j) = g(rng);
    const Eigen::MatrixXd mm = r * r.transpose();
    const FactorResult fr = psd_factor(SymMatrix::from_dense(mm));
    CHECK(fr.rank == k);
    const double scale = std::max(1.0, mm.cwiseAbs().maxCoeff());
    CHECK((fr.factor * fr.factor.transpose() - mm).cwiseAbs().maxCoeff() <=
          1e-10 * scale);
  }
}

TEST_CASE("eig_sym") {
  SymMatrix d(2);
  d.set(0, 0, 3.0);
  d.set(1, 1, 1.0);
  const EigResult e = eig_sym(d);
  CHECK(e.values(0) == doctest::Approx(3.0));
  CHECK(e.values(1) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(e.vectors(1, 1)) == doctest::Approx(1.0));

  SymMatrix offd(2);
  offd.set(0, 1, 1.0);
  const EigResult e2 = eig_sym(offd);
  CHECK(e2.values(0) == doctest::Approx(1.0));
  CHECK(e2.values(1) == doctest::Approx(-1.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 8;
    SymMatrix m = random_sym(rng, n, 2.0);
    const EigResult er = eig_sym(m);
    Eigen::MatrixXd rec = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      rec += er.values(i) * er.vectors.col(i) * er.vectors.col(i).transpose();
    const double scale = std::max(1.0, m.max_abs());
    CHECK((rec - m.dense()).cwiseAbs().maxCoeff() <= 1e-9 * scale);
    CHECK((er.vectors.transpose() * er.vectors - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("null_space") {
  Eigen::MatrixXd a(2, 3);
  a << 1, 1, 0, 0, 0, 1;
  const auto basis = null_space(a);
  REQUIRE(basis.size() == 1);
  CHECK(std::abs(basis[0](0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(basis[0](0) == doctest::Approx(-basis[0](1)));
  CHECK(basis[0](2) == doctest::Approx(0.0));

  CHECK(null_space(Eigen::MatrixXd::Identity(3, 3)).empty());

  const auto zbasis = null_space(Eigen::MatrixXd::Zero(2, 3));
  REQUIRE(zbasis.size() == 3);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = 0; j < i; ++j)
      CHECK(std::abs(zbasis[i].dot(zbasis[j])) < 1e-14);

  // nullity + rank == columns
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + trial % 5;
    const int cols = 2 + trial % 6;
    const int rk = std::min(rows, 1 + trial % cols);
    Eigen::MatrixXd left(rows, rk), right(rk, cols);
    for (int i = 0; i < rows * rk; ++i) left(i % rows, i / rows) = g(rng);
    for (int i = 0; i < rk * cols; ++i) right(i % rk, i / rk) = g(rng);
    const Eigen::MatrixXd m = left * right;
    const auto nb = null_space(m);
    CHECK(static_cast<int>(nb.size()) == cols - rk);
    for (const auto& v : nb) {
      CHECK(std::abs(v.norm() - 1.0) < 1e-12);
      CHECK((m * v).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, m.norm()));
    }
  }
}
