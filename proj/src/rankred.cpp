#include "huc/rankred.hpp"

#include <cmath>

#include "huc/errors.hpp"

namespace huc {

namespace {

double lambda_min(const SymMatrix& m) {
  return eig_sym(m).values(m.dim() - 1);
}

bool psd_enough(const SymMatrix& m) {
  const EigResult e = eig_sym(m);
  const double lmax = std::max(e.values(0), 0.0);
  return e.values(m.dim() - 1) >= -defaults::kEpsPsd * std::max(1.0, lmax);
}

SymMatrix blend(const SymMatrix& a, const SymMatrix& b, double t) {
  SymMatrix out = a;
  out *= t;
  SymMatrix sb = b;
  sb *= (1.0 - t);
  out += sb;
  return out;
}

}  // namespace

SymMatrix find_psd_combination(const std::vector<SymMatrix>& basis, int rotate) {
  if (basis.empty()) return SymMatrix(1);
  const int n = static_cast<int>(basis.size());
  const int dim = basis[0].dim();
  SymMatrix s(dim);
  bool have = false;
  for (int idx = 0; idx < n; ++idx) {
    const SymMatrix& raw = basis[(idx + rotate) % n];
    for (double sign : {1.0, -1.0}) {
      SymMatrix cand = raw;
      cand *= sign;
      if (!have) {
        if (psd_enough(cand) && !cand.is_zero(1e-14)) {
          s = cand;
          have = true;
          break;
        }
        continue;
      }
      // lambda_min of t*s + (1-t)*cand is concave in t and feasible at t=1;
      // bisect for the smallest t that stays PSD
      if (psd_enough(blend(s, cand, 0.0))) {
        s = blend(s, cand, 0.5);
        break;
      }
      double lo = 0.0, hi = 1.0;
      while (hi - lo > defaults::kBisectTol) {
        const double mid = 0.5 * (lo + hi);
        if (psd_enough(blend(s, cand, mid)))
          hi = mid;
        else
          lo = mid;
      }
      if (hi < 1.0 - defaults::kBisectTol) {
        s = blend(s, cand, hi);
        break;
      }
    }
  }
  return have ? s : SymMatrix(dim);
}

double step_scale(const SymMatrix& s) {
  if (s.is_zero(0.0)) throw Error("step_scale: zero matrix");
  const double lmax = eig_sym(s).values(0);
  if (lmax <= 0.0) throw NotPsdError("step_scale: matrix has no positive eigenvalue");
  return -1.0 / lmax;
}

RankReductionReport reduce(const SymMatrix& z, const ConstraintSet& cons,
                           int extra_iters) {
  // precondition: Z is PSD (throws NotPsdError) and carries the targets
  FactorResult fac = psd_factor(z);
  for (const auto& st : cons.items) {
    const double resid = std::abs(frobenius(st.m, z) - st.target);
    if (resid > 1e-6 * std::max(1.0, std::abs(st.target)))
      throw ValidationError("reduce: input violates '" + st.label +
                            "' by " + std::to_string(resid));
  }

  RankReductionReport rep;
  Eigen::MatrixXd r = fac.factor;
  int rank = fac.rank;
  rep.rank_trajectory.push_back(rank);
  const int max_iters = rank + extra_iters - 1;
  int stalls = 0;

  auto record = [&](const Eigen::MatrixXd& rr) {
    const SymMatrix zz = SymMatrix::from_dense_symmetrized(rr * rr.transpose());
    double worst = 0.0;
    for (const auto& st : cons.items)
      worst = std::max(worst, std::abs(frobenius(st.m, zz) - st.target));
    rep.residuals.push_back(worst);
    rep.max_residual = std::max(rep.max_residual, worst);
  };

  for (int it = 0; it < max_iters; ++it) {
    if (rank <= 1) {
      rep.termination = RankReductionReport::Termination::Rank1;
      break;
    }
    rep.iterations = it + 1;

    // compress the stencils onto the factor: rows svec(R^T M_i R)
    const int sdim = rank * (rank + 1) / 2;
    Eigen::MatrixXd a(static_cast<int>(cons.items.size()), sdim);
    for (size_t i = 0; i < cons.items.size(); ++i) {
      const Eigen::MatrixXd compressed =
          r.transpose() * cons.items[i].m.dense() * r;
      const std::vector<double> sv =
          svec(SymMatrix::from_dense_symmetrized(compressed));
      for (int k = 0; k < sdim; ++k) a(static_cast<int>(i), k) = sv[k];
    }
    const std::vector<Eigen::VectorXd> null_basis = null_space(a);
    SymMatrix s(rank);
    if (!null_basis.empty()) {
      std::vector<SymMatrix> candidates;
      candidates.reserve(null_basis.size());
      for (const auto& v : null_basis)
        candidates.push_back(smat(std::vector<double>(v.data(), v.data() + v.size())));
      s = find_psd_combination(candidates, stalls);
    }

    bool stalled = s.is_zero(1e-12);
    if (!stalled) {
      // normalize to lambda_max = 1: the step scale is then -1 and cannot
      // amplify the tiny non-null component left in S by the SVD threshold
      EigResult es = eig_sym(s);
      if (es.values(0) > 0.0) {
        s *= 1.0 / es.values(0);
        es = eig_sym(s);
      }
      const double w = -1.0 / es.values(0);
      Eigen::VectorXd d = Eigen::VectorXd::Ones(rank) + w * es.values;
      const double dmax = d.maxCoeff();
      if (dmax <= defaults::kEpsRank) {
        stalled = true;  // step would annihilate Z (S a multiple of I)
      } else {
        int kept = 0;
        for (int i = 0; i < rank; ++i)
          if (d(i) > defaults::kEpsRank * dmax) ++kept;
        Eigen::MatrixXd rq(r.rows(), kept);
        int col = 0;
        for (int i = 0; i < rank; ++i)
          if (d(i) > defaults::kEpsRank * dmax)
            rq.col(col++) = std::sqrt(d(i)) * (r * es.vectors.col(i));
        r = std::move(rq);
        rank = kept;
        rep.rank_trajectory.push_back(rank);
        record(r);
        continue;
      }
    }
    if (stalled) {
      ++stalls;
      rep.rank_trajectory.push_back(rank);
      record(r);
      const bool no_directions = null_basis.empty();
      if (stalls >= extra_iters || no_directions) {
        rep.termination = RankReductionReport::Termination::StalledSZero;
        rep.final_z = SymMatrix::from_dense_symmetrized(r * r.transpose());
        return rep;
      }
    }
  }
  if (rank <= 1) rep.termination = RankReductionReport::Termination::Rank1;
  rep.final_z = SymMatrix::from_dense_symmetrized(r * r.transpose());
  return rep;
}

}  // namespace huc
