#include "huc/sdp_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "huc/errors.hpp"

namespace huc {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
    case SolveStatus::NumError: return "NumError";
  }
  return "?";
}

namespace {

struct Entry {
  int i = 0, j = 0;  // i <= j
  double v = 0.0;
};

// One constraint row in scratch form. Senses: eq or <=.
struct Row {
  std::vector<std::pair<int, std::vector<Entry>>> bterms;  // per block, sorted
  std::vector<std::pair<int, double>> lterms;              // per lp var, sorted
  double rhs = 0.0;
  bool eq = true;
  int orig = -1;  // index into [eq..., ineq...] original order
};

std::vector<Entry> to_entries(const SymMatrix& m) {
  std::vector<Entry> out;
  const int n = m.dim();
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      if (m(i, j) != 0.0) out.push_back({i, j, m(i, j)});
  return out;
}

// ---------------------------------------------------------------------------
// Preprocessing: structural zero pins and duplicate rows.
//
// A PSD block coordinate k with a constraint c*X_kk = 0 (or c*X_kk <= 0 with
// c > 0) is identically zero on the feasible set; keeping it would leave the
// problem without a strictly feasible point. Such coordinates are eliminated
// (the whole row/column of the block), which can cascade through other rows.
// Scalar variables pin the same way. Exact duplicates left over after
// elimination (e.g. a uniqueness row collapsing onto a pin) are dropped.
// ---------------------------------------------------------------------------

struct Prepared {
  bool infeasible = false;
  std::string infeasible_row;

  // alive masks in original coordinates
  std::vector<std::vector<char>> coord_alive;  // per block
  std::vector<char> var_alive;
  std::vector<Row> rows;          // surviving rows, original coordinates
  std::vector<int> orig_row_map;  // orig index -> surviving row position or -1
};

Prepared preprocess(const SdpBlockProblem& prob) {
  Prepared prep;
  prep.coord_alive.resize(prob.blocks.size());
  for (size_t j = 0; j < prob.blocks.size(); ++j)
    prep.coord_alive[j].assign(prob.blocks[j].dim, 1);
  prep.var_alive.assign(prob.nonneg_vars.size(), 1);

  std::vector<Row> rows;
  int orig = 0;
  auto add_rows = [&](const std::vector<SdpBlockProblem::Constraint>& cs, bool eq) {
    for (const auto& c : cs) {
      Row r;
      r.eq = eq;
      r.rhs = c.rhs;
      r.orig = orig++;
      for (const auto& t : c.terms) {
        auto e = to_entries(t.coeff);
        if (!e.empty()) r.bterms.push_back({t.block, std::move(e)});
      }
      for (const auto& t : c.lin_terms)
        if (t.coeff != 0.0) r.lterms.push_back({t.var, t.coeff});
      rows.push_back(std::move(r));
    }
  };
  add_rows(prob.eq_constraints, true);
  add_rows(prob.ineq_constraints, false);
  const int total_rows = orig;

  std::vector<char> removed(rows.size(), 0);

  auto effective = [&](Row& r) {
    // drop entries touching dead coordinates / vars, in place
    for (auto& bt : r.bterms) {
      auto& alive = prep.coord_alive[bt.first];
      bt.second.erase(std::remove_if(bt.second.begin(), bt.second.end(),
                                     [&](const Entry& e) {
                                       return !alive[e.i] || !alive[e.j];
                                     }),
                      bt.second.end());
    }
    r.bterms.erase(std::remove_if(r.bterms.begin(), r.bterms.end(),
                                  [](const auto& bt) { return bt.second.empty(); }),
                   r.bterms.end());
    r.lterms.erase(std::remove_if(r.lterms.begin(), r.lterms.end(),
                                  [&](const auto& lt) { return !prep.var_alive[lt.first]; }),
                   r.lterms.end());
  };

  bool changed = true;
  while (changed && !prep.infeasible) {
    changed = false;
    for (size_t ri = 0; ri < rows.size() && !prep.infeasible; ++ri) {
      if (removed[ri]) continue;
      Row& r = rows[ri];
      effective(r);
      const size_t nb = r.bterms.size();
      const size_t nl = r.lterms.size();
      if (nb == 0 && nl == 0) {
        // constant row
        const double tol = 1e-9 * (1.0 + std::abs(r.rhs));
        if (r.eq ? std::abs(r.rhs) > tol : r.rhs < -tol) {
          prep.infeasible = true;
          prep.infeasible_row = "row " + std::to_string(r.orig);
        }
        removed[ri] = 1;
        changed = true;
        continue;
      }
      if (nb == 1 && nl == 0 && r.bterms[0].second.size() == 1) {
        const Entry& e = r.bterms[0].second[0];
        if (e.i == e.j) {
          const double val = r.rhs / e.v;
          if (r.eq) {
            if (val == 0.0) {
              prep.coord_alive[r.bterms[0].first][e.i] = 0;
              removed[ri] = 1;
              changed = true;
            } else if (val < 0.0) {
              prep.infeasible = true;
              prep.infeasible_row = "row " + std::to_string(r.orig);
            }
          } else if (e.v > 0.0) {
            if (r.rhs == 0.0) {
              prep.coord_alive[r.bterms[0].first][e.i] = 0;
              removed[ri] = 1;
              changed = true;
            } else if (r.rhs < 0.0) {
              prep.infeasible = true;
              prep.infeasible_row = "row " + std::to_string(r.orig);
            }
          }
        }
      } else if (nb == 0 && nl == 1) {
        const auto& lt = r.lterms[0];
        const double val = r.rhs / lt.second;
        if (r.eq) {
          if (val == 0.0) {
            prep.var_alive[lt.first] = 0;
            removed[ri] = 1;
            changed = true;
          } else if (val < 0.0) {
            prep.infeasible = true;
            prep.infeasible_row = "row " + std::to_string(r.orig);
          }
        } else if (lt.second > 0.0) {
          if (r.rhs == 0.0) {
            prep.var_alive[lt.first] = 0;
            removed[ri] = 1;
            changed = true;
          } else if (r.rhs < 0.0) {
            prep.infeasible = true;
            prep.infeasible_row = "row " + std::to_string(r.orig);
          }
        }
      }
    }
  }
  if (prep.infeasible) return prep;

  // duplicate rows: identical terms and sense
  std::map<std::string, size_t> seen;
  for (size_t ri = 0; ri < rows.size(); ++ri) {
    if (removed[ri]) continue;
    Row& r = rows[ri];
    std::ostringstream key;
    key << (r.eq ? 'e' : 'l');
    for (const auto& bt : r.bterms) {
      key << '|' << bt.first;
      for (const auto& e : bt.second) key << ',' << e.i << ',' << e.j << ',' << e.v;
    }
    key << ';';
    for (const auto& lt : r.lterms) key << lt.first << ',' << lt.second << ',';
    auto [it, inserted] = seen.insert({key.str(), ri});
    if (!inserted) {
      Row& kept = rows[it->second];
      if (r.eq) {
        if (std::abs(kept.rhs - r.rhs) > 1e-9 * (1.0 + std::abs(r.rhs))) {
          prep.infeasible = true;
          prep.infeasible_row = "row " + std::to_string(r.orig);
          return prep;
        }
      } else {
        kept.rhs = std::min(kept.rhs, r.rhs);
      }
      removed[ri] = 1;
    }
  }

  prep.orig_row_map.assign(total_rows, -1);
  for (size_t ri = 0; ri < rows.size(); ++ri) {
    if (removed[ri]) continue;
    prep.orig_row_map[rows[ri].orig] = static_cast<int>(prep.rows.size());
    prep.rows.push_back(std::move(rows[ri]));
  }
  return prep;
}

// ---------------------------------------------------------------------------
// Internal standard form (equalities only, slacks appended to the LP part)
// ---------------------------------------------------------------------------

struct Internal {
  // blocks (alive coordinates only, empty blocks dropped)
  std::vector<int> bdim;
  std::vector<int> orig_block;                // internal block -> original block
  std::vector<std::vector<int>> coord_map;    // internal block -> alive original coords
  std::vector<std::vector<Entry>> bobj;       // objective entries per internal block

  int nlp = 0;                      // alive original vars + slacks
  std::vector<int> lp_orig;         // lp var -> original var index or -1 (slack)
  std::vector<double> lpobj;

  int m = 0;
  std::vector<double> b;
  std::vector<bool> row_eq;
  std::vector<int> row_orig;        // -> original [eq...,ineq...] index
  std::vector<double> row_scale;    // original row = row_scale * internal row
  // incidence: per internal block, rows touching it with remapped entries
  std::vector<std::vector<std::pair<int, std::vector<Entry>>>> binc;
  std::vector<std::vector<std::pair<int, double>>> rowlin;  // per row
  std::vector<std::vector<std::pair<int, double>>> varinc;  // per lp var

  double obj_scale = 1.0;
};

Internal build_internal(const SdpBlockProblem& prob, const Prepared& prep) {
  Internal in;
  std::vector<int> block_map(prob.blocks.size(), -1);
  for (size_t j = 0; j < prob.blocks.size(); ++j) {
    std::vector<int> alive;
    for (int k = 0; k < prob.blocks[j].dim; ++k)
      if (prep.coord_alive[j][k]) alive.push_back(k);
    if (alive.empty()) continue;
    block_map[j] = static_cast<int>(in.bdim.size());
    in.bdim.push_back(static_cast<int>(alive.size()));
    in.orig_block.push_back(static_cast<int>(j));
    in.coord_map.push_back(std::move(alive));
  }
  std::vector<int> var_map(prob.nonneg_vars.size(), -1);
  for (size_t v = 0; v < prob.nonneg_vars.size(); ++v) {
    if (!prep.var_alive[v]) continue;
    var_map[v] = in.nlp;
    in.lp_orig.push_back(static_cast<int>(v));
    in.lpobj.push_back(prob.objective_lin.empty() ? 0.0 : prob.objective_lin[v]);
    ++in.nlp;
  }

  // objective scale: max abs coefficient over alive entries
  double cmax = 0.0;
  in.bobj.assign(in.bdim.size(), {});
  for (const auto& t : prob.objective) {
    const int bj = block_map[t.block];
    if (bj < 0) continue;
    const auto& coords = in.coord_map[bj];
    std::vector<int> inv(prob.blocks[t.block].dim, -1);
    for (size_t k = 0; k < coords.size(); ++k) inv[coords[k]] = static_cast<int>(k);
    for (const Entry& e : to_entries(t.coeff)) {
      if (inv[e.i] < 0 || inv[e.j] < 0) continue;
      in.bobj[bj].push_back({inv[e.i], inv[e.j], e.v});
      cmax = std::max(cmax, std::abs(e.v));
    }
  }
  for (double c : in.lpobj) cmax = std::max(cmax, std::abs(c));
  in.obj_scale = cmax > 0.0 ? cmax : 1.0;
  for (auto& es : in.bobj)
    for (auto& e : es) e.v /= in.obj_scale;
  for (auto& c : in.lpobj) c /= in.obj_scale;

  in.m = static_cast<int>(prep.rows.size());
  in.b.resize(in.m);
  in.row_eq.resize(in.m);
  in.row_orig.resize(in.m);
  in.row_scale.resize(in.m);
  in.binc.assign(in.bdim.size(), {});
  in.rowlin.assign(in.m, {});

  std::vector<std::vector<int>> inv_cache(in.bdim.size());
  for (size_t bj = 0; bj < in.bdim.size(); ++bj) {
    inv_cache[bj].assign(prob.blocks[in.orig_block[bj]].dim, -1);
    for (size_t k = 0; k < in.coord_map[bj].size(); ++k)
      inv_cache[bj][in.coord_map[bj][k]] = static_cast<int>(k);
  }

  for (int ri = 0; ri < in.m; ++ri) {
    const Row& r = prep.rows[ri];
    double amax = 0.0;
    for (const auto& bt : r.bterms)
      for (const auto& e : bt.second) amax = std::max(amax, std::abs(e.v));
    for (const auto& lt : r.lterms) amax = std::max(amax, std::abs(lt.second));
    const double scale = amax > 0.0 ? amax : 1.0;
    in.row_scale[ri] = scale;
    in.b[ri] = r.rhs / scale;
    in.row_eq[ri] = r.eq;
    in.row_orig[ri] = r.orig;
    for (const auto& bt : r.bterms) {
      const int bj = block_map[bt.first];
      std::vector<Entry> es;
      es.reserve(bt.second.size());
      for (const Entry& e : bt.second)
        es.push_back({inv_cache[bj][e.i], inv_cache[bj][e.j], e.v / scale});
      in.binc[bj].push_back({ri, std::move(es)});
    }
    for (const auto& lt : r.lterms)
      in.rowlin[ri].push_back({var_map[lt.first], lt.second / scale});
  }

  // slack variables for inequalities (coefficient 1 after row scaling)
  for (int ri = 0; ri < in.m; ++ri) {
    if (in.row_eq[ri]) continue;
    in.rowlin[ri].push_back({in.nlp, 1.0});
    in.lp_orig.push_back(-1);
    in.lpobj.push_back(0.0);
    ++in.nlp;
  }
  in.varinc.assign(in.nlp, {});
  for (int ri = 0; ri < in.m; ++ri)
    for (const auto& [v, c] : in.rowlin[ri]) in.varinc[v].push_back({ri, c});
  return in;
}

// ---------------------------------------------------------------------------
// HKM predictor-corrector interior point on the internal form
// ---------------------------------------------------------------------------

using Eigen::MatrixXd;
using Eigen::VectorXd;
using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXld = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

struct State {
  std::vector<MatrixXd> X, S;
  VectorXd w, z;
  VectorXd y;
};

struct Residuals {
  VectorXd rp;                 // b - A(X) - D w
  std::vector<MatrixXd> Rd;    // C - A*(y) - S
  VectorXd rdlp;               // c - D^T y - z
  double rel_p = 0.0, rel_d = 0.0;
};

class Ipm {
 public:
  Ipm(const Internal& in, const SolverOptions& opts) : in_(in), opts_(opts) {}

  SolveStatus run();

  const State& state() const { return st_; }
  int iterations() const { return iters_; }
  double pobj() const { return pobj_; }
  double dobj() const { return dobj_; }
  double rel_gap() const { return rel_gap_; }
  double rel_p() const { return res_.rel_p; }
  double rel_d() const { return res_.rel_d; }
  const std::vector<IterStat>& trace() const { return trace_; }

 private:
  void residuals();
  void objectives();
  MatrixXd dense_row(int bj, const std::vector<Entry>& es) const;
  double dot_row(const std::vector<Entry>& es, const MatrixXd& m) const;
  bool factor_schur();
  VectorXd schur_rhs(const std::vector<MatrixXd>& Rc, const VectorXd& rc_lp);
  void directions(const VectorXd& dy, const std::vector<MatrixXd>& Rc,
                  const VectorXd& rc_lp, std::vector<MatrixXd>& dX,
                  std::vector<MatrixXd>& dS, VectorXd& dw, VectorXd& dz);
  double max_step_blocks(const std::vector<MatrixXd>& M,
                         const std::vector<MatrixXd>& dM) const;
  static double max_step_vec(const VectorXd& v, const VectorXd& dv);

  VectorXd solve_schur(const VectorXd& rhs) const;
  bool polish();
  bool update_scaling();

  const Internal& in_;
  SolverOptions opts_;
  State st_;
  Residuals res_;
  // Nesterov-Todd scaling per block: W = G G^T with W S W = X,
  // G^T S G = G^-1 X G^-T = diag(sigma)
  std::vector<MatrixXd> W_, G_, Gi_;
  std::vector<VectorXd> sigma_;
  Eigen::LLT<MatrixXd> hfact_;
  MatrixXd H_;
  // extended-precision Schur pipeline for small systems: the Schur matrix
  // conditions like 1/mu, and in plain double the search direction cannot
  // deliver residuals much below 1e-8
  bool schur_ld_ = false;
  MatrixXld Hld_;
  Eigen::LLT<MatrixXld> hfact_ld_;
  Eigen::LLT<MatrixXd> gram_fact_;
  MatrixXd gram_;
  int polish_attempts_ = 0;
  double mu_ = 0.0;
  double pobj_ = 0.0, dobj_ = 0.0, rel_gap_ = 1.0;
  int iters_ = 0;
  int ntot_ = 0;
  std::vector<IterStat> trace_;
};

// Least-norm primal feasibility restoration. Near the solution the Schur
// system has condition ~1/mu^2 and the primal residual cannot be driven
// below its noise floor by more interior-point steps; the constraint Gram
// matrix does not degenerate with mu, so projecting the iterate back onto
// the affine constraints recovers the lost digits. The correction is
// restricted to scalar variables well inside the cone (correcting a
// near-zero variable would only move the violation into the clamp).
// Returns true (and commits the corrected iterate) only when everything
// passes the tolerances.
bool Ipm::polish() {
  if (in_.m == 0 || ++polish_attempts_ > 5) return false;
  const double wmax = in_.nlp > 0 ? st_.w.maxCoeff() : 0.0;
  std::vector<char> support(in_.nlp, 1);
  for (int v = 0; v < in_.nlp; ++v)
    if (st_.w(v) <= 1e-6 * (1.0 + wmax)) support[v] = 0;

  std::vector<std::vector<std::pair<int, double>>> varinc(in_.nlp);
  for (int ri = 0; ri < in_.m; ++ri)
    for (const auto& [v, c] : in_.rowlin[ri]) varinc[v].push_back({ri, c});

  VectorXd delta;
  for (int pass = 0; pass < 4; ++pass) {
    gram_ = MatrixXd::Zero(in_.m, in_.m);
    for (size_t bj = 0; bj < in_.bdim.size(); ++bj) {
      const auto& inc = in_.binc[bj];
      const int n = in_.bdim[bj];
      MatrixXd T(n, n);
      for (size_t a = 0; a < inc.size(); ++a) {
        T = dense_row(static_cast<int>(bj), inc[a].second);
        for (size_t c = 0; c <= a; ++c) {
          const double g = dot_row(inc[c].second, T);
          gram_(inc[a].first, inc[c].first) += g;
          if (inc[a].first != inc[c].first) gram_(inc[c].first, inc[a].first) += g;
        }
      }
    }
    for (int v = 0; v < in_.nlp; ++v) {
      if (!support[v]) continue;
      for (size_t a = 0; a < varinc[v].size(); ++a)
        for (size_t c = 0; c <= a; ++c) {
          const double g = varinc[v][a].second * varinc[v][c].second;
          gram_(varinc[v][a].first, varinc[v][c].first) += g;
          if (varinc[v][a].first != varinc[v][c].first)
            gram_(varinc[v][c].first, varinc[v][a].first) += g;
        }
    }
    gram_.diagonal().array() += 1e-12 * std::max(1.0, gram_.diagonal().maxCoeff());
    gram_fact_.compute(gram_);
    if (gram_fact_.info() != Eigen::Success) return false;
    delta = gram_fact_.solve(res_.rp);
    delta += gram_fact_.solve(res_.rp - gram_ * delta);

    bool clipped = false;
    for (int v = 0; v < in_.nlp; ++v) {
      if (!support[v]) continue;
      double dw = 0.0;
      for (const auto& [ri, c] : varinc[v]) dw += delta(ri) * c;
      if (st_.w(v) + dw < 0.0) {
        support[v] = 0;
        clipped = true;
      }
    }
    if (!clipped) break;
    if (pass == 3) return false;
  }

  State cand = st_;
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj)
    for (const auto& [ri, es] : in_.binc[bj])
      for (const Entry& e : es) {
        cand.X[bj](e.i, e.j) += delta(ri) * e.v;
        if (e.i != e.j) cand.X[bj](e.j, e.i) += delta(ri) * e.v;
      }
  for (int v = 0; v < in_.nlp; ++v) {
    if (!support[v]) continue;
    for (const auto& [ri, c] : varinc[v]) cand.w(v) += delta(ri) * c;
    cand.w(v) = std::max(cand.w(v), 0.0);
  }
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cand.X[bj], Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = std::max(1.0, es.eigenvalues().maxCoeff());
    if (lmin < -defaults::kEpsPsd * lmax) return false;
  }

  const State saved = st_;
  const Residuals saved_res = res_;
  const double saved_p = pobj_, saved_d = dobj_, saved_gap = rel_gap_;
  st_ = cand;
  residuals();
  objectives();
  if (res_.rel_p <= opts_.tol && res_.rel_d <= opts_.tol && rel_gap_ <= opts_.tol)
    return true;
  st_ = saved;
  res_ = saved_res;
  pobj_ = saved_p;
  dobj_ = saved_d;
  rel_gap_ = saved_gap;
  return false;
}

VectorXd Ipm::solve_schur(const VectorXd& rhs) const {
  if (schur_ld_) {
    const VectorXld r = rhs.cast<long double>();
    VectorXld dy = hfact_ld_.solve(r);
    dy += hfact_ld_.solve(r - Hld_ * dy);
    return dy.cast<double>();
  }
  VectorXd dy = hfact_.solve(rhs);
  // iterative refinement; the Schur system turns ill-conditioned near the
  // solution and the raw solve loses the last digits
  dy += hfact_.solve(rhs - H_ * dy);
  dy += hfact_.solve(rhs - H_ * dy);
  return dy;
}

MatrixXd Ipm::dense_row(int bj, const std::vector<Entry>& es) const {
  MatrixXd a = MatrixXd::Zero(in_.bdim[bj], in_.bdim[bj]);
  for (const Entry& e : es) {
    a(e.i, e.j) += e.v;
    if (e.i != e.j) a(e.j, e.i) += e.v;
  }
  return a;
}

double Ipm::dot_row(const std::vector<Entry>& es, const MatrixXd& m) const {
  double s = 0.0;
  for (const Entry& e : es)
    s += e.i == e.j ? e.v * m(e.i, e.i) : e.v * (m(e.i, e.j) + m(e.j, e.i));
  return s;
}

void Ipm::residuals() {
  res_.rp = VectorXd::Zero(in_.m);
  for (int ri = 0; ri < in_.m; ++ri) res_.rp(ri) = in_.b[ri];
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj)
    for (const auto& [ri, es] : in_.binc[bj]) res_.rp(ri) -= dot_row(es, st_.X[bj]);
  for (int ri = 0; ri < in_.m; ++ri)
    for (const auto& [v, c] : in_.rowlin[ri]) res_.rp(ri) -= c * st_.w(v);

  res_.Rd.assign(in_.bdim.size(), MatrixXd());
  double dmax = 0.0;
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj) {
    MatrixXd rd = MatrixXd::Zero(in_.bdim[bj], in_.bdim[bj]);
    for (const Entry& e : in_.bobj[bj]) {
      rd(e.i, e.j) += e.v;
      if (e.i != e.j) rd(e.j, e.i) += e.v;
    }
    for (const auto& [ri, es] : in_.binc[bj])
      for (const Entry& e : es) {
        rd(e.i, e.j) -= st_.y(ri) * e.v;
        if (e.i != e.j) rd(e.j, e.i) -= st_.y(ri) * e.v;
      }
    rd -= st_.S[bj];
    dmax = std::max(dmax, rd.size() ? rd.cwiseAbs().maxCoeff() : 0.0);
    res_.Rd[bj] = std::move(rd);
  }
  res_.rdlp = VectorXd::Zero(in_.nlp);
  for (int v = 0; v < in_.nlp; ++v) res_.rdlp(v) = in_.lpobj[v];
  for (int ri = 0; ri < in_.m; ++ri)
    for (const auto& [v, c] : in_.rowlin[ri]) res_.rdlp(v) -= c * st_.y(ri);
  res_.rdlp -= st_.z;
  if (in_.nlp > 0) dmax = std::max(dmax, res_.rdlp.cwiseAbs().maxCoeff());

  double bmax = 0.0;
  for (int ri = 0; ri < in_.m; ++ri) bmax = std::max(bmax, std::abs(in_.b[ri]));
  res_.rel_p = in_.m > 0 ? res_.rp.cwiseAbs().maxCoeff() / (1.0 + bmax) : 0.0;
  res_.rel_d = dmax / 2.0;  // objective scaled to max |C| = 1
}

void Ipm::objectives() {
  double p = 0.0;
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj) p += dot_row(in_.bobj[bj], st_.X[bj]);
  for (int v = 0; v < in_.nlp; ++v) p += in_.lpobj[v] * st_.w(v);
  double d = 0.0;
  for (int ri = 0; ri < in_.m; ++ri) d += in_.b[ri] * st_.y(ri);
  pobj_ = p;
  dobj_ = d;
  rel_gap_ = std::abs(p - d) / (1.0 + std::abs(p) + std::abs(d));
}

// W = G G^T from Cholesky factors of X and S via the SVD of Ls^T Lx.
bool Ipm::update_scaling() {
  const int nb = static_cast<int>(in_.bdim.size());
  W_.assign(nb, MatrixXd());
  G_.assign(nb, MatrixXd());
  Gi_.assign(nb, MatrixXd());
  sigma_.assign(nb, VectorXd());
  for (int bj = 0; bj < nb; ++bj) {
    Eigen::LLT<MatrixXd> lltx(st_.X[bj]), llts(st_.S[bj]);
    if (lltx.info() != Eigen::Success || llts.info() != Eigen::Success) return false;
    const MatrixXd Lx = lltx.matrixL();
    const MatrixXd Ls = llts.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(Ls.transpose() * Lx,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    if (sv.minCoeff() <= 0.0) return false;
    const VectorXd isq = sv.cwiseSqrt().cwiseInverse();
    G_[bj] = Lx * svd.matrixV() * isq.asDiagonal();
    Gi_[bj] = isq.asDiagonal() * svd.matrixU().transpose() * Ls.transpose();
    W_[bj] = G_[bj] * G_[bj].transpose();
    sigma_[bj] = sv;
  }
  return true;
}

// H_ik = A_i . (W A_k W), plus the diagonal w/z part for scalar variables.
template <typename Mat>
void assemble_schur(const Internal& in, const std::vector<MatrixXd>& W,
                    const VectorXd& w, const VectorXd& z, Mat& H) {
  using Scalar = typename Mat::Scalar;
  H = Mat::Zero(in.m, in.m);
  for (size_t bj = 0; bj < in.bdim.size(); ++bj) {
    const auto& inc = in.binc[bj];
    const int n = in.bdim[bj];
    const Mat Wl = W[bj].template cast<Scalar>();
    Mat T(n, n);
    for (size_t a = 0; a < inc.size(); ++a) {
      // T = W * A_a * W via the sparse entries of A_a
      T.setZero();
      for (const Entry& e : inc[a].second) {
        T += (Scalar(e.v) * Wl.col(e.i)) * Wl.row(e.j);
        if (e.i != e.j) T += (Scalar(e.v) * Wl.col(e.j)) * Wl.row(e.i);
      }
      for (size_t c = 0; c <= a; ++c) {
        Scalar h = 0;
        for (const Entry& e : inc[c].second)
          h += e.i == e.j ? Scalar(e.v) * T(e.i, e.i)
                          : Scalar(e.v) * (T(e.i, e.j) + T(e.j, e.i));
        H(inc[a].first, inc[c].first) += h;
        if (inc[a].first != inc[c].first) H(inc[c].first, inc[a].first) += h;
      }
    }
  }
  for (int v = 0; v < in.nlp; ++v) {
    const Scalar wv = Scalar(w(v)) / Scalar(z(v));
    const auto& vi = in.varinc[v];
    for (size_t a = 0; a < vi.size(); ++a)
      for (size_t c = 0; c <= a; ++c) {
        const Scalar h = Scalar(vi[a].second) * Scalar(vi[c].second) * wv;
        H(vi[a].first, vi[c].first) += h;
        if (vi[a].first != vi[c].first) H(vi[c].first, vi[a].first) += h;
      }
  }
}

bool Ipm::factor_schur() {
  if (schur_ld_) {
    assemble_schur(in_, W_, st_.w, st_.z, Hld_);
    const long double dscale = std::max<long double>(1.0L, Hld_.diagonal().maxCoeff());
    Hld_.diagonal().array() += 1e-15L * dscale;
    hfact_ld_.compute(Hld_);
    if (hfact_ld_.info() != Eigen::Success) {
      Hld_.diagonal().array() += 1e-11L * dscale;
      hfact_ld_.compute(Hld_);
      if (hfact_ld_.info() != Eigen::Success) return false;
    }
    return true;
  }
  assemble_schur(in_, W_, st_.w, st_.z, H_);
  const double dscale = std::max(1.0, H_.diagonal().maxCoeff());
  H_.diagonal().array() += 1e-12 * dscale;
  hfact_.compute(H_);
  if (hfact_.info() != Eigen::Success) {
    H_.diagonal().array() += 1e-9 * dscale;
    hfact_.compute(H_);
    if (hfact_.info() != Eigen::Success) return false;
  }
  return true;
}

// The NT Newton system per block is  dX + W dS W = Rc.  Substituting
// dS = Rd - A*(dy) into A(dX) = rp gives  H dy = rp - A(Rc - W Rd W).
VectorXd Ipm::schur_rhs(const std::vector<MatrixXd>& Rc, const VectorXd& rc_lp) {
  VectorXd rhs = res_.rp;
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj) {
    const MatrixXd M = Rc[bj] - W_[bj] * res_.Rd[bj] * W_[bj];
    for (const auto& [ri, es] : in_.binc[bj]) rhs(ri) -= dot_row(es, M);
  }
  for (int ri = 0; ri < in_.m; ++ri)
    for (const auto& [v, c] : in_.rowlin[ri])
      rhs(ri) -= c * (rc_lp(v) - st_.w(v) * res_.rdlp(v)) / st_.z(v);
  return rhs;
}

void Ipm::directions(const VectorXd& dy, const std::vector<MatrixXd>& Rc,
                     const VectorXd& rc_lp, std::vector<MatrixXd>& dX,
                     std::vector<MatrixXd>& dS, VectorXd& dw, VectorXd& dz) {
  dX.assign(in_.bdim.size(), MatrixXd());
  dS.assign(in_.bdim.size(), MatrixXd());
  for (size_t bj = 0; bj < in_.bdim.size(); ++bj) {
    MatrixXd ds = res_.Rd[bj];
    for (const auto& [ri, es] : in_.binc[bj])
      for (const Entry& e : es) {
        ds(e.i, e.j) -= dy(ri) * e.v;
        if (e.i != e.j) ds(e.j, e.i) -= dy(ri) * e.v;
      }
    dX[bj] = Rc[bj] - W_[bj] * ds * W_[bj];
    dS[bj] = std::move(ds);
  }
  dz = res_.rdlp;
  for (int ri = 0; ri < in_.m; ++ri)
    for (const auto& [v, c] : in_.rowlin[ri]) dz(v) -= c * dy(ri);
  dw.resize(in_.nlp);
  for (int v = 0; v < in_.nlp; ++v)
    dw(v) = (rc_lp(v) - st_.w(v) * dz(v)) / st_.z(v);
}

double Ipm::max_step_blocks(const std::vector<MatrixXd>& M,
                            const std::vector<MatrixXd>& dM) const {
  double alpha = 1e30;
  for (size_t bj = 0; bj < M.size(); ++bj) {
    Eigen::LLT<MatrixXd> llt(M[bj]);
    if (llt.info() != Eigen::Success) return 0.0;
    const MatrixXd L = llt.matrixL();
    MatrixXd W = L.triangularView<Eigen::Lower>().solve(dM[bj]);
    W = L.triangularView<Eigen::Lower>().solve(W.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()),
                                               Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

double Ipm::max_step_vec(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1e30;
  for (int i = 0; i < v.size(); ++i)
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  return alpha;
}

SolveStatus Ipm::run() {
  const int nb = static_cast<int>(in_.bdim.size());
  ntot_ = in_.nlp;
  for (int d : in_.bdim) ntot_ += d;
  if (ntot_ == 0) {
    pobj_ = dobj_ = 0.0;
    rel_gap_ = 0.0;
    return SolveStatus::Optimal;
  }
  schur_ld_ = in_.m <= 800;

  // initial point scaled by data magnitudes
  double binorm = 0.0;
  for (int ri = 0; ri < in_.m; ++ri) binorm = std::max(binorm, std::abs(in_.b[ri]));
  const double tau_p = std::max(10.0, 2.0 * binorm);
  const double tau_d = 10.0;
  st_.X.assign(nb, MatrixXd());
  st_.S.assign(nb, MatrixXd());
  for (int bj = 0; bj < nb; ++bj) {
    st_.X[bj] = tau_p * MatrixXd::Identity(in_.bdim[bj], in_.bdim[bj]);
    st_.S[bj] = tau_d * MatrixXd::Identity(in_.bdim[bj], in_.bdim[bj]);
  }
  st_.w = VectorXd::Constant(in_.nlp, tau_p);
  st_.z = VectorXd::Constant(in_.nlp, tau_d);
  st_.y = VectorXd::Zero(in_.m);

  std::vector<MatrixXd> Rc(nb), dX, dS, dX2, dS2;
  VectorXd rc_lp(in_.nlp), dw, dz, dw2, dz2;

  // keep the best iterate seen; late iterations can degrade numerically
  State best;
  double best_merit = 1e300;
  int bad_streak = 0;
  // primal-infeasibility stall detector: dual residual resolved, primal
  // residual stuck well above tolerance while complementarity keeps shrinking
  double prev_rel_p = 1e300;
  double mu0 = -1.0;
  int inf_streak = 0;
  auto finish_with_best = [&](SolveStatus fallback) {
    if (best_merit < 1e300) {
      st_ = best;
      residuals();
      objectives();
      if (std::max({res_.rel_p, res_.rel_d, rel_gap_}) <= opts_.tol) return SolveStatus::Optimal;
      if (polish()) return SolveStatus::Optimal;
      // a sound but uncertified iterate: report it as an iteration-limit
      // exit with its achieved metrics rather than a numerical failure
      if (std::max({res_.rel_p, res_.rel_d, rel_gap_}) <= 1e-4)
        return SolveStatus::IterLimit;
    }
    return fallback;
  };

  for (iters_ = 0; iters_ < opts_.max_iter; ++iters_) {
    residuals();
    objectives();

    double comp = 0.0;
    for (int bj = 0; bj < nb; ++bj) comp += (st_.X[bj].array() * st_.S[bj].array()).sum();
    comp += st_.w.dot(st_.z);
    mu_ = comp / ntot_;

    const double merit = std::max({res_.rel_p, res_.rel_d, rel_gap_});
    if (merit < best_merit) {
      best_merit = merit;
      best = st_;
      bad_streak = 0;
    } else if (mu_ < 10.0 * opts_.tol && ++bad_streak >= 8) {
      // complementarity is resolved and the iterates only degrade
      return finish_with_best(SolveStatus::IterLimit);
    }

    IterStat stat;
    stat.mu = mu_;
    stat.primal_obj = pobj_ * in_.obj_scale;
    stat.dual_obj = dobj_ * in_.obj_scale;
    stat.primal_res = res_.rel_p;
    stat.dual_res = res_.rel_d;
    double corr = std::abs(st_.y.dot(res_.rp));
    for (int bj = 0; bj < nb; ++bj)
      corr += std::abs((res_.Rd[bj].array() * st_.X[bj].array()).sum());
    corr += std::abs(res_.rdlp.dot(st_.w));
    stat.duality_correction = corr * in_.obj_scale;
    trace_.push_back(stat);

    if (opts_.verbose)
      std::fprintf(stderr, "  it %3d  mu %9.2e  gap %9.2e  rp %9.2e  rd %9.2e\n",
                   iters_, mu_, rel_gap_, res_.rel_p, res_.rel_d);

    if (res_.rel_p <= opts_.tol && res_.rel_d <= opts_.tol && rel_gap_ <= opts_.tol)
      return SolveStatus::Optimal;
    // once complementarity is resolved, feasibility restoration may close
    // the remaining residual-driven gap (near-dependent rows blow up the
    // multipliers, so even a small primal residual can dominate the gap)
    if (mu_ <= 100.0 * opts_.tol * (1.0 + std::abs(pobj_)) && res_.rel_d <= opts_.tol &&
        rel_gap_ <= 1e-2 && polish())
      return SolveStatus::Optimal;

    // divergence heuristics
    if (dobj_ > 1e7 * (1.0 + binorm) && res_.rel_d <= 1e-6 && rel_gap_ > opts_.tol)
      return SolveStatus::Infeasible;
    if (pobj_ < -1e7 * (1.0 + binorm) && res_.rel_p <= 1e-6)
      return SolveStatus::Unbounded;
    if (st_.y.size() > 0 && st_.y.cwiseAbs().maxCoeff() > 1e13)
      return res_.rel_d <= 1e-5 ? SolveStatus::Infeasible : SolveStatus::NumError;
    if (mu0 < 0.0) mu0 = mu_;
    if (res_.rel_d <= 1e-7 && res_.rel_p >= std::max(1e3 * opts_.tol, 1e-6) &&
        res_.rel_p > 0.98 * prev_rel_p && mu_ <= 1e-2 * mu0) {
      if (++inf_streak >= 6) return SolveStatus::Infeasible;
    } else {
      inf_streak = 0;
    }
    prev_rel_p = res_.rel_p;
    // primal iterates running away while the residual stays put: no feasible
    // point in reach
    if (mu_ > 1e8 * mu0 && res_.rel_p > std::max(1e3 * opts_.tol, 1e-6))
      return SolveStatus::Infeasible;

    if (!update_scaling()) return finish_with_best(SolveStatus::NumError);
    if (!factor_schur()) return finish_with_best(SolveStatus::NumError);

    // predictor (affine scaling): dX + W dS W = -X
    for (int bj = 0; bj < nb; ++bj) Rc[bj] = -st_.X[bj];
    rc_lp = -st_.w.array() * st_.z.array();
    VectorXd dy = solve_schur(schur_rhs(Rc, rc_lp));
    directions(dy, Rc, rc_lp, dX, dS, dw, dz);

    const double ap_aff = std::min({1.0, max_step_blocks(st_.X, dX), max_step_vec(st_.w, dw)});
    const double ad_aff = std::min({1.0, max_step_blocks(st_.S, dS), max_step_vec(st_.z, dz)});
    double comp_aff = 0.0;
    for (int bj = 0; bj < nb; ++bj)
      comp_aff += ((st_.X[bj] + ap_aff * dX[bj]).array() *
                   (st_.S[bj] + ad_aff * dS[bj]).array()).sum();
    comp_aff += (st_.w + ap_aff * dw).dot(st_.z + ad_aff * dz);
    const double mu_aff = comp_aff / ntot_;
    double sigma = std::pow(std::max(0.0, mu_aff / mu_), 3.0);
    sigma = std::min(1.0, std::max(1e-10, sigma));

    // corrector, assembled in the scaled space where the target is diagonal:
    // solve (U Sig + Sig U)/2 = sigma*mu*I - Sig^2 - sym(dXh dSh), then
    // Rc = G U G^T
    for (int bj = 0; bj < nb; ++bj) {
      const MatrixXd dXh = Gi_[bj] * dX[bj] * Gi_[bj].transpose();
      const MatrixXd dSh = G_[bj].transpose() * dS[bj] * G_[bj];
      const MatrixXd prod = dXh * dSh;
      MatrixXd R = -0.5 * (prod + prod.transpose());
      const VectorXd& sg = sigma_[bj];
      for (int i = 0; i < in_.bdim[bj]; ++i) R(i, i) += sigma * mu_ - sg(i) * sg(i);
      MatrixXd U(in_.bdim[bj], in_.bdim[bj]);
      for (int i = 0; i < in_.bdim[bj]; ++i)
        for (int j = 0; j < in_.bdim[bj]; ++j)
          U(i, j) = 2.0 * R(i, j) / (sg(i) + sg(j));
      Rc[bj] = G_[bj] * U * G_[bj].transpose();
    }
    rc_lp = (sigma * mu_) - st_.w.array() * st_.z.array() - dw.array() * dz.array();
    dy = solve_schur(schur_rhs(Rc, rc_lp));
    directions(dy, Rc, rc_lp, dX2, dS2, dw2, dz2);

    const double gamma = 0.98;
    double ap = std::min({1.0, gamma * max_step_blocks(st_.X, dX2),
                          gamma * max_step_vec(st_.w, dw2)});
    double ad = std::min({1.0, gamma * max_step_blocks(st_.S, dS2),
                          gamma * max_step_vec(st_.z, dz2)});
    if (ap < 1e-10 && ad < 1e-10) return finish_with_best(SolveStatus::NumError);

    for (int bj = 0; bj < nb; ++bj) {
      st_.X[bj] += ap * dX2[bj];
      st_.X[bj] = 0.5 * (st_.X[bj] + st_.X[bj].transpose()).eval();
      st_.S[bj] += ad * dS2[bj];
      st_.S[bj] = 0.5 * (st_.S[bj] + st_.S[bj].transpose()).eval();
    }
    st_.w += ap * dw2;
    st_.z += ad * dz2;
    st_.y += ad * dy;
  }
  return finish_with_best(SolveStatus::IterLimit);
}

}  // namespace

SdpSolution solve(const SdpBlockProblem& prob, const SolverOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  prob.validate();
  SdpSolution out;
  out.block_values.reserve(prob.blocks.size());
  for (const auto& b : prob.blocks) out.block_values.emplace_back(b.dim);
  out.var_values.assign(prob.nonneg_vars.size(), 0.0);
  out.dual_eq.assign(prob.eq_constraints.size(), 0.0);
  out.dual_ineq.assign(prob.ineq_constraints.size(), 0.0);

  const Prepared prep = preprocess(prob);
  if (prep.infeasible) {
    out.status = SolveStatus::Infeasible;
    out.wall_time_s = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  const Internal in = build_internal(prob, prep);

  Ipm ipm(in, opts);
  out.status = ipm.run();
  out.iterations = ipm.iterations();
  out.trace = ipm.trace();
  out.gap = ipm.rel_gap();
  out.primal_res = ipm.rel_p();
  out.dual_res = ipm.rel_d();

  if (out.status == SolveStatus::Optimal || out.status == SolveStatus::IterLimit ||
      out.status == SolveStatus::NumError) {
    const State& st = ipm.state();
    for (size_t bj = 0; bj < in.bdim.size(); ++bj) {
      SymMatrix& target = out.block_values[in.orig_block[bj]];
      const auto& coords = in.coord_map[bj];
      for (int i = 0; i < in.bdim[bj]; ++i)
        for (int j = i; j < in.bdim[bj]; ++j)
          target.set(coords[i], coords[j], st.X[bj](i, j));
    }
    for (int v = 0; v < in.nlp; ++v)
      if (in.lp_orig[v] >= 0) out.var_values[in.lp_orig[v]] = st.w(v);
    const size_t neq = prob.eq_constraints.size();
    for (int ri = 0; ri < in.m; ++ri) {
      const double y = st.y(ri) * in.obj_scale / in.row_scale[ri];
      const int orig = in.row_orig[ri];
      if (static_cast<size_t>(orig) < neq)
        out.dual_eq[orig] = y;
      else
        out.dual_ineq[orig - neq] = y;
    }
    out.objective = ipm.pobj() * in.obj_scale;
    out.dual_objective = ipm.dobj() * in.obj_scale;
  }
  out.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

LpSolution solve_lp(const LpProblem& lp, const SolverOptions& opts) {
  SdpBlockProblem prob;
  prob.nonneg_vars = lp.vars;
  prob.objective_lin = lp.costs;
  for (const auto& r : lp.rows) {
    SdpBlockProblem::Constraint c;
    c.name = r.name;
    c.lin_terms = r.terms;
    std::sort(c.lin_terms.begin(), c.lin_terms.end(),
              [](const auto& a, const auto& b) { return a.var < b.var; });
    c.rhs = r.rhs;
    if (r.equality)
      prob.eq_constraints.push_back(std::move(c));
    else
      prob.ineq_constraints.push_back(std::move(c));
  }
  const SdpSolution sol = solve(prob, opts);
  LpSolution out;
  out.status = sol.status;
  out.values = sol.var_values;
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  out.duals.reserve(lp.rows.size());
  size_t ie = 0, il = 0;
  for (const auto& r : lp.rows)
    out.duals.push_back(r.equality ? sol.dual_eq[ie++] : sol.dual_ineq[il++]);
  return out;
}

}  // namespace huc
