#include "huc/sdp_problem.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "huc/errors.hpp"

namespace huc {

int SdpBlockProblem::block_index(const std::string& name) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].name == name) return static_cast<int>(i);
  return -1;
}

int SdpBlockProblem::var_index(const std::string& name) const {
  for (size_t i = 0; i < nonneg_vars.size(); ++i)
    if (nonneg_vars[i] == name) return static_cast<int>(i);
  return -1;
}

namespace {
void check_terms(const SdpBlockProblem& prob,
                 const std::vector<SdpBlockProblem::BlockTerm>& terms,
                 const std::vector<SdpBlockProblem::LinTerm>& lin,
                 const std::string& where) {
  int prev_block = -1;
  for (const auto& t : terms) {
    if (t.block < 0 || t.block >= static_cast<int>(prob.blocks.size()))
      throw ValidationError(where + ": block index out of range");
    if (t.block <= prev_block)
      throw ValidationError(where + ": block terms not sorted/unique");
    prev_block = t.block;
    if (t.coeff.dim() != prob.blocks[t.block].dim)
      throw ValidationError(where + ": coefficient dimension does not match block '" +
                            prob.blocks[t.block].name + "'");
  }
  int prev_var = -1;
  for (const auto& t : lin) {
    if (t.var < 0 || t.var >= static_cast<int>(prob.nonneg_vars.size()))
      throw ValidationError(where + ": scalar variable index out of range");
    if (t.var <= prev_var)
      throw ValidationError(where + ": scalar terms not sorted/unique");
    prev_var = t.var;
  }
}
}  // namespace

void SdpBlockProblem::validate() const {
  std::set<std::string> names;
  for (const auto& b : blocks) {
    if (b.dim < 1) throw ValidationError("block '" + b.name + "' has dimension < 1");
    if (!names.insert(b.name).second)
      throw ValidationError("duplicate block name '" + b.name + "'");
  }
  names.clear();
  for (const auto& v : nonneg_vars)
    if (!names.insert(v).second)
      throw ValidationError("duplicate variable name '" + v + "'");
  if (!objective_lin.empty() && objective_lin.size() != nonneg_vars.size())
    throw ValidationError("objective_lin size does not match variable count");
  check_terms(*this, objective, {}, "objective");
  names.clear();
  for (const auto& c : eq_constraints) {
    if (!names.insert(c.name).second)
      throw ValidationError("duplicate constraint name '" + c.name + "'");
    check_terms(*this, c.terms, c.lin_terms, "constraint '" + c.name + "'");
  }
  for (const auto& c : ineq_constraints) {
    if (!names.insert(c.name).second)
      throw ValidationError("duplicate constraint name '" + c.name + "'");
    check_terms(*this, c.terms, c.lin_terms, "constraint '" + c.name + "'");
  }
}

double evaluate_constraint(const SdpBlockProblem::Constraint& c,
                           const std::vector<SymMatrix>& block_values,
                           const std::vector<double>& var_values) {
  double lhs = 0.0;
  for (const auto& t : c.terms) lhs += frobenius(t.coeff, block_values.at(t.block));
  for (const auto& t : c.lin_terms) lhs += t.coeff * var_values.at(t.var);
  return lhs;
}

double evaluate_objective(const SdpBlockProblem& prob,
                          const std::vector<SymMatrix>& block_values,
                          const std::vector<double>& var_values) {
  double v = 0.0;
  for (const auto& t : prob.objective) v += frobenius(t.coeff, block_values.at(t.block));
  for (size_t i = 0; i < prob.objective_lin.size(); ++i)
    v += prob.objective_lin[i] * var_values.at(i);
  return v;
}

namespace {
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_entries(std::ostream& os, int row,
                   const std::vector<SdpBlockProblem::BlockTerm>& terms,
                   const std::vector<SdpBlockProblem::LinTerm>& lin) {
  for (const auto& t : terms) {
    const int n = t.coeff.dim();
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (t.coeff(i, j) != 0.0)
          os << row << ' ' << (t.block + 1) << ' ' << (i + 1) << ' ' << (j + 1)
             << ' ' << fmt_double(t.coeff(i, j)) << '\n';
  }
  for (const auto& t : lin)
    if (t.coeff != 0.0)
      os << row << " 0 " << (t.var + 1) << " 0 " << fmt_double(t.coeff) << '\n';
}
}  // namespace

void write_problem_text(const SdpBlockProblem& prob, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  const size_t m = prob.eq_constraints.size() + prob.ineq_constraints.size();
  os << "* huc sdp block problem\n";
  os << m << ' ' << prob.blocks.size() << ' ' << prob.nonneg_vars.size() << '\n';
  for (size_t i = 0; i < prob.blocks.size(); ++i)
    os << prob.blocks[i].dim << (i + 1 < prob.blocks.size() ? ' ' : '\n');
  if (prob.blocks.empty()) os << '\n';
  // senses: e (equality) then l (<=), matching emission order below
  for (size_t i = 0; i < m; ++i)
    os << (i < prob.eq_constraints.size() ? 'e' : 'l') << (i + 1 < m ? ' ' : '\n');
  if (m == 0) os << '\n';
  {
    size_t i = 0;
    for (const auto& c : prob.eq_constraints) os << fmt_double(c.rhs) << (++i < m ? ' ' : '\n');
    for (const auto& c : prob.ineq_constraints) os << fmt_double(c.rhs) << (++i < m ? ' ' : '\n');
    if (m == 0) os << '\n';
  }
  std::vector<SdpBlockProblem::LinTerm> obj_lin;
  for (size_t v = 0; v < prob.objective_lin.size(); ++v)
    if (prob.objective_lin[v] != 0.0)
      obj_lin.push_back({static_cast<int>(v), prob.objective_lin[v]});
  write_entries(os, 0, prob.objective, obj_lin);
  int row = 1;
  for (const auto& c : prob.eq_constraints) write_entries(os, row++, c.terms, c.lin_terms);
  for (const auto& c : prob.ineq_constraints) write_entries(os, row++, c.terms, c.lin_terms);
}

SdpBlockProblem read_problem_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParseError("cannot open '" + path + "'");
  std::string line;
  auto next_data_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      if (!line.empty() && line[0] != '*' && line[0] != '#') return line;
    }
    throw ParseError(path + ": unexpected end of file");
  };
  size_t m = 0, nblocks = 0, nvars = 0;
  {
    std::istringstream ss(next_data_line());
    if (!(ss >> m >> nblocks >> nvars)) throw ParseError(path + ": bad header line");
  }
  SdpBlockProblem prob;
  {
    std::istringstream ss(next_data_line());
    for (size_t i = 0; i < nblocks; ++i) {
      int d = 0;
      if (!(ss >> d) || d < 1) throw ParseError(path + ": bad block dimension list");
      prob.blocks.push_back({"blk" + std::to_string(i + 1), d});
    }
  }
  for (size_t i = 0; i < nvars; ++i) prob.nonneg_vars.push_back("w" + std::to_string(i + 1));
  prob.objective_lin.assign(nvars, 0.0);
  std::vector<char> senses;
  if (m > 0) {
    std::istringstream ss(next_data_line());
    for (size_t i = 0; i < m; ++i) {
      char s = 0;
      if (!(ss >> s) || (s != 'e' && s != 'l')) throw ParseError(path + ": bad sense list");
      senses.push_back(s);
    }
  } else {
    next_data_line();
  }
  std::vector<double> rhs(m, 0.0);
  if (m > 0) {
    std::istringstream ss(next_data_line());
    for (size_t i = 0; i < m; ++i)
      if (!(ss >> rhs[i])) throw ParseError(path + ": bad rhs list");
  } else {
    next_data_line();
  }
  // rows are assembled in maps first, then sorted into constraints
  struct RowData {
    std::vector<SdpBlockProblem::BlockTerm> terms;
    std::vector<SdpBlockProblem::LinTerm> lin;
  };
  std::vector<RowData> rows(m + 1);
  for (auto& r : rows) {
    r.terms.clear();
  }
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '*' || line[0] == '#') continue;
    std::istringstream ss(line);
    size_t row;
    int blk, i, j;
    double v;
    if (!(ss >> row >> blk >> i >> j >> v))
      throw ParseError(path + ": bad entry line: " + line);
    if (row > m) throw ParseError(path + ": row index out of range: " + line);
    RowData& r = rows[row];
    if (blk == 0) {
      if (i < 1 || static_cast<size_t>(i) > nvars)
        throw ParseError(path + ": variable index out of range: " + line);
      r.lin.push_back({i - 1, v});
    } else {
      if (blk < 1 || static_cast<size_t>(blk) > nblocks)
        throw ParseError(path + ": block index out of range: " + line);
      auto it = r.terms.begin();
      for (; it != r.terms.end(); ++it)
        if (it->block == blk - 1) break;
      if (it == r.terms.end()) {
        r.terms.push_back({blk - 1, SymMatrix(prob.blocks[blk - 1].dim)});
        it = std::prev(r.terms.end());
      }
      it->coeff.add(i - 1, j - 1, v);
    }
  }
  auto finish = [](RowData& r) {
    std::sort(r.terms.begin(), r.terms.end(),
              [](const auto& a, const auto& b) { return a.block < b.block; });
    std::sort(r.lin.begin(), r.lin.end(),
              [](const auto& a, const auto& b) { return a.var < b.var; });
  };
  finish(rows[0]);
  prob.objective = rows[0].terms;
  for (const auto& t : rows[0].lin) prob.objective_lin[t.var] += t.coeff;
  for (size_t i = 1; i <= m; ++i) {
    finish(rows[i]);
    SdpBlockProblem::Constraint c;
    c.name = "row" + std::to_string(i);
    c.terms = std::move(rows[i].terms);
    c.lin_terms = std::move(rows[i].lin);
    c.rhs = rhs[i - 1];
    if (senses[i - 1] == 'e')
      prob.eq_constraints.push_back(std::move(c));
    else
      prob.ineq_constraints.push_back(std::move(c));
  }
  prob.validate();
  return prob;
}

}  // namespace huc
