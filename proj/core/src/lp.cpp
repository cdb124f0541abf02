#include "cpnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cpnet {

int LinearProgram::add_var(double cost, std::string name) {
  objective.push_back(cost);
  if (name.empty()) name = "v" + std::to_string(num_vars);
  var_names.push_back(std::move(name));
  return num_vars++;
}

namespace {

constexpr double kPivotEps = 1e-9;
constexpr double kCostEps = 1e-9;

struct Tableau {
  int m = 0;             // rows
  int n = 0;             // structural + slack + artificial columns
  int width = 0;         // n + 1 (rhs)
  std::vector<double> a; // (m + 1) x width, row 0 is the objective row
  std::vector<int> basis;

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * width + c];
  }

  void pivot(int pr, int pc) {
    double* prow = &a[static_cast<std::size_t>(pr + 1) * width];
    double inv = 1.0 / prow[pc];
    for (int c = 0; c < width; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= m; ++r) {
      if (r == pr + 1) continue;
      double* row = &a[static_cast<std::size_t>(r) * width];
      double f = row[pc];
      if (f == 0.0) continue;
      for (int c = 0; c < width; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    basis[pr] = pc;
  }
};

// Simplex loop on the current objective row; `eligible[c]` marks columns
// allowed to enter.  Returns false when an unbounded direction is found.
bool optimize(Tableau& t, const std::vector<char>& eligible, long& iters,
              long iter_limit) {
  bool bland = false;
  long since_improve = 0;
  double last_obj = std::numeric_limits<double>::infinity();
  while (true) {
    int pc = -1;
    if (!bland) {
      double best = -kCostEps;
      for (int c = 0; c < t.n; ++c) {
        if (!eligible[c]) continue;
        double rc = t.at(0, c);
        if (rc < best) { best = rc; pc = c; }
      }
    } else {
      for (int c = 0; c < t.n; ++c) {
        if (!eligible[c]) continue;
        if (t.at(0, c) < -kCostEps) { pc = c; break; }
      }
    }
    if (pc < 0) return true;  // optimal

    int pr = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < t.m; ++r) {
      double arc = t.at(r + 1, pc);
      if (arc > kPivotEps) {
        double ratio = t.at(r + 1, t.n) / arc;
        if (ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 && pr >= 0 &&
             t.basis[r] < t.basis[pr])) {
          best_ratio = ratio;
          pr = r;
        }
      }
    }
    if (pr < 0) return false;  // unbounded

    t.pivot(pr, pc);
    if (++iters > iter_limit)
      throw std::runtime_error("simplex: iteration limit exceeded");
    double obj = t.at(0, t.n);
    if (obj < last_obj - 1e-12) {
      last_obj = obj;
      since_improve = 0;
      bland = false;
    } else if (++since_improve > (t.m + t.n) / 2 + 200) {
      bland = true;  // long degenerate stall: switch to Bland's rule
    }
  }
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int n0 = lp.num_vars;
  const int m = static_cast<int>(lp.rows.size());
  if (static_cast<int>(lp.objective.size()) != n0)
    throw std::invalid_argument("solve_lp: objective size mismatch");

  // Normalized senses (rhs made nonnegative by row negation).
  std::vector<RowSense> sense(m);
  std::vector<int> row_sign(m, 1);
  std::vector<double> rhs(m, 0.0);
  int n_slack = 0, n_art = 0;
  for (int r = 0; r < m; ++r) {
    RowSense s = lp.rows[r].sense;
    double b = lp.rows[r].rhs;
    if (b < 0) {
      row_sign[r] = -1;
      b = -b;
      s = (s == RowSense::LE) ? RowSense::GE
          : (s == RowSense::GE) ? RowSense::LE : RowSense::EQ;
    }
    sense[r] = s;
    rhs[r] = b;
    if (s != RowSense::EQ) ++n_slack;
    if (s != RowSense::LE) ++n_art;
  }

  Tableau t;
  t.m = m;
  t.n = n0 + n_slack + n_art;
  t.width = t.n + 1;
  t.a.assign(static_cast<std::size_t>(m + 1) * t.width, 0.0);
  t.basis.assign(m, -1);

  std::vector<int> slack_col(m, -1), art_col(m, -1);
  int next_slack = n0, next_art = n0 + n_slack;
  for (int r = 0; r < m; ++r) {
    for (const auto& [v, c] : lp.rows[r].coeffs) {
      if (v < 0 || v >= n0)
        throw std::invalid_argument("solve_lp: bad variable index");
      t.at(r + 1, v) += row_sign[r] * c;
    }
    // Deterministic right-hand-side perturbation on inequality rows (the
    // slack gains a hair of room): network LPs are massively degenerate and
    // stall the ratio test otherwise.  Equalities stay exact so conservation
    // remains consistent.  The shift is far below every tolerance used
    // downstream.
    double jitter =
        sense[r] == RowSense::EQ
            ? 0.0
            : 1e-9 *
                  (0.5 + static_cast<double>((r * 0x9E3779B9u >> 16) & 0xFFFF) /
                             65536.0) *
                  std::max(1.0, rhs[r]);
    rhs[r] += jitter;
    t.at(r + 1, t.n) = rhs[r];
    if (sense[r] == RowSense::LE) {
      slack_col[r] = next_slack++;
      t.at(r + 1, slack_col[r]) = 1.0;
      t.basis[r] = slack_col[r];
    } else {
      if (sense[r] == RowSense::GE) {
        slack_col[r] = next_slack++;
        t.at(r + 1, slack_col[r]) = -1.0;
      }
      art_col[r] = next_art++;
      t.at(r + 1, art_col[r]) = 1.0;
      t.basis[r] = art_col[r];
    }
  }

  LpSolution sol;
  std::vector<char> eligible(t.n, 1);
  long iter_limit = 2000L * (m + t.n) + 200000L;

  // Phase 1: drive out the artificial basis.
  if (n_art > 0) {
    for (int r = 0; r < m; ++r) {
      if (art_col[r] < 0) continue;
      for (int c = 0; c <= t.n; ++c) t.at(0, c) -= t.at(r + 1, c);
    }
    for (int r = 0; r < m; ++r)
      if (art_col[r] >= 0) t.at(0, art_col[r]) = 0.0;
    if (!optimize(t, eligible, sol.iterations, iter_limit))
      throw std::runtime_error("solve_lp: phase 1 unbounded");
    if (t.at(0, t.n) < -1e-7) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    for (int r = 0; r < m; ++r) {
      if (t.basis[r] < n0 + n_slack) continue;
      int pc = -1;
      for (int c = 0; c < n0 + n_slack; ++c)
        if (std::fabs(t.at(r + 1, c)) > 1e-7) { pc = c; break; }
      if (pc >= 0) t.pivot(r, pc);
      // else the row is redundant; its artificial stays basic at zero
    }
    for (int r = 0; r < m; ++r)
      if (art_col[r] >= 0) eligible[art_col[r]] = 0;
  }

  // Phase 2: original objective.
  for (int c = 0; c <= t.n; ++c) t.at(0, c) = 0.0;
  for (int c = 0; c < n0; ++c) t.at(0, c) = lp.objective[c];
  for (int r = 0; r < m; ++r) {
    int b = t.basis[r];
    if (b < n0 && lp.objective[b] != 0.0) {
      double f = lp.objective[b];
      for (int c = 0; c <= t.n; ++c) t.at(0, c) -= f * t.at(r + 1, c);
    }
  }
  if (!optimize(t, eligible, sol.iterations, iter_limit)) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  sol.status = LpStatus::Optimal;
  sol.x.assign(n0, 0.0);
  for (int r = 0; r < m; ++r)
    if (t.basis[r] < n0) sol.x[t.basis[r]] = t.at(r + 1, t.n);
  sol.objective = 0.0;
  for (int v = 0; v < n0; ++v) sol.objective += lp.objective[v] * sol.x[v];

  // Duals.  Reduced cost of a +1 slack in row i is -y_i; of a -1 slack, +y_i;
  // of the artificial unit column, -y_i.  Undo row negation afterwards.
  sol.duals.assign(m, 0.0);
  for (int r = 0; r < m; ++r) {
    double y;
    if (sense[r] == RowSense::LE) y = -t.at(0, slack_col[r]);
    else if (sense[r] == RowSense::GE) y = t.at(0, slack_col[r]);
    else y = -t.at(0, art_col[r]);
    sol.duals[r] = y * row_sign[r];
  }
  // Gap against the (perturbed) right-hand side actually solved.
  double by = 0.0;
  for (int r = 0; r < m; ++r) by += sol.duals[r] * row_sign[r] * rhs[r];
  double dual_viol = 0.0;
  for (int c = 0; c < n0 + n_slack; ++c)
    dual_viol = std::max(dual_viol, -t.at(0, c));
  sol.gap = std::fabs(sol.objective - by) + dual_viol;
  return sol;
}

std::string export_lp_text(const LinearProgram& lp) {
  std::ostringstream out;
  out.precision(12);
  out << "minimize\n obj:";
  bool first = true;
  for (int v = 0; v < lp.num_vars; ++v) {
    double c = lp.objective[v];
    if (c == 0.0) continue;
    out << (first ? " " : (c >= 0 ? " + " : " - "));
    if (!first && c < 0) c = -c;
    out << c << " " << lp.var_names[v];
    first = false;
  }
  if (first) out << " 0";
  out << "\nsubject to\n";
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const auto& row = lp.rows[r];
    out << " " << (row.name.empty() ? "r" + std::to_string(r) : row.name)
        << ":";
    bool f2 = true;
    for (const auto& [v, c] : row.coeffs) {
      double cc = c;
      out << (f2 ? " " : (cc >= 0 ? " + " : " - "));
      if (!f2 && cc < 0) cc = -cc;
      out << cc << " " << lp.var_names[v];
      f2 = false;
    }
    if (f2) out << " 0";
    out << (row.sense == RowSense::LE   ? " <= "
            : row.sense == RowSense::GE ? " >= "
                                        : " = ")
        << row.rhs << "\n";
  }
  out << "bounds\n";
  for (int v = 0; v < lp.num_vars; ++v)
    out << " " << lp.var_names[v] << " >= 0\n";
  out << "end\n";
  return out.str();
}

}  // namespace cpnet
