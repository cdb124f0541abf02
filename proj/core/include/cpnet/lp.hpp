#pragma once

#include <string>
#include <vector>

namespace cpnet {

enum class RowSense : char { LE = '<', EQ = '=', GE = '>' };

struct LpRow {
  std::vector<std::pair<int, double>> coeffs;  // (variable, coefficient)
  RowSense sense = RowSense::LE;
  double rhs = 0.0;
  std::string name;
};

/// minimize c.x  subject to rows, x >= 0.
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<LpRow> rows;
  std::vector<std::string> var_names;

  int add_var(double cost, std::string name = {});
  void add_row(LpRow row) { rows.push_back(std::move(row)); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpSolution {
  LpStatus status = LpStatus::IterationLimit;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> duals;   // one per row, signs per row sense
  double gap = 0.0;            // |c.x - b.y| plus dual infeasibility
  long iterations = 0;
};

/// Dense two-phase primal simplex.  Dantzig pricing with a Bland fallback
/// for anti-cycling.  Exact enough for desk-scale instances (<= ~10^4
/// variables); reports the duality gap of the returned basis.
LpSolution solve_lp(const LinearProgram& lp);

/// Plain-text export (LP-format style) with the given row/column names.
std::string export_lp_text(const LinearProgram& lp);

}  // namespace cpnet
