#include <algorithm>
#include <cmath>

#include "cpnet/lp.hpp"
#include "cpnet/rng.hpp"
#include "doctest.h"

using namespace cpnet;

TEST_CASE("simplex solves a textbook instance") {
  // min -3x - 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> x=2, y=6, obj=-36.
  LinearProgram lp;
  int x = lp.add_var(-3), y = lp.add_var(-5);
  lp.add_row({{{x, 1}}, RowSense::LE, 4, ""});
  lp.add_row({{{y, 2}}, RowSense::LE, 12, ""});
  lp.add_row({{{x, 3}, {y, 2}}, RowSense::LE, 18, ""});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-36).epsilon(1e-9));
  CHECK(sol.x[x] == doctest::Approx(2).epsilon(1e-9));
  CHECK(sol.x[y] == doctest::Approx(6).epsilon(1e-9));
  CHECK(sol.gap < 1e-8);
}

TEST_CASE("simplex handles equality and >= rows, duals close the gap") {
  // min x + 2y s.t. x + y = 10, x - y >= 2, y >= 1.
  LinearProgram lp;
  int x = lp.add_var(1), y = lp.add_var(2);
  lp.add_row({{{x, 1}, {y, 1}}, RowSense::EQ, 10, ""});
  lp.add_row({{{x, 1}, {y, -1}}, RowSense::GE, 2, ""});
  lp.add_row({{{y, 1}}, RowSense::GE, 1, ""});
  auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.x[x] == doctest::Approx(9).epsilon(1e-9));
  CHECK(sol.x[y] == doctest::Approx(1).epsilon(1e-9));
  CHECK(sol.gap < 1e-8);
}

TEST_CASE("simplex reports infeasible and unbounded") {
  {
    LinearProgram lp;
    int x = lp.add_var(1);
    lp.add_row({{{x, 1}}, RowSense::LE, 1, ""});
    lp.add_row({{{x, 1}}, RowSense::GE, 2, ""});
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
  }
  {
    LinearProgram lp;
    int x = lp.add_var(-1);
    int y = lp.add_var(0);
    lp.add_row({{{x, 1}, {y, -1}}, RowSense::LE, 1, ""});
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);
  }
}

TEST_CASE("simplex agrees with brute-force vertex enumeration on randoms") {
  Rng rng(42);
  for (int inst = 0; inst < 40; ++inst) {
    // Random bounded 2-variable LPs allow exhaustive vertex checks.
    LinearProgram lp;
    int x = lp.add_var(rng.uniform() * 2 - 1);
    int y = lp.add_var(rng.uniform() * 2 - 1);
    std::vector<std::array<double, 3>> rows;  // a x + b y <= c
    rows.push_back({1, 0, 5});
    rows.push_back({0, 1, 5});
    for (int r = 0; r < 3; ++r)
      rows.push_back({rng.uniform() * 2 - 0.5, rng.uniform() * 2 - 0.5,
                      rng.uniform() * 4 + 0.5});
    for (auto& r : rows)
      lp.add_row({{{x, r[0]}, {y, r[1]}}, RowSense::LE, r[2], ""});
    auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    // Vertices: intersections of all row pairs plus the axes.
    rows.push_back({-1, 0, 0});
    rows.push_back({0, -1, 0});
    double best = 1e100;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        double det = rows[i][0] * rows[j][1] - rows[j][0] * rows[i][1];
        if (std::fabs(det) < 1e-9) continue;
        double vx = (rows[i][2] * rows[j][1] - rows[j][2] * rows[i][1]) / det;
        double vy = (rows[i][0] * rows[j][2] - rows[j][0] * rows[i][2]) / det;
        bool ok = vx >= -1e-9 && vy >= -1e-9;
        for (const auto& r : rows)
          ok = ok && (r[0] * vx + r[1] * vy <= r[2] + 1e-7);
        if (ok) best = std::min(best, lp.objective[0] * vx +
                                          lp.objective[1] * vy);
      }
    CHECK(sol.objective == doctest::Approx(std::min(best, 0.0)).epsilon(1e-6));
  }
}

TEST_CASE("lp text export carries names and senses") {
  LinearProgram lp;
  int z = lp.add_var(1.5, "z[0->1,2]");
  int x = lp.add_var(0.0, "x[0][0->1,2:1]");
  lp.add_row({{{x, 1}, {z, -1}}, RowSense::LE, 0, "cap"});
  std::string text = export_lp_text(lp);
  CHECK(text.find("z[0->1,2]") != std::string::npos);
  CHECK(text.find("cap") != std::string::npos);
  CHECK(text.find("<= 0") != std::string::npos);
  CHECK(text.find("minimize") != std::string::npos);
}
