#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cpnet {

struct CriterionResult {
  int id = 0;
  std::string name;
  std::string status;  // "PASS", "FAIL" or "SKIP"
  std::string detail;
  double seconds = 0.0;

  bool failed() const { return status == "FAIL"; }
};

struct AcceptanceOptions {
  std::uint64_t seed = 2006;
  std::string rocketfuel_dir;  // optional dataset checks
  int parallel = 1;
  std::vector<int> only;       // run a subset of criteria when nonempty
};

/// Runs the acceptance suite; one result per criterion, in order.  When
/// `progress` is set, a single pass/fail line per criterion is printed as it
/// completes.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            std::ostream* progress = nullptr);

/// Deliberately wrong steady-state evaluation (mutation fixture): the
/// normalization check must flag it.  Used by the suite's negative control.
std::vector<double> steady_state_perturbed_fixture(double r, double eps,
                                                   std::size_t M);

}  // namespace cpnet
