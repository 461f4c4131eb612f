#pragma once

#include <vector>

#include "raopt/topology.hpp"

namespace raopt {

/// Max-min link throughput and the smallest feasible delay bound.
struct FeasibilityReport {
  std::vector<double> p;   // maximizing link probabilities p*
  double throughput = 0;   // x* = min_l x_l(p*)
  double log_throughput = 0;  // z* = log x*
  double min_dc = 0;       // 1 / x*
  int iterations = 0;
  double gap = 0;          // duality gap bound on log x* (0 when KKT-polished)
};

struct FeasibilityOptions {
  double tolerance = 1e-7;  // target duality gap on log x*
};

/// Maximizes min_l log x_l over 0 <= p, P_i <= 1 with a barrier method.
/// Throws Error(kValidation) for a topology without links and
/// Error(kNonConvergence) if the iteration budget runs out.
FeasibilityReport maxmin_throughput(const NetworkTopology& topology,
                                    const FeasibilityOptions& options = {});

/// MinDc = 1 / x*: the constraint 1/D_c + r (1 - 1/(2 D_c)) < x tends to
/// 1/D_c < x as r -> 0, so no smaller D_c admits a positive rate on every link.
double min_delay_constraint(const NetworkTopology& topology,
                            const FeasibilityOptions& options = {});

inline constexpr int kBruteForceMaxVariables = 6;

/// Grid search over link probabilities with step `grid_resolution`, keeping
/// P_i <= 1. Exhaustive when the grid has at most ~2e6 points, otherwise a
/// coarse grid is refined around the incumbent down to the requested step.
/// Throws Error(kValidation) for more than kBruteForceMaxVariables links.
FeasibilityReport brute_force_maxmin(const NetworkTopology& topology, double grid_resolution);

}  // namespace raopt
