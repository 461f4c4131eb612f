#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "raopt/central_solver.hpp"
#include "raopt/dist_solver.hpp"
#include "raopt/feasibility.hpp"
#include "raopt/slotted_sim.hpp"
#include "raopt/topology.hpp"

namespace raopt::cli {

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_double(double value);

std::string feasibility_json(const NetworkTopology& topology, const FeasibilityReport& report,
                             const std::string& method);

std::string solve_report_json(const NetworkTopology& topology, const SolveReport& report,
                              const SolverConfig& config);

/// Rates, probabilities and cost from a file written by solve_report_json.
struct StoredSolution {
  double cost = 0;
  std::vector<double> p;
  std::vector<double> r;
};
StoredSolution load_solution(const NetworkTopology& topology, const std::filesystem::path& path);

inline constexpr const char* kSweepHeader =
    "dc,lambda1,lambda2,energy,utility,cost,iterations,status";
std::string sweep_csv(const std::vector<TradeoffPoint>& points);

/// Trace CSV with one p/r/mu/err_pct column group per watched link.
std::string trace_csv(const NetworkTopology& topology, const Trace& trace,
                      const std::vector<std::size_t>& watched,
                      const std::optional<DistReference>& reference);

inline constexpr const char* kSimulateHeader =
    "link_from,link_to,emp_delay,emp_delay_se,analytic_delay,emp_throughput,"
    "analytic_throughput,attempts,successes";
std::string simulate_csv(const NetworkTopology& topology, const SimReport& report,
                         const PrimalState& state);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace raopt::cli
