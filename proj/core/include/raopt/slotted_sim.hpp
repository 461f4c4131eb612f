#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "raopt/perf_model.hpp"
#include "raopt/topology.hpp"

namespace raopt {

struct SimConfig {
  long slots = 1'000'000;
  long warmup = 0;  // slots excluded from statistics
  std::uint64_t seed = 1;
  std::vector<double> arrival_rates;  // packets per slot, per link (ignored when saturated)
  std::vector<double> probabilities;  // p_ij, per link
  bool saturated = false;             // every queue always holds a packet
  int batches = 32;                   // batch-means groups for delay standard errors
};

struct LinkSimStats {
  double mean_delay = 0;     // slots, NaN when nothing departed
  double delay_se = 0;       // batch-means standard error
  double throughput = 0;     // successes per measured slot
  double mean_queue = 0;     // packets queued after arrivals, per measured slot
  long attempts = 0;
  long successes = 0;
  long collisions = 0;
  long delivered = 0;        // departures whose delay was recorded

  // Whole-run counters, warmup included.
  long arrivals = 0;
  long departures = 0;
  long final_queue = 0;

  double success_rate() const;  // successes / attempts
};

struct SimReport {
  std::vector<LinkSimStats> links;
  long measured_slots = 0;
};

/// Packet-level slotted random access. Per slot: Poisson arrivals join each
/// link queue; every node draws one action (link (i,j) with probability p_ij,
/// idle otherwise) and stays silent if the drawn queue is empty; a
/// transmission on (i,j) succeeds iff j and every other neighbor of j are
/// silent. Failed packets stay at the head of their queue. A packet's delay is
/// departure slot - arrival slot + 1. Each node draws from its own stream
/// seeded by (seed, node index), so runs are reproducible.
SimReport simulate(const NetworkTopology& topology, const SimConfig& config);

struct LinkDeviation {
  double throughput_analytic = 0;
  double throughput_deviation = 0;   // (empirical - analytic) / analytic
  double throughput_ci = 0;          // 3-sigma half-width of the deviation
  std::optional<double> delay_analytic;  // absent when r >= x
  std::optional<double> delay_deviation;
  std::optional<double> delay_ci;
};

/// Compares a run against the analytic model for the same (p, r). Throughput
/// is judged against x_ij (meaningful for saturated runs), delay against the
/// closed-form M/G/1 value (meaningful for stable runs).
std::vector<LinkDeviation> compare_to_model(const SimReport& report,
                                            const NetworkTopology& topology,
                                            const PrimalState& state);

}  // namespace raopt
