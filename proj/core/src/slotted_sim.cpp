#include "raopt/slotted_sim.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>
#include <tuple>

namespace raopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kIdle = std::numeric_limits<std::size_t>::max();

void check(const NetworkTopology& topology, const SimConfig& config) {
  auto fail = [](const std::string& message) { throw Error(ErrorCategory::kValidation, message); };
  const std::size_t m = topology.num_links();
  if (config.slots <= 0 || config.warmup < 0 || config.warmup >= config.slots) {
    fail("simulation needs slots > warmup >= 0");
  }
  if (config.probabilities.size() != m) fail("one probability per link is required");
  if (!config.saturated && config.arrival_rates.size() != m) {
    fail("one arrival rate per link is required");
  }
  for (double p : config.probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) fail("probabilities must lie in [0, 1]");
  }
  for (double value : node_probabilities(topology, config.probabilities)) {
    if (value > 1.0 + 1e-12) fail("a node transmits with total probability above 1");
  }
  if (!config.saturated) {
    for (double r : config.arrival_rates) {
      if (!(r >= 0.0) || !std::isfinite(r)) fail("arrival rates must be finite and >= 0");
    }
  }
  if (config.batches < 2) fail("at least two batches are needed for standard errors");
}

/// Mean and batch-means standard error of a sample sequence.
std::pair<double, double> mean_and_se(const std::vector<double>& samples, int batches) {
  const std::size_t n = samples.size();
  if (n == 0) return {kNaN, kNaN};
  double total = 0.0;
  for (double s : samples) total += s;
  const double mean = total / static_cast<double>(n);
  if (n < 2) return {mean, kNaN};

  const auto groups = static_cast<std::size_t>(batches);
  if (n < 2 * groups) {
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
  }
  const std::size_t size = n / groups;
  double ss = 0.0;
  for (std::size_t g = 0; g < groups; ++g) {
    double sum = 0.0;
    for (std::size_t k = g * size; k < (g + 1) * size; ++k) sum += samples[k];
    const double batch_mean = sum / static_cast<double>(size);
    ss += (batch_mean - mean) * (batch_mean - mean);
  }
  const double var = ss / static_cast<double>(groups - 1);
  return {mean, std::sqrt(var / static_cast<double>(groups))};
}

}  // namespace

double LinkSimStats::success_rate() const {
  return attempts > 0 ? static_cast<double>(successes) / static_cast<double>(attempts) : kNaN;
}

SimReport simulate(const NetworkTopology& topology, const SimConfig& config) {
  check(topology, config);
  const std::size_t m = topology.num_links();
  const std::size_t n = topology.num_nodes();

  std::vector<std::mt19937_64> rngs;
  rngs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i)};
    rngs.emplace_back(seq);
  }
  std::vector<std::poisson_distribution<long>> arrivals;
  if (!config.saturated) {
    for (double r : config.arrival_rates) arrivals.emplace_back(r > 0.0 ? r : 1.0);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SimReport report;
  report.links.resize(m);
  report.measured_slots = config.slots - config.warmup;
  std::vector<std::deque<long>> queues(m);
  std::vector<std::vector<double>> delays(m);
  std::vector<double> queue_sum(m, 0.0);
  std::vector<std::size_t> action(n, kIdle);
  std::vector<bool> busy(n, false);

  for (long slot = 0; slot < config.slots; ++slot) {
    const bool measured = slot >= config.warmup;

    if (!config.saturated) {
      for (std::size_t l = 0; l < m; ++l) {
        if (!(config.arrival_rates[l] > 0.0)) continue;
        const long count = arrivals[l](rngs[topology.transmitter(l)]);
        for (long k = 0; k < count; ++k) queues[l].push_back(slot);
        report.links[l].arrivals += count;
      }
      if (measured) {
        for (std::size_t l = 0; l < m; ++l) queue_sum[l] += static_cast<double>(queues[l].size());
      }
    }

    // Phase 1: every node draws its action.
    for (std::size_t i = 0; i < n; ++i) {
      action[i] = kIdle;
      busy[i] = false;
      const auto out = topology.out_links(i);
      if (out.empty()) continue;
      const double u = unit(rngs[i]);
      double cumulative = 0.0;
      for (std::size_t l : out) {
        cumulative += config.probabilities[l];
        if (u < cumulative) {
          action[i] = l;
          break;
        }
      }
      if (action[i] != kIdle && !config.saturated && queues[action[i]].empty()) action[i] = kIdle;
      busy[i] = action[i] != kIdle;
    }

    // Phase 2: resolve collisions.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t l = action[i];
      if (l == kIdle) continue;
      bool clear = true;
      for (std::size_t k : topology.silence_set(l)) {
        if (busy[k]) {
          clear = false;
          break;
        }
      }
      LinkSimStats& stats = report.links[l];
      if (measured) ++stats.attempts;
      if (!clear) {
        if (measured) ++stats.collisions;
        continue;
      }
      if (measured) ++stats.successes;
      if (config.saturated) continue;
      const long arrived = queues[l].front();
      queues[l].pop_front();
      ++stats.departures;
      if (measured) {
        delays[l].push_back(static_cast<double>(slot - arrived + 1));
        ++stats.delivered;
      }
    }
  }

  const auto measured_slots = static_cast<double>(report.measured_slots);
  for (std::size_t l = 0; l < m; ++l) {
    LinkSimStats& stats = report.links[l];
    stats.throughput = static_cast<double>(stats.successes) / measured_slots;
    stats.mean_queue = queue_sum[l] / measured_slots;
    stats.final_queue = static_cast<long>(queues[l].size());
    std::tie(stats.mean_delay, stats.delay_se) = mean_and_se(delays[l], config.batches);
  }
  return report;
}

std::vector<LinkDeviation> compare_to_model(const SimReport& report,
                                            const NetworkTopology& topology,
                                            const PrimalState& state) {
  if (report.links.size() != topology.num_links() || state.num_links() != topology.num_links()) {
    throw Error(ErrorCategory::kValidation, "report, topology and state disagree on links");
  }
  const auto x = link_throughput(topology, state);
  std::vector<LinkDeviation> out(x.size());
  const auto slots = static_cast<double>(report.measured_slots);
  for (std::size_t l = 0; l < x.size(); ++l) {
    const LinkSimStats& stats = report.links[l];
    LinkDeviation& dev = out[l];
    dev.throughput_analytic = x[l];
    if (x[l] > 0.0) {
      dev.throughput_deviation = (stats.throughput - x[l]) / x[l];
      dev.throughput_ci = 3.0 * std::sqrt(x[l] * (1.0 - std::min(x[l], 1.0)) / slots) / x[l];
    } else {
      dev.throughput_deviation = kNaN;
      dev.throughput_ci = kNaN;
    }
    const double r = state.r(l);
    if (x[l] > r && x[l] <= 1.0) {
      const double analytic = link_delay(r, x[l]);
      dev.delay_analytic = analytic;
      dev.delay_deviation = (stats.mean_delay - analytic) / analytic;
      dev.delay_ci = 3.0 * stats.delay_se / analytic;
    }
  }
  return out;
}

}  // namespace raopt
