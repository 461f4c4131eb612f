#include "report_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace raopt::cli {

using ordered_json = nlohmann::ordered_json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return {buffer, result.ptr};
}

namespace {

// JSON has no NaN/inf; store them as null.
ordered_json number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

}  // namespace

std::string feasibility_json(const NetworkTopology& topology, const FeasibilityReport& report,
                             const std::string& method) {
  ordered_json doc;
  doc["method"] = method;
  doc["min_dc"] = number(report.min_dc);
  doc["throughput"] = number(report.throughput);
  doc["log_throughput"] = number(report.log_throughput);
  doc["iterations"] = report.iterations;
  doc["gap"] = number(report.gap);
  doc["links"] = ordered_json::array();
  const auto x = link_throughput(topology, report.p);
  for (std::size_t l = 0; l < topology.num_links(); ++l) {
    const Link& link = topology.link(l);
    doc["links"].push_back(
        {{"from", link.from}, {"to", link.to}, {"p", report.p[l]}, {"throughput", x[l]}});
  }
  return doc.dump(2) + "\n";
}

std::string solve_report_json(const NetworkTopology& topology, const SolveReport& report,
                              const SolverConfig& config) {
  ordered_json doc;
  doc["status"] = "ok";
  doc["delay_bound"] = config.delay_bound;
  doc["lambda1"] = config.lambda1;
  doc["lambda2"] = config.lambda2;
  doc["energy"] = report.energy;
  doc["utility"] = report.utility;
  doc["cost"] = report.cost;
  doc["iterations"] = report.iterations;
  doc["polished"] = report.polished;
  doc["kkt"] = {{"stationarity", report.kkt.stationarity},
                {"feasibility", report.kkt.feasibility},
                {"complementarity", report.kkt.complementarity}};
  const auto metrics = link_metrics(topology, report.state, config.delay_bound);
  doc["links"] = ordered_json::array();
  for (std::size_t l = 0; l < topology.num_links(); ++l) {
    const Link& link = topology.link(l);
    doc["links"].push_back({{"from", link.from},
                            {"to", link.to},
                            {"p", report.state.p(l)},
                            {"r", report.state.r(l)},
                            {"z", report.state.z(l)},
                            {"throughput", metrics.throughput[l]},
                            {"delay", metrics.delay[l] ? number(*metrics.delay[l]) : nullptr},
                            {"residual", number(report.residuals[l])},
                            {"multiplier", report.multipliers[l]}});
  }
  doc["nodes"] = ordered_json::array();
  for (std::size_t i = 0; i < topology.num_nodes(); ++i) {
    doc["nodes"].push_back({{"id", topology.node(i).id}, {"P", report.state.node_p(i)}});
  }
  return doc.dump(2) + "\n";
}

StoredSolution load_solution(const NetworkTopology& topology, const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    const auto doc = nlohmann::json::parse(text);
    StoredSolution out;
    out.cost = doc.at("cost").get<double>();
    out.p.assign(topology.num_links(), 0.0);
    out.r.assign(topology.num_links(), 0.0);
    std::vector<bool> seen(topology.num_links(), false);
    for (const auto& item : doc.at("links")) {
      const std::size_t l =
          topology.link_index(item.at("from").get<int>(), item.at("to").get<int>());
      out.p[l] = item.at("p").get<double>();
      out.r[l] = item.at("r").get<double>();
      seen[l] = true;
    }
    for (bool s : seen) {
      if (!s) throw Error(ErrorCategory::kValidation, "solution does not cover every link");
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::kValidation,
                "malformed solution file " + path.string() + ": " + e.what());
  }
}

std::string sweep_csv(const std::vector<TradeoffPoint>& points) {
  std::ostringstream out;
  out << kSweepHeader << '\n';
  for (const auto& point : points) {
    out << format_double(point.delay_bound) << ',' << format_double(point.lambda1) << ','
        << format_double(point.lambda2) << ',' << format_double(point.energy) << ','
        << format_double(point.utility) << ',' << format_double(point.cost) << ','
        << point.iterations << ',' << point.status << '\n';
  }
  return out.str();
}

std::string trace_csv(const NetworkTopology& topology, const Trace& trace,
                      const std::vector<std::size_t>& watched,
                      const std::optional<DistReference>& reference) {
  std::ostringstream out;
  out << "iter,cost,cost_err_pct,max_constraint_violation";
  for (std::size_t l : watched) {
    const std::string tag =
        std::to_string(topology.link(l).from) + "_" + std::to_string(topology.link(l).to);
    out << ",p_" << tag << ",r_" << tag << ",mu_" << tag << ",err_pct_" << tag;
  }
  out << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) {
    out << k << ',' << format_double(trace.cost[k]) << ','
        << format_double(100.0 * trace.cost_error[k]) << ','
        << format_double(trace.max_violation[k]);
    for (std::size_t l : watched) {
      double err = std::numeric_limits<double>::quiet_NaN();
      if (reference) err = 100.0 * std::abs(trace.p[k][l] - reference->p[l]) / reference->p[l];
      out << ',' << format_double(trace.p[k][l]) << ',' << format_double(trace.r[k][l]) << ','
          << format_double(trace.mu[k][l]) << ',' << format_double(err);
    }
    out << '\n';
  }
  return out.str();
}

std::string simulate_csv(const NetworkTopology& topology, const SimReport& report,
                         const PrimalState& state) {
  const auto deviations = compare_to_model(report, topology, state);
  std::ostringstream out;
  out << kSimulateHeader << '\n';
  for (std::size_t l = 0; l < topology.num_links(); ++l) {
    const auto& stats = report.links[l];
    const auto& dev = deviations[l];
    out << topology.link(l).from << ',' << topology.link(l).to << ','
        << format_double(stats.mean_delay) << ',' << format_double(stats.delay_se) << ','
        << format_double(dev.delay_analytic.value_or(std::numeric_limits<double>::quiet_NaN()))
        << ',' << format_double(stats.throughput) << ',' << format_double(dev.throughput_analytic)
        << ',' << stats.attempts << ',' << stats.successes << '\n';
  }
  return out.str();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(ErrorCategory::kIo, "write failed for " + path.string());
}

}  // namespace raopt::cli
