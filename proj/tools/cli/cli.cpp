#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "manifest.hpp"
#include "raopt/central_solver.hpp"
#include "raopt/dist_solver.hpp"
#include "raopt/error.hpp"
#include "raopt/feasibility.hpp"
#include "raopt/slotted_sim.hpp"
#include "raopt/topology.hpp"
#include "report_io.hpp"

#ifndef RAOPT_VERSION
#define RAOPT_VERSION "0.0.0"
#endif

namespace raopt::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kUsableDcFactor = 4.0;

struct GenOptions {
  std::string shape;
  int n = 0;
  double factor = 0.5;
  std::uint64_t seed = 1;
  std::string out;
};

struct MindcOptions {
  std::string topo;
  std::string method = "solver";
  double resolution = 1e-3;
  double tolerance = 1e-7;
  std::string out;
};

struct SolveOptions {
  std::string topo;
  double lambda1 = 5.0;
  double lambda2 = 0.1;
  double dc = 0;
  std::string out;
};

struct SweepOptions {
  std::string topo;
  std::vector<double> dcs;
  std::string lambda_grid = "0.01:100:9";
  double lambda2 = 0.1;
  unsigned jobs = 1;
  std::string out;
};

struct DistOptions {
  std::string topo;
  double lambda1 = 5.0;
  double lambda2 = 0.1;
  double dc = 0;
  double alpha = 0.01;
  int iters = 500;
  double p0 = 0.1;
  std::optional<double> mu0;
  double threshold = 0.01;
  bool no_stop = false;
  std::string reference;
  std::vector<std::string> watch;
  std::string trace_out;
};

struct SimOptions {
  std::string topo;
  std::string solution;
  long slots = 1'000'000;
  std::uint64_t seed = 1;
  long warmup = 0;
  bool saturated = false;
  int batches = 32;
  std::string out;
};

/// Files produced by one command, held in memory until every check passed.
struct Outcome {
  RunManifest manifest;
  std::vector<std::pair<std::string, std::string>> files;  // path, contents
};

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCategory::kValidation, message);
}

double parse_double(std::string_view text) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    invalid("not a number: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

/// "lo:hi:count" (log-spaced) or a comma list of lambda1 values.
std::vector<LambdaPair> parse_lambda_grid(const std::string& grid, double lambda2) {
  if (grid.find(':') != std::string::npos) {
    const auto parts = split(grid, ':');
    if (parts.size() != 3) invalid("--lambda-grid range must be lo:hi:count");
    const double count = parse_double(parts[2]);
    if (count < 1 || count != std::floor(count)) invalid("--lambda-grid count must be a positive integer");
    return log_spaced_lambdas(parse_double(parts[0]), parse_double(parts[1]),
                              static_cast<int>(count), lambda2);
  }
  std::vector<LambdaPair> out;
  for (auto part : split(grid, ',')) out.push_back({parse_double(part), lambda2});
  return out;
}

std::size_t parse_watch(const NetworkTopology& topology, const std::string& spec) {
  const auto parts = split(spec, ':');
  if (parts.size() != 2) invalid("--watch expects from:to, got '" + spec + "'");
  const double from = parse_double(parts[0]);
  const double to = parse_double(parts[1]);
  return topology.link_index(static_cast<int>(from), static_cast<int>(to));
}

RunManifest base_manifest(const std::string& subcommand, const std::vector<std::string>& args) {
  RunManifest m;
  m.subcommand = subcommand;
  m.argv = args;
  m.tool_version = RAOPT_VERSION;
  return m;
}

void add_input(RunManifest& m, const std::string& path) {
  m.inputs.push_back({path, file_sha256(path)});
}

void add_output(Outcome& outcome, const std::string& path, std::string contents) {
  outcome.manifest.outputs.push_back({path, sha256_hex(contents)});
  outcome.files.emplace_back(path, std::move(contents));
}

void commit(const Outcome& outcome) {
  if (outcome.files.empty()) return;
  for (const auto& [path, contents] : outcome.files) write_file(path, contents);
  write_file(manifest_path(outcome.files.front().first), outcome.manifest.to_json());
}

/// MinDc, with the infeasibility check and the usability warning.
double check_delay_bound(const NetworkTopology& topology, double dc, std::ostream& err) {
  const double min_dc = min_delay_constraint(topology);
  if (!(dc > min_dc)) {
    throw Error(ErrorCategory::kInfeasible, "delay bound " + format_double(dc) +
                                                " is not above MinDc " + format_double(min_dc));
  }
  if (dc < kUsableDcFactor * min_dc) {
    err << "warning: delay bound " << format_double(dc) << " is below 4 x MinDc ("
        << format_double(kUsableDcFactor * min_dc) << "); the feasible region is narrow\n";
  }
  return min_dc;
}

Outcome cmd_gen(const GenOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const NetworkTopology topology = o.shape == "linear" ? gen_linear(o.n)
                                   : o.shape == "star"  ? gen_star(o.n)
                                                        : gen_geometric(o.n, o.factor, o.seed);
  Outcome outcome{base_manifest("gen", args), {}};
  outcome.manifest.config = {{"shape", o.shape}, {"n", o.n}};
  if (o.shape == "geometric") {
    outcome.manifest.config["factor"] = o.factor;
    outcome.manifest.config["seed"] = o.seed;
    outcome.manifest.seed = o.seed;
  }
  add_output(outcome, o.out, topology_to_json(topology));
  out << "nodes " << topology.num_nodes() << " links " << topology.num_links() << '\n';
  return outcome;
}

Outcome cmd_mindc(const MindcOptions& o, const std::vector<std::string>& args, std::ostream& out) {
  const auto topology = load_topology(o.topo);
  const FeasibilityReport report = o.method == "bruteforce"
                                       ? brute_force_maxmin(topology, o.resolution)
                                       : maxmin_throughput(topology, {.tolerance = o.tolerance});
  Outcome outcome{base_manifest("mindc", args), {}};
  outcome.manifest.config = {{"topo", o.topo}, {"method", o.method}};
  if (o.method == "bruteforce") {
    outcome.manifest.config["resolution"] = o.resolution;
  } else {
    outcome.manifest.config["tolerance"] = o.tolerance;
  }
  add_input(outcome.manifest, o.topo);
  if (!o.out.empty()) add_output(outcome, o.out, feasibility_json(topology, report, o.method));
  out << "min_dc " << format_double(report.min_dc) << '\n';
  return outcome;
}

Outcome cmd_solve(const SolveOptions& o, const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  const auto topology = load_topology(o.topo);
  SolverConfig config;
  config.lambda1 = o.lambda1;
  config.lambda2 = o.lambda2;
  config.delay_bound = o.dc;
  validate(config);
  check_delay_bound(topology, o.dc, err);
  const SolveReport report = solve(topology, config);

  Outcome outcome{base_manifest("solve", args), {}};
  outcome.manifest.config = {{"topo", o.topo},
                             {"lambda1", o.lambda1},
                             {"lambda2", o.lambda2},
                             {"dc", o.dc},
                             {"kkt_tolerance", config.kkt_tolerance}};
  add_input(outcome.manifest, o.topo);
  if (!o.out.empty()) add_output(outcome, o.out, solve_report_json(topology, report, config));
  out << "cost " << format_double(report.cost) << " energy " << format_double(report.energy)
      << " utility " << format_double(report.utility) << " kkt " << format_double(report.kkt.max())
      << " iterations " << report.iterations << '\n';
  return outcome;
}

Outcome cmd_sweep(const SweepOptions& o, const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  const auto topology = load_topology(o.topo);
  const auto lambdas = parse_lambda_grid(o.lambda_grid, o.lambda2);
  for (const auto& pair : lambdas) {
    SolverConfig probe;
    probe.lambda1 = pair.lambda1;
    probe.lambda2 = pair.lambda2;
    validate(probe);
  }
  if (o.jobs == 0) invalid("--jobs must be >= 1");
  const double min_dc = min_delay_constraint(topology);
  for (double dc : o.dcs) {
    SolverConfig probe;
    probe.delay_bound = dc;
    validate(probe);
    if (dc <= min_dc) {
      err << "warning: delay bound " << format_double(dc) << " is not above MinDc "
          << format_double(min_dc) << "; its points will be infeasible\n";
    } else if (dc < kUsableDcFactor * min_dc) {
      err << "warning: delay bound " << format_double(dc) << " is below 4 x MinDc ("
          << format_double(kUsableDcFactor * min_dc) << ")\n";
    }
  }
  const auto points = sweep(topology, o.dcs, lambdas, {}, o.jobs);

  Outcome outcome{base_manifest("sweep", args), {}};
  outcome.manifest.config = {{"topo", o.topo},
                             {"dc", o.dcs},
                             {"lambda_grid", o.lambda_grid},
                             {"lambda2", o.lambda2},
                             {"jobs", o.jobs}};
  add_input(outcome.manifest, o.topo);
  add_output(outcome, o.out, sweep_csv(points));
  const auto failed = std::count_if(points.begin(), points.end(),
                                    [](const TradeoffPoint& p) { return p.status != "ok"; });
  out << "points " << points.size() << " failed " << failed << '\n';
  return outcome;
}

Outcome cmd_distributed(const DistOptions& o, const std::vector<std::string>& args,
                        std::ostream& out, std::ostream& err) {
  const auto topology = load_topology(o.topo);
  DistConfig config;
  config.lambda1 = o.lambda1;
  config.lambda2 = o.lambda2;
  config.delay_bound = o.dc;
  config.step_size = o.alpha;
  config.max_iterations = o.iters;
  config.initial_probability = o.p0;
  config.initial_multiplier = o.mu0;
  config.convergence_threshold = o.threshold;
  config.stop_at_threshold = !o.no_stop;
  validate(config);
  if (!(o.threshold > 0.0)) invalid("--threshold must be positive");

  std::vector<std::size_t> watched;
  for (const auto& w : o.watch) watched.push_back(parse_watch(topology, w));
  if (watched.empty() && topology.num_links() > 0) watched.push_back(0);

  std::optional<DistReference> reference;
  if (!o.reference.empty()) {
    const StoredSolution stored = load_solution(topology, o.reference);
    reference = DistReference{stored.cost, stored.p, stored.r};
  }
  check_delay_bound(topology, o.dc, err);
  const DistResult result = run(topology, config, reference);

  Outcome outcome{base_manifest("distributed", args), {}};
  auto& cfg = outcome.manifest.config;
  cfg = {{"topo", o.topo},         {"lambda1", o.lambda1}, {"lambda2", o.lambda2},
         {"dc", o.dc},             {"alpha", o.alpha},     {"iters", o.iters},
         {"p0", o.p0},             {"threshold", o.threshold},
         {"stop_at_threshold", !o.no_stop}};
  cfg["mu0"] = config.initial_multiplier.value_or(2.0 * config.lambda2);
  cfg["watch"] = ordered_json::array();
  for (std::size_t l : watched) {
    cfg["watch"].push_back(std::to_string(topology.link(l).from) + ":" +
                           std::to_string(topology.link(l).to));
  }
  add_input(outcome.manifest, o.topo);
  if (reference) add_input(outcome.manifest, o.reference);
  add_output(outcome, o.trace_out, trace_csv(topology, result.trace, watched, reference));

  out << "iterations " << result.iterations << " cost " << format_double(result.trace.cost.back());
  if (reference) {
    out << " cost_err_pct " << format_double(100.0 * result.trace.cost_error.back());
    out << " converged_at " << (result.converged_at ? std::to_string(*result.converged_at) : "none");
  }
  out << " messages_per_round " << messages_per_round(topology) << '\n';
  return outcome;
}

Outcome cmd_simulate(const SimOptions& o, const std::vector<std::string>& args,
                     std::ostream& out) {
  const auto topology = load_topology(o.topo);
  const StoredSolution stored = load_solution(topology, o.solution);
  const auto state = PrimalState::from_rates(topology, stored.p, stored.r);

  SimConfig config;
  config.slots = o.slots;
  config.warmup = o.warmup;
  config.seed = o.seed;
  config.saturated = o.saturated;
  config.batches = o.batches;
  config.probabilities = stored.p;
  config.arrival_rates = stored.r;
  const SimReport report = simulate(topology, config);

  Outcome outcome{base_manifest("simulate", args), {}};
  outcome.manifest.config = {{"topo", o.topo},       {"solution", o.solution},
                             {"slots", o.slots},     {"warmup", o.warmup},
                             {"saturated", o.saturated}, {"batches", o.batches},
                             {"seed", o.seed}};
  outcome.manifest.seed = o.seed;
  add_input(outcome.manifest, o.topo);
  add_input(outcome.manifest, o.solution);
  add_output(outcome, o.out, simulate_csv(topology, report, state));
  out << "measured_slots " << report.measured_slots << " links " << topology.num_links() << '\n';
  return outcome;
}

int replay(const std::string& path, std::ostream& out, std::ostream& err) {
  const RunManifest manifest = RunManifest::from_json(read_file(path));
  if (manifest.subcommand == "replay") invalid("a replay manifest cannot be replayed");
  for (const auto& input : manifest.inputs) {
    if (file_sha256(input.path) != input.sha256) {
      invalid("input " + input.path + " differs from the manifest digest");
    }
  }
  const int code = run_cli(manifest.argv, out, err);
  if (code != 0) return code;
  for (const auto& output : manifest.outputs) {
    if (file_sha256(output.path) != output.sha256) {
      invalid("replayed output " + output.path + " differs from the manifest digest");
    }
  }
  out << "replay ok " << manifest.outputs.size() << " outputs match\n";
  return 0;
}

void print_error(std::ostream& err, std::string_view category, const std::string& message) {
  err << ordered_json{{"error", category}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Energy/utility optimal random access: topology generation, MinDc, "
               "central and distributed solvers, slotted simulation"};
  app.name("raopt");
  app.set_version_flag("--version", RAOPT_VERSION);
  app.require_subcommand(1, 1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a topology file");
  gen_cmd->add_option("--shape", gen.shape, "linear | star | geometric")
      ->required()
      ->check(CLI::IsMember({"linear", "star", "geometric"}));
  gen_cmd->add_option("--n", gen.n, "Number of nodes")->required();
  gen_cmd->add_option("--factor", gen.factor, "Geometric connectivity radius")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Geometric placement seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Topology JSON path")->required();

  MindcOptions mindc;
  auto* mindc_cmd = app.add_subcommand("mindc", "Smallest feasible delay bound");
  mindc_cmd->add_option("--topo", mindc.topo)->required();
  mindc_cmd->add_option("--method", mindc.method)
      ->check(CLI::IsMember({"solver", "bruteforce"}))
      ->capture_default_str();
  mindc_cmd->add_option("--resolution", mindc.resolution, "Grid step for bruteforce")
      ->capture_default_str();
  mindc_cmd->add_option("--tolerance", mindc.tolerance, "Duality gap for the solver")
      ->capture_default_str();
  mindc_cmd->add_option("--out", mindc.out, "Feasibility report JSON path");

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Central optimum for one weight pair");
  solve_cmd->add_option("--topo", solve_opts.topo)->required();
  solve_cmd->add_option("--lambda1", solve_opts.lambda1)->capture_default_str();
  solve_cmd->add_option("--lambda2", solve_opts.lambda2)->capture_default_str();
  solve_cmd->add_option("--dc", solve_opts.dc, "Delay bound in slots")->required();
  solve_cmd->add_option("--out", solve_opts.out, "Solution JSON path");

  SweepOptions sweep_opts;
  auto* sweep_cmd = app.add_subcommand("sweep", "Energy/utility tradeoff curves");
  sweep_cmd->add_option("--topo", sweep_opts.topo)->required();
  sweep_cmd->add_option("--dc", sweep_opts.dcs, "Delay bounds, comma separated")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--lambda-grid", sweep_opts.lambda_grid,
                        "lambda1 values: lo:hi:count (log spaced) or a comma list")
      ->capture_default_str();
  sweep_cmd->add_option("--lambda2", sweep_opts.lambda2)->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep_opts.jobs)->capture_default_str();
  sweep_cmd->add_option("--out", sweep_opts.out, "CSV path")->required();

  DistOptions dist;
  auto* dist_cmd = app.add_subcommand("distributed", "Dual decomposition iteration trace");
  dist_cmd->add_option("--topo", dist.topo)->required();
  dist_cmd->add_option("--lambda1", dist.lambda1)->capture_default_str();
  dist_cmd->add_option("--lambda2", dist.lambda2)->capture_default_str();
  dist_cmd->add_option("--dc", dist.dc)->required();
  dist_cmd->add_option("--alpha", dist.alpha, "Price step size")->capture_default_str();
  dist_cmd->add_option("--iters", dist.iters)->capture_default_str();
  dist_cmd->add_option("--p0", dist.p0, "Initial link probability")->capture_default_str();
  dist_cmd->add_option("--mu0", dist.mu0, "Initial price (default 2 x lambda2)");
  dist_cmd->add_option("--threshold", dist.threshold, "Relative cost error that counts as converged")
      ->capture_default_str();
  dist_cmd->add_flag("--no-stop", dist.no_stop, "Keep iterating after the threshold");
  dist_cmd->add_option("--reference", dist.reference, "Solution JSON from `solve`");
  dist_cmd->add_option("--watch", dist.watch, "Link from:to to trace (repeatable)");
  dist_cmd->add_option("--trace-out", dist.trace_out, "Trace CSV path")->required();

  SimOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Slotted Monte Carlo run of a solution");
  sim_cmd->add_option("--topo", sim.topo)->required();
  sim_cmd->add_option("--solution", sim.solution, "Solution JSON from `solve`")->required();
  sim_cmd->add_option("--slots", sim.slots)->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed)->capture_default_str();
  sim_cmd->add_option("--warmup", sim.warmup)->capture_default_str();
  sim_cmd->add_option("--batches", sim.batches)->capture_default_str();
  sim_cmd->add_flag("--saturated", sim.saturated, "Every queue always backlogged");
  sim_cmd->add_option("--out", sim.out, "CSV path")->required();

  std::string manifest_file;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and verify its outputs");
  replay_cmd->add_option("--manifest", manifest_file)->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    print_error(err, to_string(ErrorCategory::kValidation), e.what());
    return static_cast<int>(ErrorCategory::kValidation);
  }

  try {
    Outcome outcome;
    if (gen_cmd->parsed()) {
      outcome = cmd_gen(gen, args, out);
    } else if (mindc_cmd->parsed()) {
      outcome = cmd_mindc(mindc, args, out);
    } else if (solve_cmd->parsed()) {
      outcome = cmd_solve(solve_opts, args, out, err);
    } else if (sweep_cmd->parsed()) {
      outcome = cmd_sweep(sweep_opts, args, out, err);
    } else if (dist_cmd->parsed()) {
      outcome = cmd_distributed(dist, args, out, err);
    } else if (sim_cmd->parsed()) {
      outcome = cmd_simulate(sim, args, out);
    } else {
      return replay(manifest_file, out, err);
    }
    commit(outcome);
    return 0;
  } catch (const Error& e) {
    print_error(err, to_string(e.category()), e.what());
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    print_error(err, "internal", e.what());
    return 1;
  }
}

}  // namespace raopt::cli
