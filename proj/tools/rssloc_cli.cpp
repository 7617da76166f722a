// Command-line driver: simulate, localize, sweep, sampler-demo, bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rssloc/rssloc.hpp"

namespace fs = std::filesystem;
using namespace rssloc;

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kMalformedSpec = 3,
  kMissingFile = 4,
  kRuntime = 5,
};

int fail(int code, const std::string& kind, const std::string& message)
{
  std::string escaped;
  for (char c : message)
    escaped += (c == '"' || c == '\\') ? std::string("\\") + c : std::string(1, c);
  std::cerr << "error code=" << code << " kind=" << kind << " message=\"" << escaped << "\"\n";
  return code;
}

struct Options
{
  std::string spec_path;
  std::string out_dir = "out";
  std::string seed;
  std::string algorithm;
  std::vector<std::string> sets;
};

/// Spec file, then --set pairs, then the dedicated flags.
KeyValues effective_config(const Options& opt, bool spec_required)
{
  KeyValues kv;
  if (!opt.spec_path.empty())
    kv = KeyValues::parse(read_file(opt.spec_path));
  else if (spec_required)
    throw ConfigError("--spec is required for this verb");
  for (const auto& s : opt.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + s + "'");
    kv.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
  }
  if (!opt.seed.empty())
    kv.set("seed", opt.seed);
  if (!opt.algorithm.empty())
    kv.set("algorithm", opt.algorithm);
  KeyValues full = default_spec();
  for (const auto& [k, v] : kv.values()) {
    if (!full.has(k))
      throw ConfigError("unknown spec key '" + k + "'");
    full.set(k, v);
  }
  return full;
}

class OutputDir
{
public:
  OutputDir(const std::string& path, const ExperimentSpec& spec)
    : root_(path), header_(output_header(spec.config_hash, spec.engine.seed))
  {
    fs::create_directories(root_);
  }

  std::ofstream open(const std::string& name) const
  {
    std::ofstream os(root_ / name);
    if (!os)
      throw std::runtime_error("cannot write " + (root_ / name).string());
    os << header_;
    return os;
  }

private:
  fs::path root_;
  std::string header_;
};

void write_manifest(const OutputDir& out, const std::string& verb, const KeyValues& config,
                    const ExperimentSpec& spec, const std::vector<std::string>& results)
{
  auto os = out.open("manifest.txt");
  os << "verb = " << verb << "\n";
  os << "tool_version = " << kToolVersion << "\n";
  os << "config_hash = " << spec.config_hash << "\n";
  os << "seed = " << spec.engine.seed << "\n";
  os << "algorithm = " << algorithm_name(spec.engine) << "\n";
  os << "is_proposal = " << to_string(spec.engine.is_proposal) << "\n";
  os << "schedule = " << to_string(spec.engine.schedule) << "\n";
  os << "\n[config]\n" << config.canonical();
  os << "\n[results]\n";
  for (const auto& r : results)
    os << r << "\n";
}

std::string kv_line(const std::string& k, const std::string& v) { return k + " = " + v; }

MeasurementSet load_or_synthesize(const ExperimentSpec& spec, const NetworkGeometry& geometry)
{
  if (!spec.measurements_file.empty())
    return parse_measurements(read_file(spec.measurements_file), spec.channel.noise_std);
  Rng rng = make_stream(spec.engine.seed, StreamPurpose::measurements);
  return synthesize_measurements(rng, geometry, spec.channel, spec.alpha_true);
}

int cmd_simulate(const Options& opt)
{
  const auto config = effective_config(opt, true);
  const auto spec = parse_experiment_spec(config);
  const auto geometry = build_geometry(spec);
  Rng rng = make_stream(spec.engine.seed, StreamPurpose::measurements);
  const auto ms = synthesize_measurements(rng, geometry, spec.channel, spec.alpha_true);

  OutputDir out(opt.out_dir, spec);
  {
    auto os = out.open("network.csv");
    write_network(os, geometry);
  }
  {
    auto os = out.open("measurements.csv");
    write_measurements(os, ms);
  }
  std::vector<std::string> results{kv_line("nodes", std::to_string(geometry.size())),
                                   kv_line("edges", std::to_string(ms.edges.size()))};
  for (const auto& w : ms.warnings)
    results.push_back(kv_line("warning", w));
  write_manifest(out, "simulate", config, spec, results);
  return kOk;
}

int cmd_localize(const Options& opt)
{
  const auto config = effective_config(opt, true);
  const auto spec = parse_experiment_spec(config);
  const auto geometry = build_geometry(spec);
  auto ms = load_or_synthesize(spec, geometry);
  const Problem problem(geometry, spec.channel, ms,
                        default_priors(geometry, spec.alpha_prior_lo, spec.alpha_prior_hi));

  const auto t0 = std::chrono::steady_clock::now();
  const RunResult result = run(problem, spec.engine);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  OutputDir out(opt.out_dir, spec);
  {
    auto os = out.open("beliefs.csv");
    write_belief_header(os);
    for (const auto& snap : result.history)
      for (NodeId id : problem.agents())
        write_belief_rows(os, snap.iteration, snap.beliefs[problem.index(id)]);
  }
  {
    auto os = out.open("alpha.csv");
    write_alpha_header(os);
    for (const auto& snap : result.history)
      write_alpha_rows(os, snap.iteration, snap.alpha);
  }
  const auto estimates = position_estimates(problem, result.final());
  const auto truths = agent_truths(problem);
  const auto alpha_hat = alpha_point_estimate(result.final().alpha);
  {
    auto os = out.open("estimates.csv");
    os << "node_id,x_hat,y_hat,x_true,y_true,error\n";
    const auto agents = problem.agents();
    for (std::size_t k = 0; k < agents.size(); ++k)
      os << agents[k] << ',' << fmt_double(estimates[k].x) << ',' << fmt_double(estimates[k].y)
         << ',' << fmt_double(truths[k].x) << ',' << fmt_double(truths[k].y) << ','
         << fmt_double(distance(estimates[k], truths[k])) << '\n';
  }
  const RunEstimates est{alpha_hat.value, estimates};
  const auto metrics = compute_metrics(std::span(&est, 1), spec.alpha_true, truths);
  {
    auto os = out.open("metrics.txt");
    os << "alpha_hat = " << fmt_double(alpha_hat.value) << "\n";
    os << "alpha_hat_degenerate = " << (alpha_hat.degenerate ? "true" : "false") << "\n";
    os << "alpha_true = " << fmt_double(spec.alpha_true) << "\n";
    os << "mse_alpha = " << fmt_double(metrics.mse_alpha) << "\n";
    os << "bias_alpha = " << fmt_double(metrics.bias_alpha) << "\n";
    os << "rmse = " << fmt_double(metrics.rmse_positions) << "\n";
  }
  std::vector<std::string> results{
      kv_line("edges", std::to_string(ms.edges.size())),
      kv_line("iterations", std::to_string(spec.engine.max_iterations)),
      kv_line("divergences", std::to_string(result.diagnostics.divergences)),
      kv_line("fallbacks", std::to_string(result.diagnostics.fallbacks)),
      kv_line("measurements", spec.measurements_file.empty() ? "synthesized" : "file")};
  for (const auto& w : result.warnings)
    results.push_back(kv_line("warning", w));
  for (const auto& e : result.diagnostics.events)
    results.push_back(kv_line("event", e));
  results.push_back(kv_line("runtime_s", spec.report_timings ? fmt_fixed(seconds, 3) : "omitted"));
  write_manifest(out, "localize", config, spec, results);
  return kOk;
}

int cmd_sweep(const Options& opt)
{
  const auto config = effective_config(opt, true);
  const auto spec = parse_experiment_spec(config);
  const auto rows = run_experiment(spec);

  OutputDir out(opt.out_dir, spec);
  {
    auto os = out.open("sweep.csv");
    os << "axis,value,mse_alpha,bias_alpha,rmse,runs,divergences,runtime_s,seed,config_hash\n";
    for (const auto& r : rows)
      os << to_string(spec.sweep_axis) << ',' << fmt_double(r.value) << ','
         << fmt_double(r.metrics.mse_alpha) << ',' << fmt_double(r.metrics.bias_alpha) << ','
         << fmt_double(r.metrics.rmse_positions) << ',' << r.runs << ',' << r.divergences << ','
         << (spec.report_timings ? fmt_fixed(r.seconds, 3) : "NA") << ',' << spec.engine.seed
         << ',' << spec.config_hash << '\n';
  }
  {
    auto os = out.open("runs.csv");
    os << "axis,value,run_index,run_seed,alpha_hat,rmse,divergences\n";
    for (const auto& r : rows)
      for (std::size_t k = 0; k < r.details.size(); ++k) {
        const auto& d = r.details[k];
        os << to_string(spec.sweep_axis) << ',' << fmt_double(r.value) << ',' << k << ','
           << d.seed << ',' << fmt_double(d.estimates.alpha) << ','
           << fmt_double(position_rmse(d.estimates.positions, d.truths)) << ','
           << d.divergences << '\n';
      }
  }
  write_manifest(out, "sweep", config, spec,
                 {kv_line("rows", std::to_string(rows.size())),
                  kv_line("run_seed_rule", "splitmix64(seed ^ splitmix64(run_index + 1))")});
  return kOk;
}

int cmd_sampler_demo(const Options& opt)
{
  const auto config = effective_config(opt, false);
  const auto spec = parse_experiment_spec(config);
  DemoModel model = UniformRangeModel{7.5, 2.5};
  if (spec.demo_model == "rss") {
    const EdgeChannel ch{rss_mean(spec.channel.ref_power_dbm, spec.alpha_true, 7.5,
                                  spec.channel.ref_distance),
                         spec.channel.ref_power_dbm, spec.channel.ref_distance,
                         spec.channel.noise_std};
    model = RssRangeModel{ch, spec.alpha_true};
  }
  Rng rng = make_stream(spec.engine.seed, StreamPurpose::demo);
  const auto demo = run_sampler_demo(rng, model, spec.demo_samples);
  const auto grid = normalized_likelihood_grid(model, demo.reference, spec.demo_grid);

  OutputDir out(opt.out_dir, spec);
  const std::string count_line = "# samples=" + std::to_string(spec.demo_samples) +
                                 " model=" + spec.demo_model + "\n";
  {
    auto os = out.open("ground_truth.csv");
    os << count_line << "x,y,density\n";
    for (std::size_t k = 0; k < grid.points.size(); ++k)
      os << fmt_double(grid.points[k].x) << ',' << fmt_double(grid.points[k].y) << ','
         << fmt_double(grid.density[k]) << '\n';
  }
  {
    auto os = out.open("proposed.csv");
    os << count_line << "x,y,weight\n";
    for (std::size_t k = 0; k < demo.draws.size(); ++k)
      os << fmt_double(demo.draws[k].x) << ',' << fmt_double(demo.draws[k].y) << ','
         << fmt_double(demo.weights[k]) << '\n';
  }
  {
    auto os = out.open("heuristic.csv");
    os << count_line << "x,y\n";
    for (const auto& p : demo.draws)
      os << fmt_double(p.x) << ',' << fmt_double(p.y) << '\n';
  }
  const double rel = std::abs(demo.weighted_mean_distance - demo.truth_mean_distance) /
                     demo.truth_mean_distance;
  const double combined = std::hypot(demo.weighted_se, demo.heuristic_se);
  write_manifest(
      out, "sampler-demo", config, spec,
      {kv_line("samples", std::to_string(spec.demo_samples)), kv_line("model", spec.demo_model),
       kv_line("truth_mean_distance", fmt_double(demo.truth_mean_distance)),
       kv_line("weighted_mean_distance", fmt_double(demo.weighted_mean_distance)),
       kv_line("weighted_se", fmt_double(demo.weighted_se)),
       kv_line("heuristic_mean_distance", fmt_double(demo.heuristic_mean_distance)),
       kv_line("heuristic_se", fmt_double(demo.heuristic_se)),
       kv_line("weighted_relative_error", fmt_double(rel)),
       kv_line("heuristic_deviation_in_se",
               fmt_double(std::abs(demo.heuristic_mean_distance - demo.truth_mean_distance) /
                          combined))});
  return kOk;
}

int cmd_bench(const Options& opt)
{
  const auto config = effective_config(opt, true);
  const auto spec = parse_experiment_spec(config);
  const auto table = bench_belief_update(spec.bench_L, spec, spec.bench_repeats);
  OutputDir out(opt.out_dir, spec);
  {
    auto os = out.open("bench.csv");
    os << "L,is_seconds,ais_seconds\n";
    for (const auto& r : table.rows)
      os << r.particles << ',' << fmt_double(r.is_seconds) << ',' << fmt_double(r.ais_seconds)
         << '\n';
  }
  write_manifest(out, "bench", config, spec,
                 {kv_line("agent", std::to_string(table.agent)),
                  kv_line("neighbors", std::to_string(table.neighbors)),
                  kv_line("is_slope", fmt_fixed(table.is_slope, 3)),
                  kv_line("ais_slope", fmt_fixed(table.ais_slope, 3))});
  std::cout << "is_slope=" << fmt_fixed(table.is_slope, 3)
            << " ais_slope=" << fmt_fixed(table.ais_slope, 3) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"RSS cooperative localization with unknown path loss exponent"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_path, "Experiment spec file (key = value lines)");
    sub->add_option("--out", opt.out_dir, "Output directory");
    sub->add_option("--seed", opt.seed, "Master seed (overrides the spec)");
    sub->add_option("--set", opt.sets, "Override a spec key, key=value (repeatable)");
    sub->add_option("--algorithm", opt.algorithm, "bp-is, bp-ais, spawn-is or spawn-ais")
        ->check(CLI::IsMember({"bp-is", "bp-ais", "spawn-is", "spawn-ais"}));
  };
  auto* simulate = app.add_subcommand("simulate", "Write a geometry and synthetic measurements");
  auto* localize = app.add_subcommand("localize", "Run the engine on one dataset");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo parameter sweep");
  auto* demo = app.add_subcommand("sampler-demo", "Weighted vs heuristic polar sampler");
  auto* bench = app.add_subcommand("bench", "Belief update timing table");
  for (auto* s : {simulate, localize, sweep, demo, bench})
    add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kUsage, "usage", e.what());
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(opt);
    if (localize->parsed())
      return cmd_localize(opt);
    if (sweep->parsed())
      return cmd_sweep(opt);
    if (demo->parsed())
      return cmd_sampler_demo(opt);
    if (bench->parsed())
      return cmd_bench(opt);
  } catch (const MissingFileError& e) {
    return fail(kMissingFile, "missing_file", e.what());
  } catch (const ConfigError& e) {
    return fail(kMalformedSpec, "malformed_spec", e.what());
  } catch (const std::exception& e) {
    return fail(kRuntime, "runtime", e.what());
  }
  return fail(kUsage, "usage", "no verb given");
}
