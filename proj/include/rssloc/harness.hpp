#pragma once

// Bundled layouts, experiment specs, Monte Carlo execution and the belief
// update timing benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include "rssloc/belief.hpp"
#include "rssloc/estimator.hpp"
#include "rssloc/io.hpp"
#include "rssloc/msgpass.hpp"
#include "rssloc/random.hpp"
#include "rssloc/rss_model.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

/// Agent coordinates of the all-inside-hull evaluation layout.
inline const std::vector<Position>& network2_agent_positions()
{
  static const std::vector<Position> agents = {
      {8.318573, 12.067195},  {7.000000, 28.000000},  {10.985717, 2.504516},
      {15.000000, 33.000000}, {14.071792, 18.409607}, {18.502847, 3.062930},
      {20.322322, 31.614010}, {20.671522, 13.566139}, {28.442789, 24.064806},
      {28.936394, 9.749019}};
  return agents;
}

/// Anchors at the four corners of the rectangle plus its centre.
inline std::vector<Position> corner_center_anchors(const Rect& r)
{
  return {{r.x_min, r.y_min},
          {r.x_max, r.y_min},
          {r.x_min, r.y_max},
          {r.x_max, r.y_max},
          {0.5 * (r.x_min + r.x_max), 0.5 * (r.y_min + r.y_max)}};
}

/// Agents take ids 1..n, anchors follow.
inline NetworkGeometry make_geometry(const std::vector<Position>& agents,
                                     const std::vector<Position>& anchors, double comm_range)
{
  std::vector<Node> nodes;
  NodeId id = 1;
  for (const auto& p : agents)
    nodes.push_back({id++, NodeRole::agent, p});
  for (const auto& p : anchors)
    nodes.push_back({id++, NodeRole::anchor, p});
  return NetworkGeometry(std::move(nodes), comm_range);
}

/// Uniform agents; n_anchors == 5 puts anchors on the corners and centre,
/// any other count draws them uniformly.
inline NetworkGeometry generate_random_network(Rng& rng, int n_agents, int n_anchors,
                                               const Rect& rect, double comm_range = 20.0)
{
  if (n_agents < 1 || n_anchors < 1)
    throw ConfigError("random network needs at least one agent and one anchor");
  if (rect.degenerate())
    throw ConfigError("random network rectangle is degenerate");
  std::uniform_real_distribution<double> ux(rect.x_min, rect.x_max);
  std::uniform_real_distribution<double> uy(rect.y_min, rect.y_max);
  std::vector<Position> agents(static_cast<std::size_t>(n_agents));
  for (auto& a : agents)
    a = {ux(rng), uy(rng)};
  std::vector<Position> anchors;
  if (n_anchors == 5) {
    anchors = corner_center_anchors(rect);
  } else {
    anchors.resize(static_cast<std::size_t>(n_anchors));
    for (auto& a : anchors)
      a = {ux(rng), uy(rng)};
  }
  return make_geometry(agents, anchors, comm_range);
}

/// Reconstruction of a layout with agents outside the anchor hull: anchors on
/// the corners and centre of [7, 28]^2, seven agents inside that square and
/// three in the band between it and [0, 35]^2.
inline NetworkGeometry network1_like(double comm_range)
{
  const Rect inner{7.0, 7.0, 28.0, 28.0};
  Rng rng = make_stream(1, StreamPurpose::geometry, {1});
  std::uniform_real_distribution<double> u_inner(inner.x_min, inner.x_max);
  std::uniform_real_distribution<double> u_outer(0.0, 35.0);
  std::vector<Position> agents;
  for (int k = 0; k < 7; ++k)
    agents.push_back({u_inner(rng), u_inner(rng)});
  while (agents.size() < 10) {
    const Position p{u_outer(rng), u_outer(rng)};
    if (!inner.contains(p))
      agents.push_back(p);
  }
  return make_geometry(agents, corner_center_anchors(inner), comm_range);
}

inline NetworkGeometry load_bundled_network(const std::string& name, double comm_range = 20.0)
{
  if (name == "network2_agents" || name == "network2")
    return make_geometry(network2_agent_positions(), corner_center_anchors({0, 0, 35, 35}),
                         comm_range);
  if (name == "network1_like")
    return network1_like(comm_range);
  if (name == "demo_random") {
    Rng rng = make_stream(7, StreamPurpose::geometry, {2});
    return generate_random_network(rng, 10, 5, {0, 0, 35, 35}, comm_range);
  }
  throw ConfigError("unknown bundled network '" + name + "'");
}

/// True when p lies inside or on the convex polygon spanned by pts.
inline bool inside_convex_hull(const std::vector<Position>& pts, Position p)
{
  std::vector<Position> h = pts;
  std::sort(h.begin(), h.end(), [](Position a, Position b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  auto cross = [](Position o, Position a, Position b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<Position> hull(2 * h.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], h[i]) <= 0)
      --k;
    hull[k++] = h[i];
  }
  for (std::size_t i = h.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], h[i]) <= 0)
      --k;
    hull[k++] = h[i];
  }
  hull.resize(k - 1);
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (cross(hull[i], hull[(i + 1) % hull.size()], p) < 0)
      return false;
  return true;
}

enum class SweepAxis { none, alpha_true, comm_range, sigma };

inline const char* to_string(SweepAxis a)
{
  switch (a) {
  case SweepAxis::alpha_true: return "alpha_true";
  case SweepAxis::comm_range: return "comm_range";
  case SweepAxis::sigma: return "sigma";
  default: return "none";
  }
}

/// Every recognised spec key with its default value (the evaluation preset).
inline KeyValues default_spec()
{
  KeyValues kv;
  kv.set("network", "network2");
  kv.set("network_file", "");
  kv.set("measurements_file", "");
  kv.set("algorithm", "spawn-ais");
  kv.set("L", "1000");
  kv.set("R", "100");
  kv.set("n_max", "10");
  kv.set("seed", "1");
  kv.set("runs", "100");
  kv.set("sigma", "3");
  kv.set("comm_range", "20");
  kv.set("alpha_true", "3.5");
  kv.set("alpha_prior_lo", "1.5");
  kv.set("alpha_prior_hi", "6");
  kv.set("ref_power", "-30");
  kv.set("d0", "1");
  kv.set("sweep.axis", "none");
  kv.set("sweep.values", "");
  kv.set("is_proposal", "mixture");
  kv.set("schedule", "sequential");
  kv.set("threads", "1");
  kv.set("random.agents", "10");
  kv.set("random.anchors", "5");
  kv.set("random.size", "35");
  kv.set("report_timings", "false");
  kv.set("bench.L", "250,500,1000,2000");
  kv.set("bench.repeats", "3");
  kv.set("demo.samples", "10000");
  kv.set("demo.model", "uniform");
  kv.set("demo.grid", "201");
  return kv;
}

/// `1,2,3`, `1..6` or `{1..6}`; integer ranges use unit steps.
inline std::vector<double> parse_value_list(const std::string& text, const std::string& what)
{
  std::string t = trim(text);
  if (!t.empty() && t.front() == '{' && t.back() == '}')
    t = trim(t.substr(1, t.size() - 2));
  std::vector<double> out;
  if (t.empty())
    return out;
  if (const auto dots = t.find(".."); dots != std::string::npos) {
    const auto lo = parse_int(trim(t.substr(0, dots)), what);
    const auto hi = parse_int(trim(t.substr(dots + 2)), what);
    if (hi < lo)
      throw ConfigError(what + ": empty range");
    for (auto v = lo; v <= hi; ++v)
      out.push_back(static_cast<double>(v));
    return out;
  }
  for (const auto& f : split(t, ','))
    out.push_back(parse_double(f, what));
  return out;
}

struct ExperimentSpec
{
  std::string network = "network2";
  std::string network_file;
  std::string measurements_file;
  int random_agents = 10;
  int random_anchors = 5;
  double random_size = 35.0;

  ChannelParams channel;
  double comm_range = 20.0;
  double alpha_true = 3.5;
  double alpha_prior_lo = 1.5;
  double alpha_prior_hi = 6.0;
  EngineConfig engine;
  int runs = 100;
  SweepAxis sweep_axis = SweepAxis::none;
  std::vector<double> sweep_values;
  bool report_timings = false;

  std::vector<std::size_t> bench_L;
  int bench_repeats = 3;
  std::size_t demo_samples = 10000;
  std::string demo_model = "uniform";
  std::size_t demo_grid = 201;

  std::string config_hash;  ///< hash of the effective key-value document
};

inline void apply_algorithm(EngineConfig& cfg, const std::string& name)
{
  if (name == "bp-is" || name == "bp-ais")
    cfg.rule = MessageRule::bp;
  else if (name == "spawn-is" || name == "spawn-ais")
    cfg.rule = MessageRule::spawn;
  else
    throw ConfigError("unknown algorithm '" + name + "'");
  cfg.sampler = name.ends_with("-ais") ? BeliefSampler::ais : BeliefSampler::is;
}

inline std::string algorithm_name(const EngineConfig& cfg)
{
  return std::string(to_string(cfg.rule)) + "-" + to_string(cfg.sampler);
}

/// Typed view of an effective key-value document; unknown keys are rejected.
inline ExperimentSpec parse_experiment_spec(const KeyValues& kv)
{
  const KeyValues defaults = default_spec();
  for (const auto& [k, v] : kv.values())
    if (!defaults.has(k))
      throw ConfigError("unknown spec key '" + k + "'");
  auto get = [&](const std::string& k) { return kv.get(k, defaults.get(k, "")); };

  ExperimentSpec s;
  s.network = get("network");
  s.network_file = get("network_file");
  s.measurements_file = get("measurements_file");
  s.random_agents = static_cast<int>(parse_int(get("random.agents"), "random.agents"));
  s.random_anchors = static_cast<int>(parse_int(get("random.anchors"), "random.anchors"));
  s.random_size = parse_double(get("random.size"), "random.size");

  s.channel.noise_std = parse_double(get("sigma"), "sigma");
  s.channel.ref_power_dbm = parse_double(get("ref_power"), "ref_power");
  s.channel.ref_distance = parse_double(get("d0"), "d0");
  s.channel.validate();
  s.comm_range = parse_double(get("comm_range"), "comm_range");
  s.alpha_true = parse_double(get("alpha_true"), "alpha_true");
  s.alpha_prior_lo = parse_double(get("alpha_prior_lo"), "alpha_prior_lo");
  s.alpha_prior_hi = parse_double(get("alpha_prior_hi"), "alpha_prior_hi");
  if (!(s.alpha_true > 0.0) || !(s.alpha_prior_lo > 0.0) || !(s.alpha_prior_hi > s.alpha_prior_lo))
    throw ConfigError("alpha settings must satisfy 0 < alpha_prior_lo < alpha_prior_hi");

  apply_algorithm(s.engine, get("algorithm"));
  s.engine.particles = static_cast<std::size_t>(parse_int(get("L"), "L"));
  s.engine.grid_points = static_cast<std::size_t>(parse_int(get("R"), "R"));
  s.engine.max_iterations = static_cast<int>(parse_int(get("n_max"), "n_max"));
  s.engine.seed = parse_u64(get("seed"), "seed");
  const auto prop = get("is_proposal");
  if (prop == "mixture")
    s.engine.is_proposal = IsProposal::mixture;
  else if (prop == "prior")
    s.engine.is_proposal = IsProposal::prior;
  else
    throw ConfigError("is_proposal must be mixture or prior");
  const auto sched = get("schedule");
  if (sched == "sequential")
    s.engine.schedule = Schedule::sequential;
  else if (sched == "synchronous")
    s.engine.schedule = Schedule::synchronous;
  else
    throw ConfigError("schedule must be sequential or synchronous");
  s.engine.threads = static_cast<unsigned>(parse_int(get("threads"), "threads"));
  s.engine.validate();

  s.runs = static_cast<int>(parse_int(get("runs"), "runs"));
  if (s.runs < 1)
    throw ConfigError("runs must be at least 1");

  const auto axis = get("sweep.axis");
  if (axis == "none")
    s.sweep_axis = SweepAxis::none;
  else if (axis == "alpha_true")
    s.sweep_axis = SweepAxis::alpha_true;
  else if (axis == "comm_range")
    s.sweep_axis = SweepAxis::comm_range;
  else if (axis == "sigma")
    s.sweep_axis = SweepAxis::sigma;
  else
    throw ConfigError("sweep.axis must be none, alpha_true, comm_range or sigma");
  s.sweep_values = parse_value_list(get("sweep.values"), "sweep.values");
  if (s.sweep_axis != SweepAxis::none) {
    if (s.sweep_values.empty())
      throw ConfigError("sweep.values must be non-empty");
    if (!std::is_sorted(s.sweep_values.begin(), s.sweep_values.end()))
      throw ConfigError("sweep.values must be sorted");
  }

  const auto rt = get("report_timings");
  if (rt != "true" && rt != "false")
    throw ConfigError("report_timings must be true or false");
  s.report_timings = rt == "true";

  for (double v : parse_value_list(get("bench.L"), "bench.L"))
    s.bench_L.push_back(static_cast<std::size_t>(v));
  s.bench_repeats = static_cast<int>(parse_int(get("bench.repeats"), "bench.repeats"));
  s.demo_samples = static_cast<std::size_t>(parse_int(get("demo.samples"), "demo.samples"));
  s.demo_model = get("demo.model");
  if (s.demo_model != "uniform" && s.demo_model != "rss")
    throw ConfigError("demo.model must be uniform or rss");
  s.demo_grid = static_cast<std::size_t>(parse_int(get("demo.grid"), "demo.grid"));

  KeyValues effective = defaults;
  for (const auto& [k, v] : kv.values())
    effective.set(k, v);
  s.config_hash = effective.hash();
  return s;
}

inline NetworkGeometry build_geometry(const ExperimentSpec& spec)
{
  if (!spec.network_file.empty())
    return parse_network(read_file(spec.network_file), spec.comm_range);
  if (spec.network == "random") {
    Rng rng = make_stream(spec.engine.seed, StreamPurpose::geometry);
    return generate_random_network(rng, spec.random_agents, spec.random_anchors,
                                   {0, 0, spec.random_size, spec.random_size}, spec.comm_range);
  }
  return load_bundled_network(spec.network, spec.comm_range);
}

inline Priors default_priors(const NetworkGeometry& g, double alpha_lo, double alpha_hi)
{
  return {g.bounding_box(), alpha_lo, alpha_hi, {}};
}

/// Seed of the k-th Monte Carlo run under a master seed.
inline std::uint64_t run_seed(std::uint64_t master, int k)
{
  return splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(k) + 1));
}

/// KDE mode of every agent belief, agents in ascending id.
inline std::vector<Position> position_estimates(const Problem& problem,
                                                const IterationSnapshot& snap)
{
  std::vector<Position> out;
  for (NodeId id : problem.agents())
    out.push_back(kde_mode(snap.beliefs[problem.index(id)].samples));
  return out;
}

inline std::vector<Position> agent_truths(const Problem& problem)
{
  std::vector<Position> out;
  for (NodeId id : problem.agents())
    out.push_back(problem.geometry().node(id).position);
  return out;
}

inline double position_rmse(const std::vector<Position>& est, const std::vector<Position>& truth)
{
  double acc = 0.0;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const double dx = est[k].x - truth[k].x, dy = est[k].y - truth[k].y;
    acc += dx * dx + dy * dy;
  }
  return est.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(est.size()));
}

struct SingleRun
{
  std::uint64_t seed = 0;
  RunEstimates estimates;
  std::vector<Position> truths;
  int divergences = 0;
  double seconds = 0.0;
};

/// Synthesizes measurements for one seed, runs the engine, extracts estimates.
inline SingleRun run_single(const ExperimentSpec& spec, const NetworkGeometry& geometry,
                            std::uint64_t seed)
{
  const auto t0 = std::chrono::steady_clock::now();
  Rng meas_rng = make_stream(seed, StreamPurpose::measurements);
  auto ms = synthesize_measurements(meas_rng, geometry, spec.channel, spec.alpha_true);
  Problem problem(geometry, spec.channel, std::move(ms),
                  default_priors(geometry, spec.alpha_prior_lo, spec.alpha_prior_hi));
  EngineConfig cfg = spec.engine;
  cfg.seed = seed;
  Engine engine(problem, cfg);
  Diagnostics diag;
  for (int n = 0; n < cfg.max_iterations; ++n)
    engine.step(diag);
  IterationSnapshot last{engine.state().iteration, engine.state().beliefs, engine.state().alpha};

  SingleRun out;
  out.seed = seed;
  out.estimates.alpha = alpha_point_estimate(last.alpha).value;
  out.estimates.positions = position_estimates(problem, last);
  out.truths = agent_truths(problem);
  out.divergences = diag.divergences;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct SweepRow
{
  double value = 0.0;
  RunMetrics metrics;
  int runs = 0;
  int divergences = 0;
  double seconds = 0.0;
  std::vector<SingleRun> details;
};

inline ExperimentSpec with_sweep_value(ExperimentSpec spec, double v)
{
  switch (spec.sweep_axis) {
  case SweepAxis::alpha_true: spec.alpha_true = v; break;
  case SweepAxis::comm_range: spec.comm_range = v; break;
  case SweepAxis::sigma: spec.channel.noise_std = v; break;
  default: break;
  }
  return spec;
}

/// Runs every (sweep value, Monte Carlo seed) pair. Runs are independent and may
/// execute on `threads` workers; results are reduced in (value, seed) order.
inline std::vector<SweepRow> run_experiment(const ExperimentSpec& spec)
{
  std::vector<double> values = spec.sweep_values;
  if (spec.sweep_axis == SweepAxis::none)
    values = {0.0};

  std::vector<SweepRow> rows;
  for (double v : values) {
    const ExperimentSpec local = with_sweep_value(spec, v);
    const NetworkGeometry geometry = build_geometry(local);
    std::vector<SingleRun> runs(static_cast<std::size_t>(spec.runs));
    unsigned workers = std::max(1u, spec.engine.threads);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(runs.size()));
    std::vector<std::future<void>> jobs;
    for (unsigned w = 0; w < workers; ++w)
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t k = w; k < runs.size(); k += workers)
          runs[k] = run_single(local, geometry, run_seed(spec.engine.seed, static_cast<int>(k)));
      }));
    for (auto& j : jobs)
      j.get();

    SweepRow row;
    row.value = spec.sweep_axis == SweepAxis::none ? 0.0 : v;
    row.runs = spec.runs;
    std::vector<RunEstimates> est;
    for (const auto& r : runs) {
      est.push_back(r.estimates);
      row.divergences += r.divergences;
      row.seconds += r.seconds;
    }
    row.metrics = compute_metrics(est, local.alpha_true, runs.front().truths);
    row.details = std::move(runs);
    rows.push_back(std::move(row));
  }
  return rows;
}

struct BenchRow
{
  std::size_t particles = 0;
  double is_seconds = 0.0;   ///< median wall clock of one IS belief update
  double ais_seconds = 0.0;  ///< median wall clock of one AIS belief update
};

struct BenchTable
{
  std::vector<BenchRow> rows;
  double is_slope = 0.0;
  double ais_slope = 0.0;
  NodeId agent = 0;
  std::size_t neighbors = 0;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lx = std::log(x[k]), ly = std::log(y[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Median wall clock of IS and AIS belief updates of one agent on a fixed
/// instance (Network II, messages taken after one SPAWN iteration), per L.
inline BenchTable bench_belief_update(const std::vector<std::size_t>& particle_counts,
                                      const ExperimentSpec& spec, int repeats = 3)
{
  if (particle_counts.size() < 3)
    throw ConfigError("bench needs at least three particle counts");
  const NetworkGeometry geometry = build_geometry(spec);
  Rng meas_rng = make_stream(spec.engine.seed, StreamPurpose::measurements);
  auto ms = synthesize_measurements(meas_rng, geometry, spec.channel, spec.alpha_true);
  const Problem problem(geometry, spec.channel, std::move(ms),
                        default_priors(geometry, spec.alpha_prior_lo, spec.alpha_prior_hi));

  BenchTable table;
  for (NodeId id : problem.agents())
    if (problem.neighbors(id).size() > table.neighbors) {
      table.neighbors = problem.neighbors(id).size();
      table.agent = id;
    }
  if (table.neighbors == 0)
    throw ConfigError("bench instance has no connected agent");

  using clock = std::chrono::steady_clock;
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  std::vector<double> xs, is_t, ais_t;
  for (std::size_t L : particle_counts) {
    EngineConfig cfg = spec.engine;
    cfg.particles = L;
    cfg.rule = MessageRule::spawn;
    cfg.max_iterations = 1;
    Engine engine(problem, cfg);
    Diagnostics diag;
    engine.step(diag);
    const EngineState& st = engine.state();
    IncomingMessages incoming;
    for (NodeId j : problem.neighbors(table.agent))
      incoming.push_back(&st.position_messages.at({table.agent, j}));
    const ParticleBelief& prev = st.belief(problem, table.agent);

    std::vector<double> ti, ta;
    for (int rep = 0; rep < std::max(1, repeats); ++rep) {
      Rng rng = make_stream(spec.engine.seed, StreamPurpose::bench,
                            {static_cast<std::uint64_t>(L), static_cast<std::uint64_t>(rep)});
      auto t0 = clock::now();
      auto b1 = update_position_belief_is(rng, problem.priors(), prev, incoming,
                                          IsProposal::mixture);
      ti.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      // AIS is fast at small L; average several calls per sample
      int inner = 0;
      t0 = clock::now();
      double elapsed = 0.0;
      do {
        auto b2 = update_position_belief_ais(rng, problem.priors(), prev, incoming);
        ++inner;
        elapsed = std::chrono::duration<double>(clock::now() - t0).count();
      } while (elapsed < 0.05 && inner < 1000);
      ta.push_back(elapsed / inner);
      (void)b1;
    }
    table.rows.push_back({L, median(ti), median(ta)});
    xs.push_back(static_cast<double>(L));
    is_t.push_back(table.rows.back().is_seconds);
    ais_t.push_back(table.rows.back().ais_seconds);
  }
  table.is_slope = loglog_slope(xs, is_t);
  table.ais_slope = loglog_slope(xs, ais_t);
  return table;
}

}  // namespace rssloc
