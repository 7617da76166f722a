#pragma once

// Message passing over the RSS factor graph. Positions carry L equally weighted
// particles, the path loss exponent a belief on R grid points. Messages follow
// either the BP rule (with previous-iteration denominators) or the SPAWN rule
// (denominators dropped); position beliefs are resampled from the product of
// incoming mixtures by plain importance sampling (IS) or by the auxiliary
// importance sampler (AIS) that draws one mixture label per neighbor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "rssloc/belief.hpp"
#include "rssloc/nlsampler.hpp"
#include "rssloc/random.hpp"
#include "rssloc/rss_model.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

enum class MessageRule { bp, spawn };
enum class BeliefSampler { is, ais };
enum class IsProposal { prior, mixture };
enum class Schedule { sequential, synchronous };

inline const char* to_string(MessageRule r) { return r == MessageRule::bp ? "bp" : "spawn"; }
inline const char* to_string(BeliefSampler s) { return s == BeliefSampler::is ? "is" : "ais"; }
inline const char* to_string(IsProposal p) { return p == IsProposal::prior ? "prior" : "mixture"; }
inline const char* to_string(Schedule s)
{
  return s == Schedule::sequential ? "sequential" : "synchronous";
}

struct EngineConfig
{
  MessageRule rule = MessageRule::spawn;
  BeliefSampler sampler = BeliefSampler::ais;
  std::size_t particles = 1000;
  std::size_t grid_points = 100;
  int max_iterations = 10;
  std::uint64_t seed = 1;
  IsProposal is_proposal = IsProposal::mixture;
  Schedule schedule = Schedule::sequential;
  unsigned threads = 0;  ///< synchronous mode only; 0 = hardware concurrency

  void validate() const
  {
    if (particles < 2)
      throw ConfigError("L must be at least 2");
    if (grid_points < 2)
      throw ConfigError("R must be at least 2");
    if (max_iterations < 1)
      throw ConfigError("n_max must be at least 1");
  }
};

using EdgeKey = std::pair<NodeId, NodeId>;  // (lower id, higher id)
using DirectedKey = std::pair<NodeId, NodeId>;  // (target, source)

inline EdgeKey edge_key(NodeId a, NodeId b) { return {std::min(a, b), std::max(a, b)}; }

/// Immutable inputs of one localization problem.
class Problem
{
public:
  Problem(NetworkGeometry geometry, ChannelParams channel, MeasurementSet measurements,
          Priors priors)
    : geometry_(std::move(geometry)), channel_(std::move(channel)),
      measurements_(std::move(measurements)), priors_(std::move(priors))
  {
    channel_.validate();
    validate_measurements(measurements_, geometry_);
    if (priors_.position.degenerate())
      throw ConfigError("position prior rectangle is empty");
    neighbors_ = neighbor_sets(measurements_);
    for (const auto& m : measurements_.edges)
      edges_[edge_key(m.i, m.j)] = edge_channel(m, channel_);
    for (std::size_t k = 0; k < geometry_.size(); ++k)
      index_[geometry_.nodes()[k].id] = k;
  }

  const NetworkGeometry& geometry() const { return geometry_; }
  const ChannelParams& channel() const { return channel_; }
  const MeasurementSet& measurements() const { return measurements_; }
  const Priors& priors() const { return priors_; }
  const NeighborSets& neighbors() const { return neighbors_; }
  const std::vector<NodeId>& neighbors(NodeId id) const { return neighbors_.neighbors(id); }

  const EdgeChannel& edge(NodeId a, NodeId b) const { return edges_.at(edge_key(a, b)); }
  std::size_t index(NodeId id) const { return index_.at(id); }
  bool is_anchor(NodeId id) const { return geometry_.nodes()[index(id)].role == NodeRole::anchor; }

  /// Agent ids in ascending order.
  std::vector<NodeId> agents() const
  {
    auto ids = geometry_.agent_ids();
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  /// The agent that computes m_ij(alpha) for edge (i, j) while visiting i.
  bool owns_alpha_message(NodeId agent, NodeId neighbor) const
  {
    return is_anchor(neighbor) || neighbor > agent;
  }

private:
  NetworkGeometry geometry_;
  ChannelParams channel_;
  MeasurementSet measurements_;
  Priors priors_;
  NeighborSets neighbors_;
  std::map<EdgeKey, EdgeChannel> edges_;
  std::map<NodeId, std::size_t> index_;
};

struct EngineState
{
  int iteration = 0;
  std::vector<ParticleBelief> beliefs;  ///< geometry order
  AlphaGridBelief alpha;
  std::map<EdgeKey, AlphaMessage> alpha_messages;
  std::map<DirectedKey, PositionMessage> position_messages;
  /// Messages of the previous iteration, read by the BP denominators.
  std::map<EdgeKey, AlphaMessage> prev_alpha_messages;
  std::map<DirectedKey, PositionMessage> prev_position_messages;

  const ParticleBelief& belief(const Problem& p, NodeId id) const { return beliefs[p.index(id)]; }
};

struct Diagnostics
{
  int divergences = 0;  ///< belief updates that kept the previous belief
  int fallbacks = 0;    ///< weight vectors replaced by uniform weights
  std::vector<std::string> events;

  void note(std::string what, bool divergence)
  {
    (divergence ? divergences : fallbacks) += 1;
    events.push_back(std::move(what));
  }
};

inline EngineState initial_state(const Problem& problem, const EngineConfig& config)
{
  config.validate();
  Rng rng = make_stream(config.seed, StreamPurpose::init);
  auto init = init_beliefs(rng, problem.geometry(), problem.priors(), config.particles,
                           config.grid_points);
  EngineState s;
  s.beliefs = std::move(init.positions);
  s.alpha = std::move(init.alpha);
  return s;
}

namespace detail {

inline double log_prev_position_message(const EngineState& s, NodeId target, NodeId source,
                                        Position x)
{
  auto it = s.prev_position_messages.find({target, source});
  return it == s.prev_position_messages.end() ? 0.0 : log_evaluate_position_message(it->second, x);
}

inline double log_prev_alpha_message(const EngineState& s, EdgeKey edge, std::size_t r)
{
  auto it = s.prev_alpha_messages.find(edge);
  if (it == s.prev_alpha_messages.end())
    return 0.0;
  return std::log(std::max(it->second.values[r], kDensityFloor));
}

}  // namespace detail

/// m_ij(alpha) on the grid from paired samples of B(x_i) and B(x_j).
/// BP weights are 1 / (m_ij(x_i^l) m_ij(x_j^l)) with previous-iteration messages,
/// SPAWN weights are uniform.
inline AlphaMessage update_alpha_message(const Problem& problem, const EngineState& state,
                                         MessageRule rule, NodeId i, NodeId j,
                                         Diagnostics* diag = nullptr)
{
  const auto& xi = state.belief(problem, i).samples;
  const auto& xj = state.belief(problem, j).samples;
  const std::size_t L = std::min(xi.size(), xj.size());
  const auto& grid = state.alpha.grid;
  const EdgeChannel& ch = problem.edge(i, j);

  std::vector<double> log_w(L, 0.0);
  if (rule == MessageRule::bp)
    for (std::size_t l = 0; l < L; ++l)
      log_w[l] = -detail::log_prev_position_message(state, i, j, xi[l]) -
                 detail::log_prev_position_message(state, j, i, xj[l]);
  std::vector<double> w;
  if (!normalize_log_weights(log_w, w) && diag)
    diag->note("alpha message " + std::to_string(i) + "-" + std::to_string(j) +
                   ": weights underflow, uniform used",
               false);
  for (std::size_t l = 0; l < L; ++l)
    log_w[l] = std::log(w[l]);

  // residual(l, r) = (r - A) + alpha_r * g_l with g_l = 10 log10(d_l / d0)
  std::vector<double> g(L);
  for (std::size_t l = 0; l < L; ++l)
    g[l] = 10.0 * std::log10(std::max(distance(xi[l], xj[l]), kMinDistance) / ch.ref_distance);
  const double offset = ch.rss_dbm - ch.ref_power_dbm;
  const double inv_var = 1.0 / (ch.sigma * ch.sigma);

  std::vector<double> log_m(grid.size());
  std::vector<double> terms(L);
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t l = 0; l < L; ++l) {
      const double res = offset + grid[r] * g[l];
      terms[l] = log_w[l] - 0.5 * res * res * inv_var;
    }
    log_m[r] = log_sum_exp(terms);
  }
  AlphaMessage msg;
  if (!normalize_log_weights(log_m, msg.values) && diag)
    diag->note("alpha message " + std::to_string(i) + "-" + std::to_string(j) +
                   ": all grid values underflow, uniform used",
               false);
  return msg;
}

/// m_ij(x_i) as a normalized mixture of normalized likelihoods centred on the
/// samples of B(x_j), each with its own alpha drawn from B(alpha).
inline PositionMessage update_position_message(const Problem& problem, const EngineState& state,
                                               MessageRule rule, NodeId i, NodeId j, Rng& rng,
                                               Diagnostics* diag = nullptr)
{
  const auto& xj = state.belief(problem, j).samples;
  const std::size_t L = xj.size();
  const auto& grid = state.alpha.grid;

  PositionMessage msg;
  msg.target = i;
  msg.source = j;
  msg.channel = problem.edge(i, j);
  msg.components.resize(L);

  CategoricalSampler alpha_sampler(state.alpha.masses);
  std::vector<double> log_w(L, 0.0);
  for (std::size_t l = 0; l < L; ++l) {
    auto& c = msg.components[l];
    c.neighbor_sample = xj[l];
    c.alpha_index = alpha_sampler(rng);
    c.alpha = grid[c.alpha_index];
    c.log_z = log_normalizer_z(msg.channel, c.alpha);
    if (rule == MessageRule::bp)
      log_w[l] = -detail::log_prev_position_message(state, j, i, xj[l]) -
                 detail::log_prev_alpha_message(state, edge_key(i, j), c.alpha_index);
    log_w[l] += c.log_z;
  }
  std::vector<double> w;
  if (!normalize_log_weights(log_w, w) && diag)
    diag->note("position message " + std::to_string(j) + "->" + std::to_string(i) +
                   ": weights underflow, uniform used",
               false);
  for (std::size_t l = 0; l < L; ++l)
    msg.components[l].weight = w[l];
  return msg;
}

/// B(alpha) proportional to prior(alpha) times all edge messages, on the grid.
inline AlphaGridBelief update_alpha_belief(const AlphaGridBelief& prior,
                                           const std::vector<const AlphaMessage*>& messages,
                                           Diagnostics* diag = nullptr)
{
  std::vector<double> log_b(prior.size());
  for (std::size_t r = 0; r < prior.size(); ++r) {
    double acc = prior.masses[r] > 0.0 ? std::log(prior.masses[r]) : kNegInf;
    for (const AlphaMessage* m : messages)
      acc += m->values[r] > 0.0 ? std::log(m->values[r]) : kNegInf;
    log_b[r] = acc;
  }
  AlphaGridBelief out{prior.grid, {}};
  if (!normalize_log_weights(log_b, out.masses) && diag)
    diag->note("alpha belief: product vanished, uniform used", false);
  return out;
}

inline AlphaGridBelief update_alpha_belief(const AlphaGridBelief& prior, const EngineState& state,
                                           Diagnostics* diag = nullptr)
{
  std::vector<const AlphaMessage*> msgs;
  for (const auto& [key, m] : state.alpha_messages)
    msgs.push_back(&m);
  return update_alpha_belief(prior, msgs, diag);
}

/// Incoming position messages of an agent, one per neighbor in ascending order.
using IncomingMessages = std::vector<const PositionMessage*>;

namespace detail {

inline ParticleBelief resample_or_keep(Rng& rng, const ParticleBelief& previous,
                                       const std::vector<Position>& draws,
                                       const std::vector<double>& log_w, const char* tag,
                                       Diagnostics* diag)
{
  std::vector<double> w;
  if (!normalize_log_weights(log_w, w)) {
    if (diag)
      diag->note(std::string(tag) + " update of node " + std::to_string(previous.owner) +
                     ": all weights zero, previous belief kept",
                 true);
    return previous;
  }
  auto res = resample_systematic(rng, draws, w);
  return {previous.owner, std::move(res.samples)};
}

}  // namespace detail

/// Importance sampling from prior(x) * prod_j m_ij(x). Proposal is either the
/// prior rectangle or the evenly weighted mixture of the incoming messages (drawn
/// component-wise with sample_polar). Cost O(|Gamma_i| L^2).
inline ParticleBelief update_position_belief_is(Rng& rng, const Priors& priors,
                                                const ParticleBelief& previous,
                                                const IncomingMessages& incoming,
                                                IsProposal proposal, Diagnostics* diag = nullptr)
{
  if (incoming.empty())
    return previous;
  const std::size_t L = previous.size();
  const double log_J = std::log(static_cast<double>(incoming.size()));

  std::vector<CategoricalSampler> labels;
  if (proposal == IsProposal::mixture) {
    for (const auto* m : incoming) {
      std::vector<double> w(m->components.size());
      for (std::size_t l = 0; l < w.size(); ++l)
        w[l] = m->components[l].weight;
      labels.emplace_back(w);
    }
  }

  std::vector<Position> draws(L);
  std::uniform_real_distribution<double> ux(priors.position.x_min, priors.position.x_max);
  std::uniform_real_distribution<double> uy(priors.position.y_min, priors.position.y_max);
  std::uniform_int_distribution<std::size_t> pick(0, incoming.size() - 1);
  for (auto& x : draws) {
    if (proposal == IsProposal::prior) {
      x = {ux(rng), uy(rng)};
    } else {
      const std::size_t j = pick(rng);
      const auto& c = incoming[j]->components[labels[j](rng)];
      x = sample_polar(rng, incoming[j]->channel, c.alpha, c.neighbor_sample);
    }
  }

  std::vector<double> log_w(L);
  std::vector<double> q_terms;
  for (std::size_t l = 0; l < L; ++l) {
    const Position x = draws[l];
    double lw = priors.log_position_prior(x);
    if (lw == kNegInf) {
      log_w[l] = kNegInf;
      continue;
    }
    for (const auto* m : incoming)
      lw += log_evaluate_position_message(*m, x);
    if (proposal == IsProposal::prior) {
      lw += std::log(priors.position.area());
    } else {
      q_terms.clear();
      for (const auto* m : incoming)
        for (const auto& c : m->components)
          if (c.weight > 0.0)
            q_terms.push_back(std::log(c.weight) +
                              log_proposal_density(RssRangeModel{m->channel, c.alpha}, x,
                                                   c.neighbor_sample));
      lw -= log_sum_exp(q_terms) - log_J;
    }
    log_w[l] = lw;
  }
  return detail::resample_or_keep(rng, previous, draws, log_w, "IS", diag);
}

/// Auxiliary importance sampler. Per particle: one label per neighbor drawn from
/// that message's mixture weights, one neighbor picked uniformly to propose the
/// position with sample_polar, and the weight
///   prior(x) prod_j f~(r_ij | x, x_j^psi_j, alpha^psi_j) / ((1/J) sum_j q(x | psi_j)).
/// Cost O(|Gamma_i| L).
inline ParticleBelief update_position_belief_ais(Rng& rng, const Priors& priors,
                                                 const ParticleBelief& previous,
                                                 const IncomingMessages& incoming,
                                                 Diagnostics* diag = nullptr)
{
  if (incoming.empty())
    return previous;
  const std::size_t L = previous.size();
  const std::size_t J = incoming.size();
  const double log_J = std::log(static_cast<double>(J));

  std::vector<CategoricalSampler> labels;
  labels.reserve(J);
  for (const auto* m : incoming) {
    std::vector<double> w(m->components.size());
    for (std::size_t l = 0; l < w.size(); ++l)
      w[l] = m->components[l].weight;
    labels.emplace_back(w);
  }

  std::uniform_int_distribution<std::size_t> pick(0, J - 1);
  std::vector<Position> draws(L);
  std::vector<double> log_w(L);
  std::vector<std::size_t> psi(J);
  std::vector<double> q_terms(J);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t j = 0; j < J; ++j)
      psi[j] = labels[j](rng);
    const std::size_t chosen = pick(rng);
    const auto& cc = incoming[chosen]->components[psi[chosen]];
    const Position x = sample_polar(rng, incoming[chosen]->channel, cc.alpha, cc.neighbor_sample);
    draws[l] = x;

    double lw = priors.log_position_prior(x);
    if (lw == kNegInf) {
      log_w[l] = kNegInf;
      continue;
    }
    for (std::size_t j = 0; j < J; ++j) {
      const auto& m = *incoming[j];
      const auto& c = m.components[psi[j]];
      lw += log_likelihood(m.channel, x, c.neighbor_sample, c.alpha) - c.log_z;
      q_terms[j] =
          log_proposal_density(RssRangeModel{m.channel, c.alpha}, x, c.neighbor_sample);
    }
    log_w[l] = lw - (log_sum_exp(q_terms) - log_J);
  }
  return detail::resample_or_keep(rng, previous, draws, log_w, "AIS", diag);
}

struct IterationSnapshot
{
  int iteration = 0;
  std::vector<ParticleBelief> beliefs;
  AlphaGridBelief alpha;
};

struct RunResult
{
  std::vector<IterationSnapshot> history;  ///< iteration 0 (priors) .. n_max
  Diagnostics diagnostics;
  std::vector<std::string> warnings;

  const IterationSnapshot& final() const { return history.back(); }
};

/// Runs the cooperative localization iterations.
class Engine
{
public:
  Engine(const Problem& problem, EngineConfig config)
    : problem_(problem), config_(std::move(config)), state_(initial_state(problem_, config_)),
      alpha_prior_(state_.alpha)
  {
  }

  const EngineState& state() const { return state_; }
  const EngineConfig& config() const { return config_; }

  /// One full iteration: messages and beliefs of every agent, then B(alpha).
  void step(Diagnostics& diag)
  {
    const int n = ++state_.iteration;
    state_.prev_alpha_messages = state_.alpha_messages;
    state_.prev_position_messages = state_.position_messages;

    const auto agents = problem_.agents();
    if (config_.schedule == Schedule::sequential) {
      for (NodeId i : agents) {
        AgentUpdate u = update_agent(state_, i, n);
        commit(std::move(u), diag);
      }
    } else {
      const EngineState snapshot = state_;
      std::vector<AgentUpdate> updates(agents.size());
      unsigned workers = config_.threads ? config_.threads : std::thread::hardware_concurrency();
      workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(agents.size())));
      std::vector<std::future<void>> jobs;
      for (unsigned w = 0; w < workers; ++w)
        jobs.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t k = w; k < agents.size(); k += workers)
            updates[k] = update_agent(snapshot, agents[k], n);
        }));
      for (auto& job : jobs)
        job.get();
      for (auto& u : updates)
        commit(std::move(u), diag);
    }
    state_.alpha = update_alpha_belief(alpha_prior_, state_, &diag);
  }

  RunResult run()
  {
    RunResult result;
    result.warnings = problem_.measurements().warnings;
    result.history.push_back({0, state_.beliefs, state_.alpha});
    for (int n = 0; n < config_.max_iterations; ++n) {
      step(result.diagnostics);
      result.history.push_back({state_.iteration, state_.beliefs, state_.alpha});
    }
    return result;
  }

private:
  struct AgentUpdate
  {
    NodeId agent = 0;
    std::vector<std::pair<EdgeKey, AlphaMessage>> alpha_messages;
    std::vector<PositionMessage> position_messages;
    ParticleBelief belief;
    Diagnostics diag;
  };

  AgentUpdate update_agent(const EngineState& read, NodeId i, int n) const
  {
    AgentUpdate u;
    u.agent = i;
    const auto& gamma = problem_.neighbors(i);
    for (NodeId j : gamma)
      if (problem_.owns_alpha_message(i, j))
        u.alpha_messages.emplace_back(edge_key(i, j),
                                      update_alpha_message(problem_, read, config_.rule, i, j, &u.diag));
    for (NodeId j : gamma) {
      Rng rng = make_stream(config_.seed, StreamPurpose::alpha_draw,
                            {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i),
                             static_cast<std::uint64_t>(j)});
      u.position_messages.push_back(
          update_position_message(problem_, read, config_.rule, i, j, rng, &u.diag));
    }
    IncomingMessages incoming;
    for (const auto& m : u.position_messages)
      incoming.push_back(&m);
    Rng rng = make_stream(config_.seed, StreamPurpose::belief_update,
                          {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(i)});
    const auto& previous = read.belief(problem_, i);
    u.belief = config_.sampler == BeliefSampler::ais
                   ? update_position_belief_ais(rng, problem_.priors(), previous, incoming, &u.diag)
                   : update_position_belief_is(rng, problem_.priors(), previous, incoming,
                                               config_.is_proposal, &u.diag);
    return u;
  }

  void commit(AgentUpdate&& u, Diagnostics& diag)
  {
    for (auto& [key, m] : u.alpha_messages)
      state_.alpha_messages[key] = std::move(m);
    for (auto& m : u.position_messages) {
      const DirectedKey key{m.target, m.source};
      state_.position_messages[key] = std::move(m);
    }
    state_.beliefs[problem_.index(u.agent)] = std::move(u.belief);
    diag.divergences += u.diag.divergences;
    diag.fallbacks += u.diag.fallbacks;
    for (auto& e : u.diag.events)
      diag.events.push_back("iteration " + std::to_string(state_.iteration) + ": " + e);
  }

  const Problem& problem_;
  EngineConfig config_;
  EngineState state_;
  AlphaGridBelief alpha_prior_;
};

inline RunResult run(const Problem& problem, const EngineConfig& config)
{
  Engine engine(problem, config);
  return engine.run();
}

}  // namespace rssloc
