#pragma once

// Particle and grid beliefs, message representations, resampling and
// categorical sampling.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "rssloc/random.hpp"
#include "rssloc/rss_model.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

/// Densities are floored here before they are used as divisors.
inline constexpr double kDensityFloor = 1e-300;
inline const double kLogDensityFloor = std::log(kDensityFloor);

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(v))) without overflow; -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v)
{
  double hi = kNegInf;
  for (double x : v)
    hi = std::max(hi, x);
  if (hi == kNegInf)
    return kNegInf;
  double acc = 0.0;
  for (double x : v)
    acc += std::exp(x - hi);
  return hi + std::log(acc);
}

/// Turns log weights into normalized linear weights. Returns false, and writes
/// uniform weights, when every entry is -inf or NaN.
inline bool normalize_log_weights(std::span<const double> log_w, std::vector<double>& out)
{
  out.assign(log_w.size(), 0.0);
  const double lse = log_sum_exp(log_w);
  if (!std::isfinite(lse)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(log_w.size()));
    return false;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < log_w.size(); ++k) {
    out[k] = std::exp(log_w[k] - lse);
    total += out[k];
  }
  for (auto& w : out)
    w /= total;
  return true;
}

struct ParticleBelief
{
  NodeId owner = 0;
  std::vector<Position> samples;

  std::size_t size() const { return samples.size(); }

  Position mean() const
  {
    Position m;
    for (const auto& s : samples)
      m = m + s;
    return (1.0 / static_cast<double>(samples.size())) * m;
  }
};

/// Belief of the path loss exponent on fixed grid points.
struct AlphaGridBelief
{
  std::vector<double> grid;
  std::vector<double> masses;

  std::size_t size() const { return grid.size(); }

  static std::vector<double> equally_spaced(double lo, double hi, std::size_t count)
  {
    if (count < 2 || !(hi > lo) || !(lo > 0.0))
      throw ConfigError("alpha grid needs count >= 2 and 0 < lo < hi");
    std::vector<double> g(count);
    for (std::size_t r = 0; r < count; ++r)
      g[r] = lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(count - 1);
    return g;
  }

  double mean() const
  {
    double m = 0.0;
    for (std::size_t r = 0; r < grid.size(); ++r)
      m += grid[r] * masses[r];
    return m;
  }

  double variance() const
  {
    const double m = mean();
    double v = 0.0;
    for (std::size_t r = 0; r < grid.size(); ++r)
      v += (grid[r] - m) * (grid[r] - m) * masses[r];
    return v;
  }
};

/// m_ij(alpha) on the grid, normalized to sum 1.
struct AlphaMessage
{
  std::vector<double> values;

  static AlphaMessage uniform(std::size_t count)
  {
    return {std::vector<double>(count, 1.0 / static_cast<double>(count))};
  }
};

/// One term w~ * f~(r | x, neighbor_sample, alpha) of a position message.
struct MessageComponent
{
  double weight = 0.0;
  Position neighbor_sample;
  double alpha = 0.0;
  std::size_t alpha_index = 0;
  double log_z = 0.0;
};

/// m_ij(x_i): a normalized mixture of normalized likelihoods. An empty component
/// list stands for the constant message 1 used before the first iteration.
struct PositionMessage
{
  NodeId target = 0;   ///< i, the node whose position the message is about
  NodeId source = 0;   ///< j
  EdgeChannel channel;
  std::vector<MessageComponent> components;

  bool is_unit() const { return components.empty(); }
};

/// log m(x). Cost O(L).
inline double log_evaluate_position_message(const PositionMessage& msg, Position x)
{
  if (msg.is_unit())
    return 0.0;
  double hi = kNegInf;
  thread_local std::vector<double> terms;
  terms.resize(msg.components.size());
  for (std::size_t l = 0; l < msg.components.size(); ++l) {
    const auto& c = msg.components[l];
    terms[l] = c.weight > 0.0
                   ? std::log(c.weight) - c.log_z +
                         log_likelihood(msg.channel, x, c.neighbor_sample, c.alpha)
                   : kNegInf;
    hi = std::max(hi, terms[l]);
  }
  if (hi == kNegInf)
    return kLogDensityFloor;
  double acc = 0.0;
  for (double t : terms)
    acc += std::exp(t - hi);
  return std::max(hi + std::log(acc), kLogDensityFloor);
}

inline double evaluate_position_message(const PositionMessage& msg, Position x)
{
  return std::exp(log_evaluate_position_message(msg, x));
}

/// Walker/Vose alias table: O(N) build, O(1) per draw.
class CategoricalSampler
{
public:
  explicit CategoricalSampler(std::span<const double> masses)
  {
    const std::size_t n = masses.size();
    if (n == 0)
      throw DomainError("categorical: empty mass vector");
    double total = 0.0;
    for (double m : masses) {
      if (m < 0.0 || std::isnan(m))
        throw DomainError("categorical: negative mass");
      total += m;
    }
    if (!(total > 0.0))
      throw DomainError("categorical: masses sum to zero");

    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::size_t> small, large;
    for (std::size_t k = 0; k < n; ++k) {
      scaled[k] = masses[k] * static_cast<double>(n) / total;
      (scaled[k] < 1.0 ? small : large).push_back(k);
    }
    while (!small.empty() && !large.empty()) {
      const std::size_t s = small.back();
      small.pop_back();
      const std::size_t g = large.back();
      prob_[s] = scaled[s];
      alias_[s] = g;
      scaled[g] = (scaled[g] + scaled[s]) - 1.0;
      if (scaled[g] < 1.0) {
        large.pop_back();
        small.push_back(g);
      }
    }
    const auto heaviest = static_cast<std::size_t>(
        std::max_element(masses.begin(), masses.end()) - masses.begin());
    for (std::size_t k : large) {
      prob_[k] = 1.0;
      alias_[k] = k;
    }
    // rounding leftovers; a zero-mass slot must never return itself
    for (std::size_t k : small) {
      prob_[k] = masses[k] > 0.0 ? 1.0 : 0.0;
      alias_[k] = masses[k] > 0.0 ? k : heaviest;
    }
  }

  std::size_t size() const { return prob_.size(); }

  std::size_t operator()(Rng& rng) const
  {
    const double u = uniform01(rng) * static_cast<double>(prob_.size());
    std::size_t k = std::min(static_cast<std::size_t>(u), prob_.size() - 1);
    const double frac = u - static_cast<double>(k);
    return frac < prob_[k] ? k : alias_[k];
  }

private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

inline std::vector<std::size_t> sample_categorical(Rng& rng, std::span<const double> masses,
                                                   std::size_t count)
{
  CategoricalSampler sampler(masses);
  std::vector<std::size_t> out(count);
  for (auto& k : out)
    k = sampler(rng);
  return out;
}

/// Indices picked by systematic resampling with stratum offset u in [0, 1):
/// stratum k takes the sample whose CDF interval contains (u + k) / count.
/// Weights need not be normalized but must have a positive sum.
inline std::vector<std::size_t> systematic_indices(std::span<const double> weights,
                                                   std::size_t count, double u)
{
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(count);
  std::size_t idx = 0;
  double cdf = weights.empty() ? 0.0 : weights[0] / total;
  for (std::size_t k = 0; k < count; ++k) {
    const double point = (u + static_cast<double>(k)) / static_cast<double>(count);
    while (point >= cdf && idx + 1 < weights.size())
      cdf += weights[++idx] / total;
    out[k] = idx;
  }
  return out;
}

struct ResampleResult
{
  std::vector<Position> samples;
  bool used_fallback = false;  ///< all weights were zero; uniform weights used
};

inline ResampleResult resample_systematic(Rng& rng, std::span<const Position> samples,
                                          std::span<const double> weights)
{
  ResampleResult res;
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w))
      throw DomainError("resample: negative weight");
    total += w;
  }
  std::vector<double> uniform;
  if (!(total > 0.0)) {
    uniform.assign(weights.size(), 1.0);
    weights = uniform;
    res.used_fallback = true;
  }
  const auto idx = systematic_indices(weights, samples.size(), uniform01(rng));
  res.samples.reserve(idx.size());
  for (auto k : idx)
    res.samples.push_back(samples[k]);
  return res;
}

/// Uniform position prior on a rectangle and uniform alpha prior on an interval.
struct Priors
{
  Rect position;
  double alpha_lo = 1.5;
  double alpha_hi = 6.0;
  /// Optional prior masses on the alpha grid; empty means uniform.
  std::vector<double> alpha_masses;

  double log_position_prior(Position p) const
  {
    return position.contains(p) ? -std::log(position.area()) : kNegInf;
  }
};

struct InitialBeliefs
{
  std::vector<ParticleBelief> positions;  ///< one per node, in geometry order
  AlphaGridBelief alpha;
};

inline InitialBeliefs init_beliefs(Rng& rng, const NetworkGeometry& geometry, const Priors& priors,
                                   std::size_t particles, std::size_t grid_points)
{
  if (priors.position.degenerate())
    throw ConfigError("position prior rectangle is empty");
  if (particles < 1)
    throw ConfigError("particle count must be at least 1");

  InitialBeliefs out;
  out.alpha.grid = AlphaGridBelief::equally_spaced(priors.alpha_lo, priors.alpha_hi, grid_points);
  if (priors.alpha_masses.empty()) {
    out.alpha.masses.assign(grid_points, 1.0 / static_cast<double>(grid_points));
  } else {
    if (priors.alpha_masses.size() != grid_points)
      throw ConfigError("alpha prior masses do not match grid size");
    const double total =
        std::accumulate(priors.alpha_masses.begin(), priors.alpha_masses.end(), 0.0);
    if (!(total > 0.0))
      throw ConfigError("alpha prior masses sum to zero");
    for (double m : priors.alpha_masses)
      out.alpha.masses.push_back(m / total);
  }

  std::uniform_real_distribution<double> ux(priors.position.x_min, priors.position.x_max);
  std::uniform_real_distribution<double> uy(priors.position.y_min, priors.position.y_max);
  for (const auto& node : geometry.nodes()) {
    ParticleBelief b{node.id, {}};
    b.samples.resize(particles, node.position);
    if (node.role == NodeRole::agent)
      for (auto& s : b.samples)
        s = {ux(rng), uy(rng)};
    out.positions.push_back(std::move(b));
  }
  return out;
}

}  // namespace rssloc
