#pragma once

// Log-distance path loss channel: mean RSS, Gaussian shadowing likelihood,
// measurement synthesis and the closed-form likelihood normalizer.

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rssloc/random.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

/// Distances are clamped from below before taking logarithms.
inline constexpr double kMinDistance = 1e-6;

inline constexpr double kLn10 = std::numbers::ln10;

/// Mean received power at distance d: A - 10 alpha log10(d / d0).
inline double rss_mean(double ref_power_dbm, double alpha, double d, double d0)
{
  if (!(d > 0.0) || !(d0 > 0.0))
    throw DomainError("rss_mean: distances must be positive");
  if (!(alpha > 0.0))
    throw DomainError("rss_mean: alpha must be positive");
  return ref_power_dbm - 10.0 * alpha * std::log10(d / d0);
}

/// Inverse of the mean model: the distance at which the mean power equals rss.
inline double rss_inverse(double ref_power_dbm, double alpha, double rss_dbm, double d0)
{
  return d0 * std::pow(10.0, (ref_power_dbm - rss_dbm) / (10.0 * alpha));
}

/// log f(r | d, alpha) for the Gaussian shadowing model.
inline double log_likelihood_at_distance(const EdgeChannel& ch, double d, double alpha)
{
  d = std::max(d, kMinDistance);
  const double residual =
      ch.rss_dbm - (ch.ref_power_dbm - 10.0 * alpha * std::log10(d / ch.ref_distance));
  const double z = residual / ch.sigma;
  return -0.5 * z * z - std::log(ch.sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double log_likelihood(const EdgeChannel& ch, Position xi, Position xj, double alpha)
{
  return log_likelihood_at_distance(ch, distance(xi, xj), alpha);
}

/// log of Z = integral of f(r | x_i, x_j, alpha) over x_i in the plane.
/// Independent of x_j: Z = 2 pi (ln10 / (10 alpha)) exp(2 sigma_d^2 + 2 mu_d).
inline double log_normalizer_z(const EdgeChannel& ch, double alpha)
{
  if (!(alpha > 0.0))
    throw DomainError("normalizer_z: alpha must be positive");
  const double k = kLn10 / (10.0 * alpha);
  const double mu_d = k * (ch.ref_power_dbm - ch.rss_dbm) + std::log(ch.ref_distance);
  const double var_d = ch.sigma * ch.sigma * k * k;
  return std::log(2.0 * std::numbers::pi * k) + 2.0 * var_d + 2.0 * mu_d;
}

inline double normalizer_z(const EdgeChannel& ch, double alpha)
{
  return std::exp(log_normalizer_z(ch, alpha));
}

/// Draws one RSS reading per node pair within range; anchor-anchor pairs carry
/// no information about unknowns and are skipped. A zero noise_std gives noiseless
/// readings.
inline MeasurementSet synthesize_measurements(Rng& rng, const NetworkGeometry& geometry,
                                              const ChannelParams& params, double alpha_true)
{
  if (!(alpha_true > 0.0))
    throw DomainError("synthesize_measurements: alpha_true must be positive");
  if (!(params.ref_distance > 0.0) || params.noise_std < 0.0)
    throw ConfigError("synthesize_measurements: invalid channel parameters");

  std::vector<Node> nodes = geometry.nodes();
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });

  MeasurementSet out;
  std::normal_distribution<double> noise(0.0, 1.0);
  std::map<NodeId, int> degree;
  for (std::size_t a = 0; a < nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < nodes.size(); ++b) {
      const Node& ni = nodes[a];
      const Node& nj = nodes[b];
      if (ni.role == NodeRole::anchor && nj.role == NodeRole::anchor)
        continue;
      const double d = distance(ni.position, nj.position);
      if (d > geometry.comm_range())
        continue;
      double r = rss_mean(params.ref_power(ni.id), alpha_true, std::max(d, kMinDistance),
                          params.ref_distance);
      if (params.noise_std > 0.0)
        r += params.noise_std * noise(rng);
      out.edges.push_back({ni.id, nj.id, r, params.noise_std});
      ++degree[ni.id];
      ++degree[nj.id];
    }
  }
  for (const auto& n : nodes)
    if (n.role == NodeRole::agent && degree[n.id] == 0)
      out.warnings.push_back("agent " + std::to_string(n.id) + " has no neighbors");
  return out;
}

struct NeighborSets
{
  std::map<NodeId, std::vector<NodeId>> of;           ///< Gamma_i, ascending
  std::vector<std::pair<NodeId, NodeId>> edges;       ///< Gamma, first < second

  const std::vector<NodeId>& neighbors(NodeId id) const
  {
    static const std::vector<NodeId> none;
    auto it = of.find(id);
    return it == of.end() ? none : it->second;
  }
};

inline NeighborSets neighbor_sets(const MeasurementSet& measurements)
{
  NeighborSets out;
  for (const auto& m : measurements.edges) {
    const NodeId lo = std::min(m.i, m.j);
    const NodeId hi = std::max(m.i, m.j);
    out.of[lo].push_back(hi);
    out.of[hi].push_back(lo);
    out.edges.emplace_back(lo, hi);
  }
  for (auto& [id, list] : out.of)
    std::sort(list.begin(), list.end());
  std::sort(out.edges.begin(), out.edges.end());
  return out;
}

/// Throws ConfigError unless every edge is unique, references known nodes and
/// touches at least one agent.
inline void validate_measurements(const MeasurementSet& ms, const NetworkGeometry& geometry)
{
  std::vector<std::pair<NodeId, NodeId>> seen;
  for (const auto& m : ms.edges) {
    if (m.i == m.j)
      throw ConfigError("self edge on node " + std::to_string(m.i));
    const auto& a = geometry.node(m.i);
    const auto& b = geometry.node(m.j);
    if (a.role == NodeRole::anchor && b.role == NodeRole::anchor)
      throw ConfigError("edge " + std::to_string(m.i) + "-" + std::to_string(m.j) +
                        " joins two anchors");
    if (!(m.sigma > 0.0))
      throw ConfigError("edge " + std::to_string(m.i) + "-" + std::to_string(m.j) +
                        " has non-positive sigma");
    seen.emplace_back(std::min(m.i, m.j), std::max(m.i, m.j));
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw ConfigError("duplicate edge in measurement set");
}

}  // namespace rssloc
