#pragma once

// Sampling from a normalized likelihood Z^-1 f(r | x, x_ref) by drawing a
// (distance, angle) pair around the reference position. The draw density of the
// resulting position is q(x) = q_d(|x - x_ref|) / (2 pi |x - x_ref|), so an
// importance weight f / q = f(r | d) d / q_d(d) corrects the draws.

#include <cmath>
#include <concepts>
#include <limits>
#include <numbers>
#include <random>

#include "rssloc/random.hpp"
#include "rssloc/rss_model.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

/// A range measurement model r = h(d) + v with invertible h.
template <class M>
concept RangeModel = requires(const M& m, Rng& rng, double d) {
  { m.sample_distance(rng) } -> std::convertible_to<double>;
  { m.log_likelihood(d) } -> std::convertible_to<double>;        // log f(r | d)
  { m.log_distance_density(d) } -> std::convertible_to<double>;  // log q_d(d | r)
};

/// d / d0 ~ LogNormal(mu_tilde, sigma_tilde^2).
struct DistanceProposal
{
  double mu_tilde = 0.0;
  double sigma_tilde = 1.0;
  double d0 = 1.0;

  double median() const { return d0 * std::exp(mu_tilde); }

  double log_density(double d) const
  {
    d = std::max(d, kMinDistance);
    const double z = (std::log(d / d0) - mu_tilde) / sigma_tilde;
    return -0.5 * z * z - std::log(std::sqrt(2.0 * std::numbers::pi) * sigma_tilde * d);
  }

  double cdf(double d) const
  {
    if (d <= 0.0)
      return 0.0;
    return 0.5 * std::erfc(-(std::log(d / d0) - mu_tilde) / (sigma_tilde * std::numbers::sqrt2));
  }
};

inline DistanceProposal distance_proposal_params(const EdgeChannel& ch, double alpha)
{
  if (!(alpha > 0.0))
    throw DomainError("distance_proposal_params: alpha must be positive");
  const double k = kLn10 / (10.0 * alpha);
  return {k * (ch.ref_power_dbm - ch.rss_dbm), k * ch.sigma, ch.ref_distance};
}

/// The log-distance model with Gaussian shadowing at a fixed alpha.
struct RssRangeModel
{
  EdgeChannel channel;
  double alpha = 2.0;

  DistanceProposal proposal() const { return distance_proposal_params(channel, alpha); }

  double sample_distance(Rng& rng) const
  {
    const double v = channel.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    return std::max(rss_inverse(channel.ref_power_dbm, alpha, channel.rss_dbm - v,
                                channel.ref_distance),
                    kMinDistance);
  }
  double log_likelihood(double d) const { return log_likelihood_at_distance(channel, d, alpha); }
  double log_distance_density(double d) const { return proposal().log_density(d); }
};

/// r = d + v with v ~ U[-half_width, half_width]. For this model f(r | d) equals q_d(d | r).
struct UniformRangeModel
{
  double rss = 7.5;
  double half_width = 2.5;

  double sample_distance(Rng& rng) const
  {
    const double v = std::uniform_real_distribution<double>(-half_width, half_width)(rng);
    return std::max(rss - v, kMinDistance);
  }
  double log_likelihood(double d) const
  {
    return std::abs(rss - d) <= half_width ? -std::log(2.0 * half_width) : kNegInfinity;
  }
  double log_distance_density(double d) const { return log_likelihood(d); }

  static constexpr double kNegInfinity = -std::numeric_limits<double>::infinity();
};

static_assert(RangeModel<RssRangeModel>);
static_assert(RangeModel<UniformRangeModel>);

/// theta ~ U[0, 2 pi), d = h^-1(r - v), x = x_ref + d (cos theta, sin theta).
template <RangeModel M>
Position sample_polar(Rng& rng, const M& model, Position x_ref)
{
  const double theta = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  const double d = model.sample_distance(rng);
  return {x_ref.x + d * std::cos(theta), x_ref.y + d * std::sin(theta)};
}

inline Position sample_polar(Rng& rng, const EdgeChannel& ch, double alpha, Position x_ref)
{
  return sample_polar(rng, RssRangeModel{ch, alpha}, x_ref);
}

/// Same draw as sample_polar; callers treat the result as an unweighted sample of
/// the normalized likelihood.
template <RangeModel M>
Position heuristic_sample(Rng& rng, const M& model, Position x_ref)
{
  return sample_polar(rng, model, x_ref);
}

template <RangeModel M>
double log_proposal_density(const M& model, Position x, Position x_ref)
{
  const double d = std::max(distance(x, x_ref), kMinDistance);
  return model.log_distance_density(d) - std::log(2.0 * std::numbers::pi * d);
}

template <RangeModel M>
double proposal_density(const M& model, Position x, Position x_ref)
{
  return std::exp(log_proposal_density(model, x, x_ref));
}

inline double proposal_density(const EdgeChannel& ch, double alpha, Position x, Position x_ref)
{
  return proposal_density(RssRangeModel{ch, alpha}, x, x_ref);
}

/// log of the unnormalized weight f(r | d) d / q_d(d | r); -inf where the
/// proposal density vanishes.
template <RangeModel M>
double nl_log_importance_weight(const M& model, Position x, Position x_ref)
{
  const double d = std::max(distance(x, x_ref), kMinDistance);
  const double lq = model.log_distance_density(d);
  if (!std::isfinite(lq))
    return -std::numeric_limits<double>::infinity();
  return model.log_likelihood(d) + std::log(d) - lq;
}

template <RangeModel M>
double nl_importance_weight(const M& model, Position x, Position x_ref)
{
  return std::exp(nl_log_importance_weight(model, x, x_ref));
}

}  // namespace rssloc
