#pragma once

// Side-by-side comparison of the weighted polar sampler and the unweighted
// heuristic on a single normalized likelihood, with a radial quadrature
// reference.

#include <cmath>
#include <numbers>
#include <utility>
#include <variant>
#include <vector>

#include "rssloc/belief.hpp"
#include "rssloc/nlsampler.hpp"

namespace rssloc {

using DemoModel = std::variant<UniformRangeModel, RssRangeModel>;

/// Distance interval that carries the radial mass f(r | d) d of the model.
inline std::pair<double, double> radial_support(const DemoModel& model)
{
  if (const auto* u = std::get_if<UniformRangeModel>(&model))
    return {std::max(u->rss - u->half_width, 0.0), u->rss + u->half_width};
  const auto p = std::get<RssRangeModel>(model).proposal();
  const double centre = p.mu_tilde + 2.0 * p.sigma_tilde * p.sigma_tilde;
  return {p.d0 * std::exp(centre - 14.0 * p.sigma_tilde),
          p.d0 * std::exp(centre + 14.0 * p.sigma_tilde)};
}

/// Integral of d^k f(r | d) d over the radial support, composite Simpson in log d.
inline double radial_moment(const DemoModel& model, int k, int panels = 4000)
{
  auto [lo, hi] = radial_support(model);
  // pull the ends inside so a hard-edged support is not lost to rounding
  lo = std::max(lo, kMinDistance) * (1.0 + 1e-12);
  hi *= 1.0 - 1e-12;
  const double a = std::log(lo), b = std::log(hi);
  const double h = (b - a) / panels;
  auto g = [&](double u) {
    const double d = std::exp(u);
    const double lf = std::visit([d](const auto& m) { return m.log_likelihood(d); }, model);
    // dd = d du
    return std::exp(lf) * std::pow(d, k + 2);
  };
  double acc = g(a) + g(b);
  for (int i = 1; i < panels; ++i)
    acc += g(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

struct SamplerDemo
{
  Position reference;
  std::vector<Position> draws;      ///< shared by both samplers
  std::vector<double> weights;      ///< normalized importance weights of the proposed sampler
  double truth_mean_distance = 0.0; ///< radial quadrature under the normalized likelihood
  double weighted_mean_distance = 0.0;
  double weighted_se = 0.0;
  double heuristic_mean_distance = 0.0;
  double heuristic_se = 0.0;
};

inline SamplerDemo run_sampler_demo(Rng& rng, const DemoModel& model, std::size_t count,
                                    Position reference = {0.0, 0.0})
{
  SamplerDemo demo;
  demo.reference = reference;
  demo.draws.resize(count);
  std::vector<double> log_w(count);
  std::visit(
      [&](const auto& m) {
        for (std::size_t k = 0; k < count; ++k) {
          demo.draws[k] = sample_polar(rng, m, reference);
          log_w[k] = nl_log_importance_weight(m, demo.draws[k], reference);
        }
      },
      model);
  normalize_log_weights(log_w, demo.weights);

  demo.truth_mean_distance = radial_moment(model, 1) / radial_moment(model, 0);

  const double n = static_cast<double>(count);
  double wm = 0.0, hm = 0.0;
  std::vector<double> d(count);
  for (std::size_t k = 0; k < count; ++k) {
    d[k] = distance(demo.draws[k], reference);
    wm += demo.weights[k] * d[k];
    hm += d[k];
  }
  hm /= n;
  double wv = 0.0, hv = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    wv += demo.weights[k] * demo.weights[k] * (d[k] - wm) * (d[k] - wm);
    hv += (d[k] - hm) * (d[k] - hm);
  }
  demo.weighted_mean_distance = wm;
  demo.weighted_se = std::sqrt(wv);
  demo.heuristic_mean_distance = hm;
  demo.heuristic_se = std::sqrt(hv / (n - 1.0) / n);
  return demo;
}

struct DensityGrid
{
  std::vector<Position> points;
  std::vector<double> density;
};

/// Normalized likelihood on a square grid of `side` points per axis around the reference.
inline DensityGrid normalized_likelihood_grid(const DemoModel& model, Position reference,
                                              std::size_t side)
{
  const double z = 2.0 * std::numbers::pi * radial_moment(model, 0);
  double half = radial_support(model).second;
  if (const auto* rss = std::get_if<RssRangeModel>(&model)) {
    const auto p = rss->proposal();
    half = p.d0 * std::exp(p.mu_tilde + 2.0 * p.sigma_tilde * p.sigma_tilde + 4.0 * p.sigma_tilde);
  }
  DensityGrid g;
  for (std::size_t a = 0; a < side; ++a)
    for (std::size_t b = 0; b < side; ++b) {
      const Position p{reference.x - half + 2.0 * half * a / (side - 1.0),
                       reference.y - half + 2.0 * half * b / (side - 1.0)};
      const double d = std::max(distance(p, reference), kMinDistance);
      const double lf = std::visit([d](const auto& m) { return m.log_likelihood(d); }, model);
      g.points.push_back(p);
      g.density.push_back(std::exp(lf) / z);
    }
  return g;
}

}  // namespace rssloc
