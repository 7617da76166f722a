#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "rssloc/belief.hpp"
#include "rssloc/types.hpp"

namespace rssloc {

/// Per-axis Silverman bandwidth 1.06 std L^(-1/5), floored so a collapsed axis
/// still yields a finite kernel.
inline Position silverman_bandwidth(std::span<const Position> samples)
{
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    mx += s.x;
    my += s.y;
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0;
  for (const auto& s : samples) {
    vx += (s.x - mx) * (s.x - mx);
    vy += (s.y - my) * (s.y - my);
  }
  const double denom = samples.size() > 1 ? n - 1.0 : 1.0;
  const double factor = 1.06 * std::pow(n, -0.2);
  constexpr double floor = 1e-9;
  return {std::max(factor * std::sqrt(vx / denom), floor),
          std::max(factor * std::sqrt(vy / denom), floor)};
}

/// Index of the sample with the highest Gaussian-kernel density estimate;
/// ties go to the lowest index. O(L^2).
inline std::size_t kde_mode_index(std::span<const Position> samples)
{
  if (samples.empty())
    throw DomainError("kde_mode: no samples");
  const Position h = silverman_bandwidth(samples);
  const double ix = 1.0 / h.x, iy = 1.0 / h.y;
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t a = 0; a < samples.size(); ++a) {
    double acc = 0.0;
    for (const auto& s : samples) {
      const double dx = (samples[a].x - s.x) * ix;
      const double dy = (samples[a].y - s.y) * iy;
      acc += std::exp(-0.5 * (dx * dx + dy * dy));
    }
    if (acc > best_val) {
      best_val = acc;
      best = a;
    }
  }
  return best;
}

inline Position kde_mode(std::span<const Position> samples)
{
  return samples[kde_mode_index(samples)];
}

struct AlphaEstimate
{
  double value = 0.0;
  bool degenerate = false;  ///< maximum shared by several grid points
};

/// Grid point of maximal mass, ties broken toward the smaller alpha.
inline AlphaEstimate alpha_point_estimate(const AlphaGridBelief& belief)
{
  std::size_t best = 0;
  int ties = 0;
  for (std::size_t r = 1; r < belief.size(); ++r) {
    if (belief.masses[r] > belief.masses[best]) {
      best = r;
      ties = 0;
    } else if (belief.masses[r] == belief.masses[best]) {
      ++ties;
    }
  }
  return {belief.grid[best], ties > 0};
}

struct RunEstimates
{
  double alpha = 0.0;
  std::vector<Position> positions;  ///< one per agent
};

struct RunMetrics
{
  double mse_alpha = 0.0;
  double bias_alpha = 0.0;
  double rmse_positions = 0.0;
  std::vector<double> per_agent_rmse;
};

/// mse = mean (a_hat - a)^2, bias = mean(a_hat) - a,
/// rmse = sqrt(mean over runs and agents of |x_hat - x|^2).
inline RunMetrics compute_metrics(std::span<const RunEstimates> runs, double alpha_true,
                                  std::span<const Position> truths)
{
  if (runs.empty())
    throw ConfigError("compute_metrics: no runs");
  RunMetrics m;
  m.per_agent_rmse.assign(truths.size(), 0.0);
  double sum_alpha = 0.0, sum_sq = 0.0, sum_pos = 0.0;
  for (const auto& run : runs) {
    if (run.positions.size() != truths.size())
      throw ConfigError("compute_metrics: estimate/truth count mismatch");
    sum_alpha += run.alpha;
    sum_sq += (run.alpha - alpha_true) * (run.alpha - alpha_true);
    for (std::size_t k = 0; k < truths.size(); ++k) {
      const double dx = run.positions[k].x - truths[k].x;
      const double dy = run.positions[k].y - truths[k].y;
      sum_pos += dx * dx + dy * dy;
      m.per_agent_rmse[k] += dx * dx + dy * dy;
    }
  }
  const double n = static_cast<double>(runs.size());
  m.mse_alpha = sum_sq / n;
  m.bias_alpha = sum_alpha / n - alpha_true;
  m.rmse_positions =
      truths.empty() ? 0.0 : std::sqrt(sum_pos / (n * static_cast<double>(truths.size())));
  for (auto& e : m.per_agent_rmse)
    e = std::sqrt(e / n);
  return m;
}

}  // namespace rssloc
