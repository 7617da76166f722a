#pragma once

// Independent numerical references used by the unit and acceptance tests.
// Nothing here calls into the closed forms under test.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// Composite Simpson on [a, b] with an even panel count.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels)
{
  if (panels % 2)
    ++panels;
  const double h = (b - a) / panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < panels; ++i)
    acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

/// Plain Gaussian likelihood of a reading r at distance d, written out by hand.
inline double rss_pdf(double r, double d, double A, double alpha, double sigma, double d0 = 1.0)
{
  const double mean = A - 10.0 * alpha * std::log10(d / d0);
  const double z = (r - mean) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// 2-D integral over the plane of a radially symmetric g(d), done as a
/// tensor-product rule in (log d, theta). The angular direction is integrated
/// numerically even though the integrand does not depend on it.
inline double polar_integral(const std::function<double(double)>& g, double d_lo, double d_hi,
                             int radial_panels = 4000, int angular_panels = 8)
{
  const double a = std::log(d_lo), b = std::log(d_hi);
  auto radial = [&](double u) {
    const double d = std::exp(u);
    return g(d) * d * d;  // d theta d(d) d = d^2 du
  };
  const double inner = simpson(radial, a, b, radial_panels);
  auto angular = [&](double) { return inner; };
  return simpson(angular, 0.0, 2.0 * std::numbers::pi, angular_panels);
}

/// Upper critical value of the one-sample Kolmogorov-Smirnov statistic
/// sqrt(n) D at level 0.01 (asymptotic).
inline constexpr double kKsCritical01 = 1.6276;

}  // namespace oracle
