#include <gtest/gtest.h>

#include "oracles.hpp"
#include "rssloc/rssloc.hpp"

using namespace rssloc;

namespace {

/// sqrt(n) times the KS distance between sorted data and a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> data, Cdf cdf)
{
  std::sort(data.begin(), data.end());
  const double n = static_cast<double>(data.size());
  double dmax = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const double F = cdf(data[k]);
    dmax = std::max({dmax, (k + 1) / n - F, F - k / n});
  }
  return std::sqrt(n) * dmax;
}

}  // namespace

TEST(NlSampler, ProposalParameters)
{
  const EdgeChannel ch{-50.0, -30.0, 1.0, 3.0};
  const auto p = distance_proposal_params(ch, 2.0);
  EXPECT_NEAR(p.mu_tilde, 2.302585, 1e-6);
  EXPECT_NEAR(p.sigma_tilde, 0.345388, 1e-6);
  EXPECT_NEAR(p.median(), 10.0, 1e-9);
  EXPECT_THROW(distance_proposal_params(ch, 0.0), DomainError);
}

TEST(NlSampler, RadiiFollowLogNormal)
{
  const EdgeChannel ch{-65.0, -30.0, 1.0, 4.0};
  const RssRangeModel model{ch, 3.2};
  const auto p = model.proposal();
  Rng rng = make_stream(21, StreamPurpose::demo);
  const Position ref{4.0, -2.0};
  std::vector<double> radii(20000);
  for (auto& r : radii)
    r = distance(sample_polar(rng, model, ref), ref);
  EXPECT_LT(ks_statistic(radii, [&](double d) { return p.cdf(d); }), oracle::kKsCritical01);
}

TEST(NlSampler, AnglesAreUniform)
{
  const EdgeChannel ch{-50.0, -30.0, 1.0, 3.0};
  Rng rng = make_stream(22, StreamPurpose::demo);
  std::vector<double> angles(20000);
  for (auto& a : angles) {
    const Position x = sample_polar(rng, ch, 2.0, {0, 0});
    a = std::atan2(x.y, x.x) + std::numbers::pi;
  }
  EXPECT_LT(ks_statistic(angles, [](double t) { return t / (2.0 * std::numbers::pi); }),
            oracle::kKsCritical01);
}

TEST(NlSampler, ProposalDensityIntegratesToOne)
{
  const EdgeChannel ch{-58.0, -30.0, 2.0, 5.0};
  for (double alpha : {1.5, 3.0, 6.0}) {
    const RssRangeModel model{ch, alpha};
    const double total = oracle::polar_integral(
        [&](double d) { return proposal_density(model, {d, 0.0}, {0.0, 0.0}); }, 1e-4, 1e6, 8000);
    EXPECT_NEAR(total, 1.0, 1e-8) << "alpha " << alpha;
  }
}

TEST(NlSampler, RssWeightRatioIsSquaredDistance)
{
  const EdgeChannel ch{-55.0, -30.0, 1.0, 3.0};
  const RssRangeModel model{ch, 2.5};
  const Position ref{1.0, 1.0};
  const Position a{4.0, 5.0}, b{1.0, 13.0};
  const double ratio = nl_importance_weight(model, a, ref) / nl_importance_weight(model, b, ref);
  EXPECT_NEAR(ratio, std::pow(5.0 / 12.0, 2.0), 1e-12);
}

TEST(NlSampler, UniformWeightIsProportionalToDistance)
{
  const UniformRangeModel model{7.5, 2.5};
  const Position ref{0, 0};
  const double w6 = nl_importance_weight(model, {6.0, 0.0}, ref);
  const double w9 = nl_importance_weight(model, {0.0, 9.0}, ref);
  EXPECT_NEAR(w9 / w6, 1.5, 1e-12);
  EXPECT_EQ(nl_importance_weight(model, {11.0, 0.0}, ref), 0.0);
}

TEST(NlSampler, UniformDrawsStayInSupport)
{
  const UniformRangeModel model{7.5, 2.5};
  Rng rng = make_stream(23, StreamPurpose::demo);
  for (int k = 0; k < 5000; ++k) {
    const double d = distance(sample_polar(rng, model, {2, 2}), {2, 2});
    EXPECT_GE(d, 5.0);
    EXPECT_LE(d, 10.0);
  }
}

TEST(NlSampler, WeightedMeanDistanceRecoversNormalizedLikelihood)
{
  // f(r | d) uniform on [5, 10]; the normalized likelihood over the plane has
  // radial density proportional to d, so E[d] = (2/3)(10^3 - 5^3)/(10^2 - 5^2).
  const double truth = (2.0 / 3.0) * (1000.0 - 125.0) / (100.0 - 25.0);
  Rng rng = make_stream(24, StreamPurpose::demo);
  const auto demo = run_sampler_demo(rng, UniformRangeModel{7.5, 2.5}, 40000);
  EXPECT_NEAR(demo.truth_mean_distance, truth, 1e-6);
  EXPECT_NEAR(demo.weighted_mean_distance, truth, 4.0 * demo.weighted_se);
  EXPECT_NEAR(demo.heuristic_mean_distance, 7.5, 4.0 * demo.heuristic_se);
}

TEST(NlSampler, RssDemoTruthMatchesClosedForm)
{
  // Radial density of the normalized likelihood is proportional to d^2 q_d(d),
  // so E[d] = exp(mu + 2.5 sigma^2) for the log-normal q_d.
  const EdgeChannel ch{-50.0, -30.0, 1.0, 3.0};
  const RssRangeModel model{ch, 2.0};
  const auto p = model.proposal();
  const double expected = std::exp(p.mu_tilde + 2.5 * p.sigma_tilde * p.sigma_tilde);
  EXPECT_NEAR(radial_moment(model, 1) / radial_moment(model, 0), expected, 1e-8 * expected);
}

TEST(NlSampler, DensityGridIsNormalizedOnItsSupport)
{
  const DemoModel model = UniformRangeModel{7.5, 2.5};
  const auto grid = normalized_likelihood_grid(model, {0, 0}, 401);
  const double h = grid.points[1].y - grid.points[0].y;
  double mass = 0.0;
  for (double v : grid.density)
    mass += v * h * h;
  EXPECT_NEAR(mass, 1.0, 0.02);
}
