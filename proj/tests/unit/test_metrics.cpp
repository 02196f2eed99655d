#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace lf_test;

namespace {

Trajectory constant_trajectory(const ComplexMatrix& rho, const TimeGrid& grid) {
  Trajectory t;
  t.grid = grid;
  for (long k = 0; k < grid.points(); ++k) t.states.push_back(rho);
  return t;
}

}  // namespace

TEST(Deviation, IdenticalTrajectoriesGiveZero) {
  std::mt19937_64 gen(1);
  const TimeGrid grid{0.0, 1.0, 10};
  const Trajectory a = constant_trajectory(random_density(gen, 3), grid);
  EXPECT_EQ(deviation(a, a).time_average, 0.0);
}

TEST(Deviation, ConstantOffset) {
  ComplexMatrix p = ComplexMatrix::Zero(2, 2), q = ComplexMatrix::Zero(2, 2);
  p(0, 0) = 1.0;
  q(1, 1) = 1.0;
  const TimeGrid grid{0.0, 5.0, 7};
  const DeviationSeries d = deviation(constant_trajectory(p, grid), constant_trajectory(q, grid));
  EXPECT_NEAR(d.time_average, std::sqrt(2.0), 1e-15);
  EXPECT_EQ(d.values.size(), 8u);
}

TEST(Deviation, TrapezoidWeightsEndpointsByHalf) {
  // linear ramp: the trapezoid mean is exact
  EXPECT_DOUBLE_EQ(trapezoid_average({0.0, 1.0, 2.0, 3.0}), 1.5);
  EXPECT_DOUBLE_EQ(trapezoid_average({4.0, 0.0, 0.0, 0.0, 4.0}), 1.0);
  EXPECT_DOUBLE_EQ(trapezoid_average({2.5}), 2.5);
  EXPECT_THROW((void)trapezoid_average({}), Error);
}

TEST(Deviation, GridMismatch) {
  const ComplexMatrix p = ComplexMatrix::Identity(2, 2) / 2.0;
  try {
    (void)deviation(constant_trajectory(p, {0.0, 1.0, 4}), constant_trajectory(p, {0.0, 2.0, 4}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
  Trajectory partial = constant_trajectory(p, {0.0, 1.0, 4});
  partial.states.pop_back();
  EXPECT_THROW((void)deviation(partial, partial), Error);
}

TEST(GeoMeanLog, TwoValues) {
  const GeoMeanLog g = geo_mean_log({1.0, 100.0});
  EXPECT_NEAR(g.geo_mean, 10.0, 1e-13);
  ASSERT_TRUE(g.log10_std.has_value());
  EXPECT_NEAR(*g.log10_std, 1.0, 1e-15);
}

TEST(GeoMeanLog, SingleValueHasNoDispersion) {
  const GeoMeanLog g = geo_mean_log({3.0});
  EXPECT_NEAR(g.geo_mean, 3.0, 1e-15);
  EXPECT_FALSE(g.log10_std.has_value());
}

TEST(GeoMeanLog, ScaleEquivariance) {
  std::mt19937_64 gen(2);
  std::lognormal_distribution<double> ln(0.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(20), scaled(20);
    const double c = ln(gen);
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = ln(gen);
      scaled[k] = c * v[k];
    }
    const GeoMeanLog a = geo_mean_log(v), b = geo_mean_log(scaled);
    EXPECT_NEAR(b.geo_mean, c * a.geo_mean, 1e-12 * b.geo_mean);
    EXPECT_NEAR(*b.log10_std, *a.log10_std, 1e-12);
  }
}

TEST(GeoMeanLog, RejectsNonPositive) {
  for (const auto& v : {std::vector<double>{}, {1.0, 0.0}, {-1.0}, {1.0, std::nan("")}}) {
    try {
      (void)geo_mean_log(v);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonPositiveValue);
    }
  }
}

TEST(Diagnose, Examples) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = 1.02;
  m(1, 1) = -0.02;
  const Diagnostics d = diagnose(m);
  EXPECT_NEAR(d.min_population, -0.02, 1e-16);
  EXPECT_NEAR(d.min_eigenvalue, -0.02, 1e-16);
  EXPECT_NEAR(d.trace_error, 0.0, 1e-16);
  EXPECT_EQ(d.hermiticity_defect, 0.0);

  ComplexMatrix c = ComplexMatrix::Identity(2, 2) / 2.0;
  c(0, 1) = Complex(0.0, 0.1);
  c(1, 0) = Complex(0.0, 0.1);  // not the conjugate
  EXPECT_NEAR(diagnose(c).hermiticity_defect, std::sqrt(2.0) * 0.2, 1e-15);
}

TEST(Phase, UnwrapsLinearRamp) {
  std::vector<Complex> s;
  for (int k = 0; k < 60; ++k) s.push_back(std::polar(0.3 + 0.01 * k, 0.4 * k));
  const auto ph = unwrapped_phase(s);
  for (int k = 0; k < 60; ++k) EXPECT_NEAR(ph[static_cast<std::size_t>(k)], 0.4 * k, 1e-12);
  EXPECT_GT(std::abs(ph.back()), kPi);
}

TEST(Phase, DecreasingRamp) {
  std::vector<Complex> s;
  for (int k = 0; k < 40; ++k) s.push_back(std::polar(1.0, -0.7 * k + 0.1));
  const auto ph = unwrapped_phase(s);
  for (int k = 0; k < 40; ++k) EXPECT_NEAR(ph[static_cast<std::size_t>(k)], -0.7 * k + 0.1, 1e-12);
}

TEST(Lifetime, RecoversExponential) {
  std::vector<double> t, y;
  for (int k = 0; k <= 200; ++k) {
    t.push_back(10.0 * k);
    y.push_back(0.8 * std::exp(-10.0 * k / 350.0));
  }
  const LifetimeFit fit = fit_lifetime(t, y);
  EXPECT_NEAR(fit.lifetime, 350.0, 1e-9);
  EXPECT_GT(fit.points, 10);
}

TEST(Lifetime, FlatSeriesIsInfinite) {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0}, y(4, 0.5);
  EXPECT_TRUE(std::isinf(fit_lifetime(t, y).lifetime));
  EXPECT_THROW((void)fit_lifetime(t, {1.0}), Error);
}
