#include <abh/collapse.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace abh;

namespace {

constexpr double pi = std::numbers::pi;

// tau_c far below / above every other time scale: sigma is 1 / 0 to double precision.
CollapseProfile collapsed() { return CollapseProfile::from_velocities(0.9, 1.1, 1.0, 1e-14); }
CollapseProfile frozen() { return CollapseProfile::from_velocities(0.9, 1.1, 1.0, 1e30); }

// Fixed-step RK4 on the raw piecewise profile.
double rk4_oracle(double x, double t_end, const CollapseProfile& p, int n) {
  const double h = t_end / n;
  auto f = [&](double t, double y) { return 1.0 - p.velocity(y, t); };
  double t = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1 = f(t, x), k2 = f(t + h / 2, x + h / 2 * k1), k3 = f(t + h / 2, x + h / 2 * k2),
                 k4 = f(t + h, x + h * k3);
    x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return x;
}

}  // namespace

TEST(Collapse, Sigma) {
  for (auto kind : {SigmaKind::tanh, SigmaKind::smoothstep}) {
    EXPECT_EQ(sigma(0.0, 1.0, kind), 0.0);
    double prev = -1.0;
    for (int i = 0; i <= 20000; ++i) {
      const double s = sigma(i * 1e-3, 1.0, kind);
      EXPECT_GE(s, prev);
      EXPECT_LE(s, 1.0);
      prev = s;
    }
  }
  EXPECT_GT(sigma(10.0, 1.0, SigmaKind::tanh), 0.999);
  EXPECT_EQ(sigma(3.0, 1.0, SigmaKind::smoothstep), 1.0);
  EXPECT_NEAR(sigma(1.5, 1.0, SigmaKind::smoothstep), 0.5, 1e-15);
}

TEST(Collapse, ProfileContinuity) {
  const auto p = CollapseProfile::from_velocities(0.9, 1.1, 1.0);
  EXPECT_NEAR(p.kappa, 0.1, 1e-15);
  for (double t : {0.3, 5.0}) {
    EXPECT_NEAR(p.velocity(p.a - 1e-13, t), p.velocity(p.a + 1e-13, t), 1e-12);
    EXPECT_NEAR(p.velocity(-p.a - 1e-13, t), p.velocity(-p.a + 1e-13, t), 1e-12);
  }
  EXPECT_THROW(CollapseProfile::from_velocities(0.8, 1.1, 1.0), ConfigError);
  EXPECT_THROW(CollapseProfile::from_kappa(-0.1), ConfigError);
}

TEST(Collapse, HawkingTemperature) {
  EXPECT_NEAR(hawking_temperature(CollapseProfile::from_kappa(2 * pi, 0.1)), 1.0, 1e-15);
  EXPECT_NEAR(hawking_temperature(CollapseProfile::from_kappa(0.3)),
              3.0 * hawking_temperature(CollapseProfile::from_kappa(0.1)), 1e-15);
  EXPECT_NEAR(hawking_temperature(CollapseProfile{}), 0.1 / (2 * pi), 1e-15);
}

TEST(Collapse, FrozenProfileIsFreePropagation) {
  const auto p = frozen();
  for (double x0 : {-7.0, -0.3, 0.0, 2.0}) {
    const auto c = solve_characteristic(x0, 10.0, p);
    EXPECT_NEAR(c.x_end(), x0 + 10.0, 1e-9);
    EXPECT_NEAR(trace_back(x0, 10.0, p), x0 - 10.0, 1e-9);
  }
}

TEST(Collapse, LinearRegionExponential) {
  const auto p = collapsed();
  // Forward rays peel off the horizon.
  const auto c = solve_characteristic(0.01, 40.0, p);
  EXPECT_NEAR(c.x_end(), 0.01 * std::exp(0.1 * 40.0), 1e-9);
  EXPECT_FALSE(c.crossed_boundary);
  // Backward they converge onto it.
  for (double t = 0.0; t <= 500.0; t += 25.0)
    EXPECT_NEAR(trace_back(0.8, t, p), 0.8 * std::exp(-0.1 * t), 1e-9) << t;
}

TEST(Collapse, HorizonAttractorRate) {
  const auto p = collapsed();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double t = 10.0; t <= 200.0; t += 10.0) {
    const double y = std::log(std::abs(trace_back(-0.9, t, p)));
    sx += t, sy += y, sxx += t * t, sxy += t * y, ++n;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_NEAR(slope / -p.kappa, 1.0, 0.01);
}

TEST(Collapse, MatchesFixedStepOracle) {
  const CollapseProfile p;
  for (double x0 : {-2.0, -0.5, 0.3, 3.0}) {
    const double got = solve_characteristic(x0, 100.0, p).x_end();
    const double want = rk4_oracle(x0, 100.0, p, 1000000);
    EXPECT_NEAR(got, want, 1e-8) << x0;
  }
}

TEST(Collapse, JunctionCrossingLocated) {
  const auto p = frozen();
  const auto c = solve_characteristic(0.0, 3.0, p);
  EXPECT_TRUE(c.crossed_boundary);
  bool found = false;
  for (std::size_t i = 0; i < c.t.size(); ++i) {
    if (c.x[i] == p.a) {
      EXPECT_NEAR(c.t[i], 1.0, 1e-9);
      found = true;
    }
  }
  EXPECT_TRUE(found);
  for (std::size_t i = 1; i < c.t.size(); ++i) EXPECT_GT(c.t[i], c.t[i - 1]);
  EXPECT_EQ(c.t.front(), 0.0);
  EXPECT_EQ(c.x.front(), 0.0);
}

TEST(Collapse, RoundTripAndOrder) {
  const CollapseProfile p;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> X(-15.0, 15.0), T(0.5, 100.0);
  for (int i = 0; i < 30; ++i) {
    const double x = X(rng), t = T(rng);
    const double x0 = trace_back(x, t, p);
    EXPECT_NEAR(solve_characteristic(x0, t, p).x_end(), x, 1e-7) << x << " " << t;
  }
  std::vector<double> starts{-12.0, -3.0, -1.0, -0.2, 0.0, 0.4, 1.0, 1.5, 8.0};
  for (double t : {1.0, 20.0, 100.0}) {
    double prev = -1e300;
    for (double x0 : starts) {
      const double x = solve_characteristic(x0, t, p).x_end();
      EXPECT_GT(x, prev);
      prev = x;
    }
  }
}

TEST(Collapse, TraceBackJacobian) {
  const CollapseProfile p;
  for (double x : {-10.0, -0.5, 0.7, 5.0, 11.0}) {
    const double h = 1e-5;
    const double fd = (trace_back(x + h, 100.0, p) - trace_back(x - h, 100.0, p)) / (2 * h);
    EXPECT_NEAR(trace_back_with_jacobian(x, 100.0, p).dx0_dx / fd, 1.0, 1e-5) << x;
  }
}

TEST(Collapse, RegionClassification) {
  const CollapseProfile p;
  // Downstream and early: the ray never visited |x| < a.
  EXPECT_EQ(classify_region(5.0, 2.0, p), Region::trivial_flat);
  EXPECT_EQ(classify_region(p.a + 0.5, 100.0, p), Region::hawking);
  const double xb = region_boundary(100.0, p);
  int flips = 0;
  Region prev = classify_region(0.0, 100.0, p);
  double flip_at = 0.0;
  for (double x = 0.0; x <= 30.0; x += 0.01) {
    const Region r = classify_region(x, 100.0, p);
    if (r != prev) {
      ++flips;
      flip_at = x;
    }
    prev = r;
  }
  EXPECT_EQ(flips, 1);
  EXPECT_NEAR(flip_at, xb, 0.011);
  EXPECT_NEAR(trace_back(xb, 100.0, p), p.a, 1e-6);
}

TEST(Collapse, LeftModeNormalizationAndConstancy) {
  const CollapseProfile p;
  const double k = 1.7;
  const auto m0 = left_mode(2.5, 0.0, k, p);
  const auto want = std::polar(1.0 / std::sqrt(4 * pi * k), k * 2.5);
  EXPECT_NEAR(std::abs(m0 - want), 0.0, 1e-15);
  EXPECT_THROW(left_mode(1.0, 1.0, 0.0, p), DegenerateMode);

  const auto c = solve_characteristic(-0.4, 60.0, p);
  const auto ref = left_mode(-0.4, 0.0, k, p);
  for (std::size_t i = 0; i < c.t.size(); i += std::max<std::size_t>(1, c.t.size() / 20))
    EXPECT_LT(std::abs(left_mode(c.x[i], c.t[i], k, p) - ref), 1e-8);
}

TEST(Collapse, LeftModeRedshift) {
  const auto p = collapsed();
  const double k = 3.0, x = 0.6, t = 20.0;
  const double phase = std::arg(left_mode(x, t, k, p));
  const double want = std::remainder(k * x * std::exp(-p.kappa * t), 2 * pi);
  EXPECT_NEAR(phase, want, 1e-8);
}

TEST(Collapse, LeftOperatorAnnihilatesMode) {
  const CollapseProfile p;
  const double k = 1.0, x = 0.05, t = 5.0;
  auto residual = [&](double h) {
    auto psi = [&](double xx, double tt) { return left_mode(xx, tt, k, p); };
    const auto dt = (psi(x, t + h) - psi(x, t - h)) / (2 * h);
    const auto dx = (psi(x + h, t) - psi(x - h, t)) / (2 * h);
    return std::abs(dt + (1.0 - p.velocity(x, t)) * dx);
  };
  const double r1 = residual(0.2), r2 = residual(0.1), r3 = residual(0.05);
  EXPECT_NEAR(r1 / r2, 4.0, 0.3);
  EXPECT_NEAR(r2 / r3, 4.0, 0.3);
}
