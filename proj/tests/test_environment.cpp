#include <abh/environment.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace abh;

namespace {

constexpr double pi = std::numbers::pi;

// Sine integral from its own Taylor series / adaptive quadrature (no GSL).
double si_series(double x) {
  // Si(x) = sum (-1)^k x^{2k+1} / ((2k+1) (2k+1)!)
  double sum = 0.0;
  double p = x;  // x^{2k+1}/(2k+1)!
  for (int k = 0; k < 40; ++k) {
    sum += (k % 2 ? -1.0 : 1.0) * p / (2.0 * k + 1.0);
    p *= x * x / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
  }
  return sum;
}

double si_oracle(double x) {
  if (x <= 4.0) return si_series(x);
  auto r = quad::integrate_oscillatory([](double u) { return std::sin(u) / u; }, 4.0, x, 1.0);
  return si_series(4.0) + r.value;
}

OhmicBath bath_T(double cutoff, double temperature = 0.0) {
  OhmicBath b;
  b.cutoff = cutoff;
  b.temperature = temperature;
  return b;
}

}  // namespace

TEST(Environment, CouplingFromZeta) {
  PhysParams p;
  EXPECT_EQ(coupling_from_zeta(0.0, p, 0.2), 0.0);
  EXPECT_NEAR(coupling_from_zeta(5e-6, p, 0.2), 5e-6 * std::sqrt(2.0) * 0.2, 1e-20);
  EXPECT_NEAR(coupling_from_zeta(2e-8, p, 0.2) / coupling_from_zeta(5e-6, p, 0.2), 4e-3, 1e-15);
  for (double a : {0.5, 3.0, 17.0})
    EXPECT_NEAR(coupling_from_zeta(a * 1e-6, p, 0.3), a * coupling_from_zeta(1e-6, p, 0.3), 1e-20);
  auto b = make_bath(5e-6, p, 0.2, 0.0, 10.0);
  EXPECT_DOUBLE_EQ(b.gamma, coupling_from_zeta(5e-6, p, 0.2));
}

TEST(Environment, NoiseKernelSymmetric) {
  auto b = bath_T(40.0, 0.7);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (int i = 0; i < 20; ++i) {
    const double t = U(rng), tp = U(rng);
    EXPECT_EQ(noise_kernel(t, tp, b), noise_kernel(tp, t, b));
  }
}

TEST(Environment, NoiseKernelZeroTemperatureClosedForm) {
  auto b = bath_T(1000.0);
  for (double s : {1e-4, 0.01, 0.3, 2.0, 7.0}) {
    const double x = b.cutoff * s;
    const double closed = (x * std::sin(x) + std::cos(x) - 1.0) / (s * s);
    EXPECT_NEAR(noise_kernel(s, 0.0, b), closed, 1e-7 * b.cutoff * b.cutoff) << s;
    EXPECT_NEAR(noise_kernel_closed(s, b), closed, 1e-9 * b.cutoff * b.cutoff) << s;
  }
}

TEST(Environment, NoiseKernelThermalClosedFormAgreesWithQuadrature) {
  auto b = bath_T(200.0, 2.0);  // beta * cutoff = 100
  for (double s : {0.0, 0.05, 0.4, 3.0}) {
    EXPECT_NEAR(noise_kernel(s, 0.0, b), noise_kernel_closed(s, b), 1e-7 * b.cutoff * b.cutoff) << s;
  }
}

TEST(Environment, NoiseKernelHighTemperatureLimit) {
  // beta * nu << 1 over [0, cutoff]: nu coth(beta nu/2) ~ 2/beta.
  auto b = bath_T(1.0, 1e4);
  const double beta = b.beta_th();
  for (double s : {0.5, 2.0, 9.0}) {
    const double approx = (2.0 / beta) * std::sin(b.cutoff * s) / s;
    EXPECT_NEAR(noise_kernel(s, 0.0, b) / approx, 1.0, 1e-3) << s;
  }
}

TEST(Environment, NoiseKernelNondecreasingInTemperature) {
  double prev = -1e300;
  for (double T : {0.0, 0.1, 0.5, 1.0, 3.0}) {
    const double v = noise_kernel(1e-3, 0.0, bath_T(100.0, T));
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Environment, DissipationKernel) {
  auto b = bath_T(500.0);
  EXPECT_EQ(dissipation_kernel(1.0, 1.5, b), 0.0);
  EXPECT_EQ(dissipation_kernel_closed(-0.5, b), 0.0);
  // D ~ Lambda^3 s / 3 as s -> 0+.
  EXPECT_NEAR(dissipation_kernel(1e-12, 0.0, b), 500.0 * 500.0 * 500.0 * 1e-12 / 3.0, 1e-12);
  for (double s : {1e-5, 0.01, 0.2, 3.0}) {
    const double x = b.cutoff * s;
    const double closed = (std::sin(x) - x * std::cos(x)) / (s * s);
    EXPECT_NEAR(dissipation_kernel(s, 0.0, b), closed, 1e-7 * b.cutoff * b.cutoff) << s;
    EXPECT_NEAR(dissipation_kernel_closed(s, b), closed, 1e-9 * b.cutoff * b.cutoff) << s;
  }
  // Stationary: depends on t - t' only.
  EXPECT_NEAR(dissipation_kernel(2.0, 1.0, b), dissipation_kernel(5.0, 4.0, b), 1e-9);
}

TEST(Environment, DiffusionCoefficientRoutesAgree) {
  // Fast (sine-integral + Filon) route against the literal nested quadrature.
  for (double T : {0.0, 0.4}) {
    auto b = bath_T(20.0, T);
    for (double t : {0.5, 3.0, 9.0}) {
      const double fast = diffusion_coefficient(t, 1.0, b);
      const double nested = diffusion_coefficient_nested(t, 1.0, b);
      EXPECT_NEAR(fast, nested, 1e-6 * std::max(1.0, std::abs(nested))) << T << " " << t;
    }
  }
}

TEST(Environment, DiffusionCoefficientZeroAndAsymptote) {
  auto b = bath_T(1000.0);
  EXPECT_EQ(diffusion_coefficient(0.0, 1.0, b), 0.0);
  EXPECT_NEAR(diffusion_coefficient(50.0, 1.0, b) / (pi / 2), 1.0, 0.02);
}

TEST(Environment, DiffusionCoefficientApproachesSineIntegral) {
  // The exact hard-cutoff coefficient is omega Si(omega t) plus an oscillating
  // cos(omega t)(1 - cos(Lambda t))/t remainder; bound both.
  const double w = 1.0;
  auto b = bath_T(1000.0 * w);
  for (double wt = 0.1; wt <= 100.0; wt *= 1.17) {
    const double t = wt / w;
    const double d = diffusion_coefficient(t, w, b);
    const double si = w * si_oracle(wt);
    EXPECT_LE(std::abs(d - si), 2.0 / t + 0.01 * si) << wt;
    if (wt >= 70.0) {
      EXPECT_LT(std::abs(d / si - 1.0), 0.02) << wt;
    }
  }
}

TEST(Environment, DiffusionIntegralMatchesIntegratedCoefficient) {
  for (double T : {0.0, 0.3}) {
    auto b = bath_T(30.0, T);
    const double tu = 6.0;
    auto r = quad::integrate_oscillatory([&](double t) { return diffusion_coefficient(t, 1.3, b); },
                                         1e-12, tu, b.cutoff);
    EXPECT_NEAR(diffusion_integral(tu, 1.3, b), r.value, 1e-6 * std::abs(r.value)) << T;
  }
}

TEST(Environment, DiffusionIntegralAsymptotic) {
  const double w = 2.0;
  auto b = bath_T(1000.0 * w);
  EXPECT_EQ(diffusion_integral(0.0, w, b), 0.0);
  // Initial slip adds ~ln(Lambda/omega) on top of omega pi t/2, so 3% needs omega t >~ 130.
  for (double wt : {130.0, 200.0, 1e3, 1e5}) {
    const double t = wt / w;
    EXPECT_LT(std::abs(diffusion_integral(t, w, b) / (w * pi * t / 2) - 1.0), 0.03) << wt;
  }
  double prev = 0.0;
  for (double wt = 100.0; wt < 1e4; wt *= 1.3) {
    const double v = diffusion_integral(wt / w, w, b);
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Environment, DiffusionIntegralSmallTemperatureExcess) {
  const double w = 1.0, beta = 20.0;
  auto b0 = bath_T(1000.0);
  auto bT = bath_T(1000.0, 1.0 / beta);
  for (double t : {50.0, 200.0}) {
    const double excess = diffusion_integral(t, w, bT) - diffusion_integral(t, w, b0);
    // Oracle: direct adaptive quadrature of (t - s) cos(w s) N_thermal(s).
    auto r = quad::integrate_oscillatory(
        [&](double s) { return (t - s) * std::cos(w * s) * thermal_noise_kernel(s, beta); }, 0.0, t, w);
    EXPECT_NEAR(excess, r.value, 1e-8) << t;
    EXPECT_LT(std::abs(excess / (4.0 / (w * w * beta * beta)) - 1.0), 0.2) << t;
  }
}

TEST(Environment, CutoffRobustness) {
  const double w = 1.0;
  auto b1 = bath_T(1000.0), b2 = bath_T(2000.0);
  // The cos(Lambda t)/t remainder sets the scale: < 1% once omega t >~ 130.
  for (double wt : {150.0, 300.0, 1000.0}) {
    const double d1 = diffusion_coefficient(wt, w, b1), d2 = diffusion_coefficient(wt, w, b2);
    EXPECT_LT(std::abs(d2 / d1 - 1.0), 0.01) << wt;
  }
}

TEST(Environment, ThermalRegimeGuard) {
  auto b = bath_T(10.0, 1.0);  // beta * cutoff = 10
  EXPECT_THROW(diffusion_coefficient(1.0, 1.0, b), OutOfRegime);
}
