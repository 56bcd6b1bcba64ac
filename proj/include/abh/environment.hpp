#pragma once

// Ohmic quantum-Brownian-motion bath: noise and dissipation kernels and the
// master-equation diffusion coefficient. Kernels are returned per unit gamma^2.
//
// The bath spectral weight gamma~^2/(nu I(nu)) = gamma^2 nu is cut off sharply
// at nu = cutoff. Thermal contributions use the closed form of
// int_0^inf 2 nu cos(nu s)/(e^{beta nu} - 1) dnu, which differs from the
// cut-off integral by O(exp(-beta*cutoff)); evaluation refuses beta*cutoff < 40.

#include <abh/errors.hpp>
#include <abh/geometry.hpp>
#include <abh/quadrature.hpp>
#include <abh/special.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace abh {

struct OhmicBath {
  double zeta = 0.0;
  double gamma = 0.0;
  double temperature = 0.0;  // k_B T in energy units, k_B = 1
  double hbar = 1.0;
  double cutoff = 1.0;       // hard UV cutoff Lambda

  // beta = hbar/(k_B T); +inf at T = 0.
  double beta_th() const {
    return temperature > 0 ? hbar / temperature : std::numeric_limits<double>::infinity();
  }
  bool zero_temperature() const { return !(temperature > 0); }

  void validate() const {
    if (!(zeta >= 0 && temperature >= 0 && cutoff > 0 && gamma >= 0))
      throw ConfigError("bath requires zeta >= 0, temperature >= 0, cutoff > 0");
  }
};

inline double coupling_from_zeta(double zeta, const PhysParams& params, double delta_v) {
  return zeta * std::sqrt(2.0 * params.rho / params.hbar) * delta_v;
}

inline double coupling_from_zeta(double zeta, const PhysParams& params, const RingProfile& profile) {
  return coupling_from_zeta(zeta, params, profile.v_max - profile.v_min);
}

inline OhmicBath make_bath(double zeta, const PhysParams& params, double delta_v,
                           double temperature, double cutoff) {
  OhmicBath b{zeta, coupling_from_zeta(zeta, params, delta_v), temperature, params.hbar, cutoff};
  b.validate();
  return b;
}

namespace env_detail {

// nu * coth(beta nu / 2), finite at nu = 0.
inline double weighted_coth(double nu, double beta) {
  if (!std::isfinite(beta)) return nu;
  const double x = 0.5 * beta * nu;
  if (x < 1e-8) return 2.0 / beta + nu * x / 3.0;
  if (x > 40.0) return nu;
  return nu / std::tanh(x);
}

inline void require_thermal_regime(const OhmicBath& bath) {
  if (!bath.zero_temperature() && bath.beta_th() * bath.cutoff < 40.0)
    throw OutOfRegime("temperature is not small compared with the bath cutoff");
}

}  // namespace env_detail

// Thermal part of the noise kernel, int_0^inf nu (coth(beta nu/2) - 1) cos(nu s) dnu
//   = 1/s^2 - (pi/beta)^2 / sinh^2(pi s/beta).
inline double thermal_noise_kernel(double s, double beta) {
  if (!std::isfinite(beta)) return 0.0;
  const double k = std::numbers::pi / beta;
  const double y = k * std::abs(s);
  if (y < 0.02) {
    const double y2 = y * y;
    return k * k * (1.0 / 3.0 - y2 / 15.0 + 2.0 * y2 * y2 / 189.0);
  }
  if (y > 350.0) return 1.0 / (s * s);
  const double sh = std::sinh(y);
  return 1.0 / (s * s) - k * k / (sh * sh);
}

// Closed form of the cut-off noise kernel at separation s = t - t'.
inline double noise_kernel_closed(double s, const OhmicBath& bath) {
  const double L = bath.cutoff;
  const double x = L * s;
  double zero_t;
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    zero_t = L * L * (0.5 - x2 / 8.0 + x2 * x2 / 144.0);
  } else {
    zero_t = (x * std::sin(x) + std::cos(x) - 1.0) / (s * s);
  }
  if (bath.zero_temperature()) return zero_t;
  env_detail::require_thermal_regime(bath);
  return zero_t + thermal_noise_kernel(s, bath.beta_th());
}

// N(t, t') = int_0^Lambda nu coth(beta nu/2) cos(nu (t - t')) dnu by quadrature.
inline double noise_kernel(double t, double tprime, const OhmicBath& bath) {
  const double s = std::abs(t - tprime);
  const double beta = bath.beta_th();
  auto f = [&](double nu) { return env_detail::weighted_coth(nu, beta) * std::cos(nu * s); };
  quad::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12 * bath.cutoff * bath.cutoff;
  opt.max_subdivisions = 200000;
  return quad::integrate_oscillatory(f, 0.0, bath.cutoff, s, opt).value;
}

// Closed form of the cut-off dissipation kernel; zero for t < t'.
inline double dissipation_kernel_closed(double s, const OhmicBath& bath) {
  if (s <= 0) return 0.0;
  const double L = bath.cutoff;
  const double x = L * s;
  if (x < 1e-3) {
    const double x2 = x * x;
    return L * L * x * (1.0 / 3.0 - x2 / 30.0);
  }
  return (std::sin(x) - x * std::cos(x)) / (s * s);
}

// D(t, t') = Theta(t - t') int_0^Lambda nu sin(nu (t - t')) dnu by quadrature.
inline double dissipation_kernel(double t, double tprime, const OhmicBath& bath) {
  const double s = t - tprime;
  if (s <= 0) return 0.0;
  auto f = [&](double nu) { return nu * std::sin(nu * s); };
  quad::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-12 * bath.cutoff * bath.cutoff;
  opt.max_subdivisions = 200000;
  return quad::integrate_oscillatory(f, 0.0, bath.cutoff, s, opt).value;
}

namespace env_detail {

// Panel count for Filon over [0, s0] where the thermal kernel varies on beta/pi.
inline int thermal_panels(double s0, double beta) {
  const double scale = beta / std::numbers::pi;
  return std::clamp(static_cast<int>(80.0 * s0 / scale) + 64, 64, 4000);
}

// Zero-temperature part of d(t), exact for the hard cutoff.
inline double diffusion_zero_t(double t, double w, double L) {
  using special::Si;
  const double a = (std::cos(w * t) - std::cos((L - w) * t)) / t + w * (Si((L - w) * t) + Si(w * t));
  const double b = (std::cos(w * t) - std::cos((L + w) * t)) / t - w * (Si((L + w) * t) - Si(w * t));
  return 0.5 * (a + b);
}

// G(x) = int (1 - cos(x t))/x^2 dx.
inline double fejer_antiderivative(double x, double t) {
  if (x == 0.0) return 0.0;
  return -(1.0 - std::cos(x * t)) / x + t * special::Si(x * t);
}

// Zero-temperature part of int_0^t d(t') dt', exact for the hard cutoff.
inline double diffusion_integral_zero_t(double t, double w, double L) {
  using special::Cin;
  const double a = (Cin((L - w) * t) - Cin(w * t)) +
                   w * (fejer_antiderivative(L - w, t) - fejer_antiderivative(-w, t));
  const double b = (Cin((L + w) * t) - Cin(w * t)) -
                   w * (fejer_antiderivative(L + w, t) - fejer_antiderivative(w, t));
  return 0.5 * (a + b);
}

// int_{s0}^{s1} cos(w s)/s^2 ds
inline double cos_over_s2(double s0, double s1, double w) {
  auto F = [w](double s) { return -std::cos(w * s) / s - w * special::Si(w * s); };
  return F(s1) - F(s0);
}

// int_{s0}^{s1} cos(w s)/s ds
inline double cos_over_s(double s0, double s1, double w) {
  return special::Ci(w * s1) - special::Ci(w * s0);
}

}  // namespace env_detail

// d(t) = int_0^t cos(omega s) N(t, t - s) ds, per unit gamma^2.
//
// The zero-temperature part is exact (time integral done first, leaving sine
// integrals); the thermal part is a Filon integral of the closed-form thermal
// kernel over a few thermal times plus an exact 1/s^2 tail.
inline double diffusion_coefficient(double t, double omega, const OhmicBath& bath) {
  if (t <= 0) return 0.0;
  double d = env_detail::diffusion_zero_t(t, omega, bath.cutoff);
  if (bath.zero_temperature()) return d;
  env_detail::require_thermal_regime(bath);
  const double beta = bath.beta_th();
  const double s0 = std::min(t, 6.0 * beta);
  d += quad::filon_cos([beta](double s) { return thermal_noise_kernel(s, beta); }, 0.0, s0, omega,
                       env_detail::thermal_panels(s0, beta));
  if (t > s0) d += env_detail::cos_over_s2(s0, t, omega);
  return d;
}

// int_0^T d(t) dt = int_0^T (T - s) cos(omega s) N(s) ds, per unit gamma^2.
inline double diffusion_integral(double t_upper, double omega, const OhmicBath& bath) {
  if (t_upper <= 0) return 0.0;
  const double t = t_upper;
  double D = env_detail::diffusion_integral_zero_t(t, omega, bath.cutoff);
  if (bath.zero_temperature()) return D;
  env_detail::require_thermal_regime(bath);
  const double beta = bath.beta_th();
  const double s0 = std::min(t, 6.0 * beta);
  D += quad::filon_cos([beta, t](double s) { return (t - s) * thermal_noise_kernel(s, beta); }, 0.0,
                       s0, omega, env_detail::thermal_panels(s0, beta));
  if (t > s0)
    D += t * env_detail::cos_over_s2(s0, t, omega) - env_detail::cos_over_s(s0, t, omega);
  return D;
}

// Lower bound used by the small-temperature closed form:
// omega pi t / 2 + 4 / (omega^2 beta^2).
inline double diffusion_integral_small_t_bound(double t_upper, double omega, const OhmicBath& bath) {
  const double beta = bath.beta_th();
  const double thermal = std::isfinite(beta) ? 4.0 / (omega * omega * beta * beta) : 0.0;
  return omega * std::numbers::pi * t_upper / 2.0 + thermal;
}

// Literal nested route: outer quadrature over s of cos(omega s) times the
// quadrature noise kernel. Cost grows like (cutoff * t)^2; meant for
// cross-checks at moderate cutoff.
inline double diffusion_coefficient_nested(double t, double omega, const OhmicBath& bath) {
  if (t <= 0) return 0.0;
  auto f = [&](double s) { return std::cos(omega * s) * noise_kernel(t, t - s, bath); };
  quad::Options opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-10 * bath.cutoff;
  opt.max_subdivisions = 100000;
  opt.fail_rel = 1e-5;
  return quad::integrate_oscillatory(f, 0.0, t, bath.cutoff, opt).value;
}

}  // namespace abh
