#pragma once

// Ring velocity profile, acoustic null coordinates and mode quantization.
//
// Positions on the ring are arc lengths x = R*theta with R = L/(2*pi).
// Velocities are in the same units as the sound speed c.

#include <abh/errors.hpp>
#include <abh/quadrature.hpp>

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace abh {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

struct PhysParams {
  double c = 1.0;
  double L = two_pi;
  int n_ions = 1000;
  double rho = 1.0;
  double hbar = 1.0;
  double tau = two_pi;  // one revolution at mean speed c when L = 2*pi

  double delta() const { return L / n_ions; }
  double radius() const { return L / two_pi; }

  void validate() const {
    if (!(c > 0 && L > 0 && n_ions >= 2 && rho > 0 && hbar > 0 && tau > 0))
      throw ConfigError("physical parameters must satisfy c, L, rho, hbar, tau > 0 and n_ions >= 2");
  }
};

struct RingProfile {
  double v_min = 0.0;
  double v_max = 0.0;
  double theta_H = std::numbers::pi / 2;
  double gamma1 = 0.05 * two_pi;
  double gamma2 = 0.05 * two_pi;

  double beta_p() const { return 0.5 * (v_max + v_min); }
  double alpha_p() const { return 0.5 * (v_max - v_min); }

  // Angular junctions between the five pieces, increasing in [0, 2*pi].
  std::array<double, 6> junctions() const {
    return {0.0, theta_H - gamma1, theta_H + gamma1, two_pi - theta_H - gamma2,
            two_pi - theta_H + gamma2, two_pi};
  }

  void validate() const {
    if (!(gamma1 > 0 && gamma2 > 0))
      throw ConfigError("ring profile transition widths must be positive");
    const auto j = junctions();
    for (std::size_t i = 0; i + 1 < j.size(); ++i)
      if (j[i + 1] < j[i]) throw ConfigError("ring profile pieces overlap");
  }

  // Mean of v over the ring. The ramps average to beta_p, so only theta_H matters.
  double mean_velocity() const {
    return (v_min * 2.0 * theta_H + v_max * (two_pi - 2.0 * theta_H)) / two_pi;
  }

  // Mean speed demanded by one revolution per period tau.
  static double revolution_speed(const PhysParams& p) { return p.L / p.tau; }

  double revolution_mismatch(const PhysParams& p) const {
    return mean_velocity() - revolution_speed(p);
  }

  // Profile with v_max solved from the revolution constraint.
  static RingProfile constrained(double v_min, const PhysParams& p,
                                 double theta_H = std::numbers::pi / 2,
                                 double gamma1 = 0.05 * two_pi,
                                 double gamma2 = 0.05 * two_pi) {
    RingProfile r{v_min, 0.0, theta_H, gamma1, gamma2};
    r.v_max = (two_pi * revolution_speed(p) - 2.0 * theta_H * v_min) / (two_pi - 2.0 * theta_H);
    r.validate();
    return r;
  }
};

enum class Branch { u, v };

inline std::string to_string(Branch b) { return b == Branch::u ? "u" : "v"; }

struct ModeSpec {
  Branch branch = Branch::u;
  int n = 1;
  double omega = 0.0;
};

inline double profile_velocity(const RingProfile& p, double theta) {
  theta = std::fmod(theta, two_pi);
  if (theta < 0) theta += two_pi;
  const auto j = p.junctions();
  if (theta <= j[1]) return p.v_min;
  if (theta <= j[2]) return p.beta_p() + p.alpha_p() * (theta - p.theta_H) / p.gamma1;
  if (theta <= j[3]) return p.v_max;
  if (theta <= j[4])
    return p.beta_p() - p.alpha_p() * (theta - two_pi + p.theta_H) / p.gamma2;
  return p.v_min;
}

// Piecewise-exact null coordinate x_branch(x) = int_0^x dx'/(c +- v(x')).
class NullCoordinate {
 public:
  NullCoordinate(const RingProfile& profile, const PhysParams& params, Branch branch)
      : c_(params.c), L_(params.L), sign_(branch == Branch::u ? 1.0 : -1.0) {
    const double R = params.radius();
    const auto j = profile.junctions();
    cumulative_[0] = 0.0;
    for (std::size_t i = 0; i < 5; ++i) {
      x_[i] = j[i] * R;
      // Evaluate each piece's own formula at its endpoints.
      v0_[i] = piece_velocity(profile, i, j[i]);
      v1_[i] = piece_velocity(profile, i, j[i + 1]);
    }
    x_[5] = j[5] * R;
    for (std::size_t i = 0; i < 5; ++i)
      cumulative_[i + 1] = cumulative_[i] + piece_integral(i, x_[i], x_[i + 1]);
  }

  // Total period P = x_branch(L).
  double period() const { return cumulative_[5]; }

  double operator()(double x) const {
    const double turns = std::floor(x / L_);
    double r = x - turns * L_;
    if (r >= L_) r = 0.0;
    double acc = turns * period();
    for (std::size_t i = 0; i < 5; ++i) {
      if (r <= x_[i + 1] || i == 4) {
        acc += cumulative_[i] + piece_integral(i, x_[i], std::min(r, x_[i + 1]));
        break;
      }
    }
    return acc;
  }

  double inverse_speed(double x) const {
    double r = std::fmod(x, L_);
    if (r < 0) r += L_;
    for (std::size_t i = 0; i < 5; ++i)
      if (r <= x_[i + 1] || i == 4) return 1.0 / denom(i, r);
    return 0.0;
  }

  const std::array<double, 6>& breakpoints() const { return x_; }

 private:
  static double piece_velocity(const RingProfile& p, std::size_t piece, double theta) {
    switch (piece) {
      case 0: case 4: return p.v_min;
      case 2: return p.v_max;
      case 1: return p.beta_p() + p.alpha_p() * (theta - p.theta_H) / p.gamma1;
      default: return p.beta_p() - p.alpha_p() * (theta - two_pi + p.theta_H) / p.gamma2;
    }
  }

  double denom(std::size_t i, double x) const {
    const double len = x_[i + 1] - x_[i];
    const double s = len > 0 ? (x - x_[i]) / len : 0.0;
    return c_ + sign_ * (v0_[i] + s * (v1_[i] - v0_[i]));
  }

  // int_{xa}^{xb} dx / (c +- v(x)) on piece i, exact for linear v.
  double piece_integral(std::size_t i, double xa, double xb) const {
    if (xb <= xa) return 0.0;
    const double da = denom(i, xa), db = denom(i, xb);
    if (da == 0.0 || db == 0.0 || (da > 0) != (db > 0))
      throw HorizonSingular("null coordinate integrand diverges at a sonic point");
    const double rel = (db - da) / da;
    if (std::abs(rel) < 1e-8) return (xb - xa) / da * (1.0 - 0.5 * rel + rel * rel / 3.0);
    return (xb - xa) * std::log(db / da) / (db - da);
  }

  double c_, L_, sign_;
  std::array<double, 6> x_{};
  std::array<double, 5> v0_{}, v1_{};
  std::array<double, 6> cumulative_{};
};

inline double null_coordinate(const RingProfile& profile, const PhysParams& params, double x,
                              Branch branch) {
  return NullCoordinate(profile, params, branch)(x);
}

// Ring-periodic frequencies omega_n = 2 pi n / |P|, truncated where the
// null-coordinate wavelength reaches the ion spacing (exactly n_ions modes).
inline std::vector<ModeSpec> allowed_frequencies(const RingProfile& profile,
                                                 const PhysParams& params, Branch branch) {
  const double period = std::abs(NullCoordinate(profile, params, branch).period());
  std::vector<ModeSpec> modes;
  modes.reserve(params.n_ions);
  for (int n = 1; n <= params.n_ions; ++n) modes.push_back({branch, n, two_pi * n / period});
  return modes;
}

inline double omega_max(const RingProfile& profile, const PhysParams& params, Branch branch) {
  const double period = std::abs(NullCoordinate(profile, params, branch).period());
  const double c_eff = params.L / period;
  return two_pi * c_eff / params.delta();
}

// V = int_0^L cos^2(omega x_branch(x)) dx.
inline double geometric_factor_V(const ModeSpec& mode, const RingProfile& profile,
                                  const PhysParams& params) {
  const NullCoordinate xb(profile, params, mode.branch);
  const auto& bp = xb.breakpoints();
  // At least a few panels per oscillation so the adaptive driver starts resolved.
  const double phase_total = std::abs(mode.omega * xb.period());
  const int per_len = std::max(8, static_cast<int>(4.0 * phase_total / two_pi));
  std::vector<double> breaks;
  for (std::size_t i = 0; i < 5; ++i) {
    const double len = bp[i + 1] - bp[i];
    if (len <= 0) continue;
    const int k = std::max(1, static_cast<int>(std::ceil(per_len * len / params.L)));
    for (int j = 0; j < k; ++j) breaks.push_back(bp[i] + len * j / k);
  }
  breaks.push_back(bp[5]);
  quad::Options opt;
  opt.rel_tol = 1e-8;
  auto f = [&](double x) {
    const double c = std::cos(mode.omega * xb(x));
    return c * c;
  };
  return quad::integrate_panels(f, breaks, opt).value;
}

}  // namespace abh
