#pragma once

// Collapsing acoustic black hole on the line and its trapped characteristics.
//
// Fluid flows toward -x with speed v(x, t): supersonic (v = sigma v_max) for
// x < -a, subsonic (v = sigma v_min) for x > a and linear v = sigma (1 - kappa x)
// in between. The sound ray moving against the flow obeys dx/dt = 1 - v, so
// rays inside |x| < a peel away from the horizon at x = 0 at rate kappa: the
// hole interior is x < 0 and the Hawking partner of a point at x1 < 0 lies at x > 0.

#include <abh/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

namespace abh {

enum class SigmaKind { tanh, smoothstep };

inline std::string to_string(SigmaKind k) { return k == SigmaKind::tanh ? "tanh" : "smoothstep"; }

inline double sigma(double t, double tau_c, SigmaKind kind) {
  if (t <= 0) return 0.0;
  if (kind == SigmaKind::tanh) return std::tanh(t / tau_c);
  const double s = std::min(t / (3.0 * tau_c), 1.0);
  return s * s * (3.0 - 2.0 * s);
}

inline double sigma_rate(double t, double tau_c, SigmaKind kind) {
  if (t <= 0) return kind == SigmaKind::tanh ? 1.0 / tau_c : 0.0;
  if (kind == SigmaKind::tanh) {
    const double c = std::cosh(t / tau_c);
    return 1.0 / (tau_c * c * c);
  }
  const double s = t / (3.0 * tau_c);
  if (s >= 1.0) return 0.0;
  return 6.0 * s * (1.0 - s) / (3.0 * tau_c);
}

struct CollapseProfile {
  double a = 1.0;
  double kappa = 0.1;
  double v_min_c = 0.9;
  double v_max_c = 1.1;
  double tau_c = 1.0;
  SigmaKind sigma_kind = SigmaKind::tanh;

  // kappa from continuity, 1 + kappa a = v_max.
  static CollapseProfile from_velocities(double v_min, double v_max, double a, double tau_c = 1.0,
                                         SigmaKind kind = SigmaKind::tanh) {
    CollapseProfile p{a, (v_max - 1.0) / a, v_min, v_max, tau_c, kind};
    p.validate();
    return p;
  }

  // Same v_min/v_max pattern around 1 with a different surface gravity.
  static CollapseProfile from_kappa(double kappa, double a = 1.0, double tau_c = 1.0,
                                    SigmaKind kind = SigmaKind::tanh) {
    CollapseProfile p{a, kappa, 1.0 - kappa * a, 1.0 + kappa * a, tau_c, kind};
    p.validate();
    return p;
  }

  void validate() const {
    if (!(a > 0 && kappa > 0 && tau_c > 0))
      throw ConfigError("collapse profile requires a, kappa, tau_c > 0");
    const double tol = 1e-12 * std::max(1.0, std::abs(kappa * a));
    if (std::abs(1.0 - kappa * a - v_min_c) > tol || std::abs(1.0 + kappa * a - v_max_c) > tol)
      throw ConfigError("collapse profile must be continuous: 1 - kappa a = v_min, 1 + kappa a = v_max");
  }

  double sig(double t) const { return sigma(t, tau_c, sigma_kind); }

  double velocity(double x, double t) const {
    const double s = sig(t);
    if (x > a) return s * v_min_c;
    if (x < -a) return s * v_max_c;
    return s * (1.0 - kappa * x);
  }

  double velocity_x(double x, double t) const { return std::abs(x) < a ? -sig(t) * kappa : 0.0; }
};

inline double hawking_temperature(const CollapseProfile& p, double hbar = 1.0) {
  return hbar * p.kappa / (2.0 * std::numbers::pi);
}

struct Characteristic {
  double x0 = 0.0;
  std::vector<double> t;  // strictly monotone, starts at the initial time
  std::vector<double> x;
  bool crossed_boundary = false;
  double jacobian = 1.0;  // dx_end / dx_start

  double x_end() const { return x.back(); }
};

namespace collapse_detail {

// Piece index: 0 for x < -a, 1 for |x| <= a, 2 for x > a.
inline int piece_of(double x, double a) { return x < -a ? 0 : (x > a ? 2 : 1); }

// Ray speed c - v (c = +1 trapped family, -1 the other) with the piece formula
// extended past its edges.
inline double rhs(const CollapseProfile& p, int piece, double x, double t, double c = 1.0) {
  const double s = p.sig(t);
  switch (piece) {
    case 0: return c - s * p.v_max_c;
    case 2: return c - s * p.v_min_c;
    default: return c - s * (1.0 - p.kappa * x);
  }
}

inline double rhs_x(const CollapseProfile& p, int piece, double t) { return piece == 1 ? p.sig(t) * p.kappa : 0.0; }

struct State {
  double x, j;  // position and dx/dx_start
};

// Dormand-Prince 5(4) with embedded error and 4th-order dense output.
struct DP45 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;
  // Dense output coefficients (Hairer's contd5).
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

struct Step {
  double t0, h;
  State y0, y1;
  std::array<State, 7> k;
  double err;
};

template <class F>
Step dp_step(F& f, double t, const State& y, double h, const State& k1) {
  using C = DP45;
  Step s{t, h, y, {}, {}, 0.0};
  auto add = [&](std::initializer_list<std::pair<double, int>> terms, const std::array<State, 7>& k) {
    State r = y;
    for (auto [c, i] : terms) {
      r.x += h * c * k[i].x;
      r.j += h * c * k[i].j;
    }
    return r;
  };
  auto& k = s.k;
  k[0] = k1;
  k[1] = f(t + C::c2 * h, add({{C::a21, 0}}, k));
  k[2] = f(t + C::c3 * h, add({{C::a31, 0}, {C::a32, 1}}, k));
  k[3] = f(t + C::c4 * h, add({{C::a41, 0}, {C::a42, 1}, {C::a43, 2}}, k));
  k[4] = f(t + C::c5 * h, add({{C::a51, 0}, {C::a52, 1}, {C::a53, 2}, {C::a54, 3}}, k));
  k[5] = f(t + h, add({{C::a61, 0}, {C::a62, 1}, {C::a63, 2}, {C::a64, 3}, {C::a65, 4}}, k));
  s.y1 = add({{C::b1, 0}, {C::b3, 2}, {C::b4, 3}, {C::b5, 4}, {C::b6, 5}}, k);
  k[6] = f(t + h, s.y1);
  const double ex = h * (C::e1 * k[0].x + C::e3 * k[2].x + C::e4 * k[3].x + C::e5 * k[4].x + C::e6 * k[5].x +
                         C::e7 * k[6].x);
  const double ej = h * (C::e1 * k[0].j + C::e3 * k[2].j + C::e4 * k[3].j + C::e5 * k[4].j + C::e6 * k[5].j +
                         C::e7 * k[6].j);
  constexpr double tol = 1e-12;
  const double sx = tol * (1.0 + std::max(std::abs(y.x), std::abs(s.y1.x)));
  const double sj = tol * (1.0 + std::max(std::abs(y.j), std::abs(s.y1.j)));
  s.err = std::max(std::abs(ex) / sx, std::abs(ej) / sj);
  return s;
}

// Position at fraction th in [0, 1] of an accepted step.
inline double dense_x(const Step& s, double th) {
  using C = DP45;
  const auto& k = s.k;
  const double h = s.h;
  const double dy = s.y1.x - s.y0.x;
  const double bspl = h * k[0].x - dy;
  const double r5 = h * (C::d1 * k[0].x + C::d3 * k[2].x + C::d4 * k[3].x + C::d5 * k[4].x + C::d6 * k[5].x +
                         C::d7 * k[6].x);
  const double r4 = dy - h * k[6].x - bspl;
  const double th1 = 1.0 - th;
  return s.y0.x + th * (dy + th1 * (bspl + th * (r4 + th1 * r5)));
}

// Integrate from (t0, x0) to t1 (either direction), switching pieces at x = +-a.
inline Characteristic integrate(double x_start, double t0, double t1, const CollapseProfile& p, double cs = 1.0) {
  Characteristic c;
  c.x0 = x_start;
  c.t.push_back(t0);
  c.x.push_back(x_start);
  if (t1 == t0) return c;
  const double dir = t1 > t0 ? 1.0 : -1.0;

  auto piece_at = [&](double x, double t) {
    if (x > p.a || x < -p.a) return piece_of(x, p.a);
    // On a boundary: pick the side the ray is heading to.
    const int edge = x >= p.a ? 1 : (x <= -p.a ? -1 : 0);
    if (edge == 0) return 1;
    const double v = dir * rhs(p, 1, x, t, cs);
    if (edge > 0) return v > 0 ? 2 : 1;
    return v < 0 ? 0 : 1;
  };

  double t = t0;
  State y{x_start, 1.0};
  int piece = piece_at(y.x, t);
  auto f_for = [&](int pc) {
    return [&p, pc, cs](double tt, const State& s) {
      return State{rhs(p, pc, s.x, tt, cs), rhs_x(p, pc, tt) * s.j};
    };
  };
  double h = dir * std::min(0.01 * std::min(p.tau_c, 1.0 / p.kappa), std::abs(t1 - t0));
  long steps = 0;
  while (dir * (t1 - t) > 0) {
    auto f = f_for(piece);
    const State k1 = f(t, y);
    if (dir * (t + h - t1) > 0) h = t1 - t;
    const Step s = dp_step(f, t, y, h, k1);
    if (++steps > 50'000'000) throw StepFailure("characteristic integration exceeded step budget");
    if (s.err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(s.err, -0.2));
      if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) throw StepFailure("characteristic step size underflow");
      continue;
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double lo = piece == 0 ? -inf : (piece == 1 ? -p.a : p.a);
    const double hi = piece == 2 ? inf : (piece == 1 ? p.a : -p.a);
    const double x_end = s.y1.x;
    if (x_end < lo || x_end > hi) {
      // Locate the crossing inside the step with the dense output.
      const double target = x_end > hi ? hi : lo;
      double a_th = 0.0, b_th = 1.0;
      double fa = s.y0.x - target;
      for (int it = 0; it < 200 && (b_th - a_th) > 1e-15; ++it) {
        const double m = 0.5 * (a_th + b_th);
        const double fm = dense_x(s, m) - target;
        if ((fm > 0) == (fa > 0)) {
          a_th = m;
          fa = fm;
        } else {
          b_th = m;
        }
      }
      const double th = b_th;
      const double tc = t + th * s.h;
      // Redo the partial step exactly to carry the Jacobian to the crossing.
      const Step part = dp_step(f, t, y, th * s.h, k1);
      t = tc;
      y = State{target, part.y1.j};
      piece += target == hi ? 1 : -1;
      c.crossed_boundary = true;
      c.t.push_back(t);
      c.x.push_back(y.x);
      continue;
    }
    t += s.h;
    y = s.y1;
    c.t.push_back(t);
    c.x.push_back(y.x);
    const double fac = s.err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(s.err, -0.2), 0.2, 5.0);
    h = s.h * fac;
  }
  c.jacobian = y.j;
  return c;
}

}  // namespace collapse_detail

inline Characteristic solve_characteristic(double x0, double t_end, const CollapseProfile& profile) {
  if (!(t_end > 0)) throw ConfigError("t_end must be positive");
  return collapse_detail::integrate(x0, 0.0, t_end, profile);
}

// dx/dt = 1 - v (trapped, the Psi^- family) or -1 - v.
enum class RayFamily { trapped, counter };

// Ray through (x, t0) followed to t1 in either direction.
inline Characteristic propagate_ray(double x, double t0, double t1, const CollapseProfile& profile,
                                    RayFamily family = RayFamily::trapped) {
  return collapse_detail::integrate(x, t0, t1, profile, family == RayFamily::trapped ? 1.0 : -1.0);
}

struct TraceBack {
  double x0;
  double dx0_dx;  // derivative of the starting point with respect to x at fixed t
};

inline TraceBack trace_back_with_jacobian(double x, double t, const CollapseProfile& profile) {
  if (t <= 0) return {x, 1.0};
  const auto c = collapse_detail::integrate(x, t, 0.0, profile);
  return {c.x_end(), c.jacobian};
}

inline double trace_back(double x, double t, const CollapseProfile& profile) {
  return trace_back_with_jacobian(x, t, profile).x0;
}

enum class Region { hawking, trivial_flat };

inline std::string to_string(Region r) { return r == Region::hawking ? "hawking" : "trivial_flat"; }

inline Region classify_region(double x, double t, const CollapseProfile& profile) {
  return trace_back(x, t, profile) < profile.a ? Region::hawking : Region::trivial_flat;
}

// Position at time t of the boundary characteristic that starts at x0 = a.
inline double region_boundary(double t, const CollapseProfile& profile) {
  return t > 0 ? solve_characteristic(profile.a, t, profile).x_end() : profile.a;
}

// Psi^-_k(x, t) = exp(i k X0(x, t)) / sqrt(4 pi |k|), constant along characteristics.
inline std::complex<double> left_mode(double x, double t, double k, const CollapseProfile& profile) {
  if (k == 0.0) throw DegenerateMode("zero wavenumber has no normalized mode");
  const double x0 = trace_back(x, t, profile);
  return std::polar(1.0 / std::sqrt(4.0 * std::numbers::pi * std::abs(k)), k * x0);
}

}  // namespace abh
