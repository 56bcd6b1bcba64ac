#pragma once

// Momentum-momentum correlations of the trapped (left-moving) field in the
// collapse geometry, the first-order environment correction per mode and
// peak diagnostics.
//
// Pi^-_k = d_x Psi^-_k = i k X0'(x) e^{i k X0(x)} / sqrt(4 pi k) with X0 the
// traced-back starting point, so a pair (x1, x) correlates through
//   C(x1, x) = X0'(x1) X0'(x) S(X0(x1) - X0(x)),
//   S(D) = sum_k w_k k/(4 pi) coth(beta k/2) e^{-k/k_c} cos(k D).
// The exponential regulator replaces a hard cutoff at k_c, whose Gibbs tail
// k_c/D would otherwise dominate the 1/D^2 signal.

#include <abh/collapse.hpp>
#include <abh/environment.hpp>
#include <abh/errors.hpp>
#include <abh/parallel.hpp>
#include <abh/quadrature.hpp>
#include <abh/special.hpp>

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

namespace abh {

inline std::complex<double> momentum_minus(double x, double t, double k, const CollapseProfile& profile) {
  if (k == 0.0) throw DegenerateMode("zero wavenumber has no normalized mode");
  const auto tb = trace_back_with_jacobian(x, t, profile);
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * std::abs(k));
  return std::complex<double>(0.0, k * tb.dx0_dx * norm) * std::polar(1.0, k * tb.x0);
}

struct CorrelationSpec {
  double x1 = -10.0;
  std::vector<double> xs;
  double t = 100.0;
  double temperature = 0.0;  // k_B T, k_B = 1
  double hbar = 1.0;
  double delta_c = 0.1;      // regulator length, k_c = 1/delta_c
  double k_max_factor = 40.0;
  double window = 0.0;       // half-width X of the line; 0 selects 20 a + t
  int refine = 1;            // k spacing pi / (refine X)
  bool check_convergence = true;
  unsigned threads = 1;

  // Reference configuration scaled by a: x1 = -10a, xs = a..30a step a/10, t = 100 tau_c.
  static CorrelationSpec defaults(const CollapseProfile& p) {
    CorrelationSpec s;
    s.x1 = -10.0 * p.a;
    s.t = 100.0 * p.tau_c;
    s.delta_c = p.a / 10.0;
    for (int i = 10; i <= 300; ++i) s.xs.push_back(i * p.a / 10.0);
    return s;
  }

  double half_width(const CollapseProfile& p) const { return window > 0 ? window : 20.0 * p.a + t; }
  double k_min(const CollapseProfile& p) const { return std::numbers::pi / (refine * half_width(p)); }
};

enum class CorrelationKind { closed, open };

struct CorrelationGrid {
  double x1 = 0.0;
  std::vector<double> xs;
  double t = 0.0;
  double temperature = 0.0;
  std::vector<double> values;  // raw C
  std::vector<double> signal;  // C minus the flat same-time reference
  std::vector<Region> regions;
  CorrelationKind kind = CorrelationKind::closed;
};

// Discrete spectral sum S(D) on the k grid of a spec; trapezoid weights, with the
// k = 0 end carrying the finite limit of k coth(beta k/2).
class SpectralSum {
 public:
  SpectralSum(const CorrelationSpec& spec, const CollapseProfile& profile) {
    const double dk = spec.k_min(profile);
    const double kc = 1.0 / spec.delta_c;
    const double beta = spec.temperature > 0 ? spec.hbar / spec.temperature : std::numeric_limits<double>::infinity();
    const auto J = static_cast<std::size_t>(std::ceil(spec.k_max_factor * kc / dk));
    k_.reserve(J + 1);
    w_.reserve(J + 1);
    k_.push_back(0.0);
    w_.push_back(0.5 * dk * (std::isfinite(beta) ? 2.0 / beta : 0.0) / (4.0 * std::numbers::pi));
    for (std::size_t j = 1; j <= J; ++j) {
      const double k = j * dk;
      k_.push_back(k);
      w_.push_back(dk * env_detail::weighted_coth(k, beta) * std::exp(-k / kc) / (4.0 * std::numbers::pi));
    }
  }

  double operator()(double D) const {
    // Fixed summation order; cos(j dk D) by angle-addition recurrence with periodic reseeding.
    const double dk = k_.size() > 1 ? k_[1] : 0.0;
    const double c1 = std::cos(dk * D), s1 = std::sin(dk * D);
    double c = 1.0, s = 0.0, acc = 0.0;
    for (std::size_t j = 0; j < k_.size(); ++j) {
      if (j % 64 == 0) {
        c = std::cos(k_[j] * D);
        s = std::sin(k_[j] * D);
      }
      acc += w_[j] * c;
      const double cn = c * c1 - s * s1;
      s = s * c1 + c * s1;
      c = cn;
    }
    return acc;
  }

  std::size_t size() const { return k_.size(); }
  const std::vector<double>& wavenumbers() const { return k_; }
  // w_k k coth(beta k/2) e^{-k/k_c} / (4 pi)
  const std::vector<double>& weights() const { return w_; }

 private:
  std::vector<double> k_, w_;
};

struct PeakMetrics {
  double peak_x = std::numeric_limits<double>::quiet_NaN();
  double peak_height = 0.0;
  double fwhm = std::numeric_limits<double>::quiet_NaN();
  double background = 0.0;
  bool present = false;
};

namespace corr_detail {

inline CorrelationGrid evaluate(const CorrelationSpec& spec, const CollapseProfile& profile) {
  if (spec.xs.empty()) throw ConfigError("correlation grid needs at least one x");
  CorrelationGrid g;
  g.x1 = spec.x1;
  g.xs = spec.xs;
  g.t = spec.t;
  g.temperature = spec.temperature;
  const SpectralSum S(spec, profile);
  const auto tb1 = trace_back_with_jacobian(spec.x1, spec.t, profile);
  g.values.resize(spec.xs.size());
  g.signal.resize(spec.xs.size());
  g.regions.resize(spec.xs.size());
  parallel_for(spec.xs.size(), spec.threads, [&](std::size_t i) {
    const double x = spec.xs[i];
    const auto tb = trace_back_with_jacobian(x, spec.t, profile);
    g.values[i] = tb1.dx0_dx * tb.dx0_dx * S(tb1.x0 - tb.x0);
    g.signal[i] = g.values[i] - S(spec.x1 - x);
    g.regions[i] = tb.x0 < profile.a ? Region::hawking : Region::trivial_flat;
  });
  return g;
}

}  // namespace corr_detail

// Extremum of |signal| over hawking points at least 2a from x1; present when it
// exceeds 3x the median |signal| of the non-excluded grid and 1e-3 of the flat
// reference at that separation (a featureless signal is then reported absent).
inline PeakMetrics peak_metrics(const CorrelationGrid& g, const CollapseProfile& profile,
                                const CorrelationSpec& spec) {
  PeakMetrics m;
  const double excl = 2.0 * profile.a;
  std::vector<double> bg;
  std::size_t best = g.xs.size();
  for (std::size_t i = 0; i < g.xs.size(); ++i) {
    if (std::abs(g.xs[i] - g.x1) < excl) continue;
    bg.push_back(std::abs(g.signal[i]));
    if (g.regions[i] == Region::hawking && (best == g.xs.size() || std::abs(g.signal[i]) > std::abs(g.signal[best])))
      best = i;
  }
  if (bg.empty() || best == g.xs.size()) return m;
  std::nth_element(bg.begin(), bg.begin() + bg.size() / 2, bg.end());
  m.background = bg[bg.size() / 2];
  m.peak_x = g.xs[best];
  m.peak_height = std::abs(g.signal[best]);

  // Width at half height, linear interpolation on each side.
  const double half = 0.5 * m.peak_height;
  auto cross = [&](int dir) {
    for (long i = static_cast<long>(best); i + dir >= 0 && i + dir < static_cast<long>(g.xs.size()); i += dir) {
      const double a = std::abs(g.signal[i]), b = std::abs(g.signal[i + dir]);
      if (b < half) return g.xs[i] + (g.xs[i + dir] - g.xs[i]) * (a - half) / (a - b);
    }
    return std::numeric_limits<double>::quiet_NaN();
  };
  m.fwhm = cross(+1) - cross(-1);

  const SpectralSum S(spec, profile);
  const double floor = 1e-3 * std::abs(S(g.x1 - m.peak_x));
  m.present = m.peak_height > 3.0 * m.background && m.peak_height > floor;
  return m;
}

// Closed-system correlation map. With check_convergence the k spacing is halved
// and the peak height (raw value at the peak when no peak is present) must move
// by less than 1%.
inline CorrelationGrid closed_correlation(const CorrelationSpec& spec, const CollapseProfile& profile) {
  auto g = corr_detail::evaluate(spec, profile);
  if (spec.check_convergence) {
    auto fine_spec = spec;
    fine_spec.refine *= 2;
    const auto fine = corr_detail::evaluate(fine_spec, profile);
    const auto m = peak_metrics(g, profile, spec);
    const auto mf = peak_metrics(fine, profile, fine_spec);
    double a, b;
    if (m.present) {
      a = m.peak_height;
      b = mf.peak_height;
    } else {
      std::size_t i = 0;
      for (std::size_t j = 0; j < g.xs.size(); ++j)
        if (std::abs(g.signal[j]) > std::abs(g.signal[i])) i = j;
      a = g.values[i];
      b = fine.values[i];
    }
    if (std::abs(a - b) > 0.01 * std::max(std::abs(a), std::abs(b)))
      throw NonConvergentSum("correlation changes by more than 1% when the k grid is refined");
  }
  return g;
}

// ---- open system, first order in gamma^2 ----
//
// Each mode is a bath-coupled oscillator of frequency omega = |k| with
// q'' + omega^2 q = xi - int D q, <xi xi> = hbar gamma^2 N. The chiral mode enters
// the Pi-Pi sum through its symmetrized occupation <{a, a^+}> hbar omega =
// omega^2 <q^2> + <p^2>, which is hbar omega coth(beta omega/2) when closed.
// To first order
//   d_noise = hbar gamma^2 2 int_0^t N(s) (t - s) cos(omega s) ds
//   d_diss  = hbar gamma^2 coth(beta omega/2) int_0^t D(s) (t - s) sin(omega s) ds
// (the q and p overlaps combine, their 2 omega t pieces cancel). Both weights
// vanish at s = t and the sine one at s = 0, so integrating the cutoff kernels
// by parts leaves no boundary terms.

struct OpenModeCorrection {
  double C_c = 0.0;  // hbar omega <{a, a^+}> of the closed mode
  double dC_noise = 0.0;
  double dC_diss = 0.0;
  double C_o = 0.0;
};

namespace corr_detail {

// sin(a s)/s, finite at s = 0.
inline double sin_over(double a, double s) {
  const double x = a * s;
  if (std::abs(x) < 1e-4) return a * (1.0 - x * x / 6.0);
  return std::sin(x) / s;
}

// c(s) = (t - s) cos ws, b(s) = (t - s) sin ws and the divided differences
// (c'(s) - c'(0))/s, (b'(s) - b'(0))/s in cancellation-free form.
struct Overlaps {
  double w, t;
  double c(double s) const { return (t - s) * std::cos(w * s); }
  double dc0() const { return -1.0; }
  double db0() const { return w * t; }
  double hc(double s) const {
    return 2.0 * std::sin(0.5 * w * s) * sin_over(0.5 * w, s) - w * (t - s) * sin_over(w, s);
  }
  double hb(double s) const {
    return -sin_over(w, s) - 2.0 * w * t * std::sin(0.5 * w * s) * sin_over(0.5 * w, s) - w * std::cos(w * s);
  }
};

inline int filon_panels(double w, double t) { return 64 + static_cast<int>(12.0 * w * t); }

}  // namespace corr_detail

inline OpenModeCorrection open_correction(double k, double t, const OhmicBath& bath) {
  const double w = std::abs(k);
  if (w == 0.0) throw DegenerateMode("zero wavenumber mode");
  const double beta = bath.beta_th();
  const double cth = std::isfinite(beta) ? 1.0 / std::tanh(0.5 * beta * w) : 1.0;
  OpenModeCorrection r;
  r.C_c = bath.hbar * w * cth;
  r.C_o = r.C_c;
  if (t <= 0 || bath.gamma == 0.0) return r;
  env_detail::require_thermal_regime(bath);

  const double L = bath.cutoff;
  const corr_detail::Overlaps ov{w, t};
  const double dc0 = ov.dc0(), db0 = ov.db0();
  auto hc = [&](double s) { return ov.hc(s); };
  auto hb = [&](double s) { return ov.hb(s); };
  quad::Options opt;
  opt.rel_tol = 1e-10;
  opt.abs_tol = 1e-14 * (1.0 + w * t);
  const int panels = corr_detail::filon_panels(w, t);

  // Zero-temperature noise kernel N0 = d/ds[(1 - cos L s)/s], integrated by parts.
  const double smooth_c = quad::integrate_oscillatory(hc, 0.0, t, w, opt).value;
  const double n0 = -2.0 * (dc0 * special::Cin(L * t) + smooth_c - quad::filon_cos(hc, 0.0, t, L, panels));
  double n_th = 0.0;
  if (std::isfinite(beta)) {
    auto f = [&](double s) { return thermal_noise_kernel(s, beta) * ov.c(s); };
    n_th = 2.0 * quad::integrate_oscillatory(f, 0.0, t, w, opt).value;
  }
  // D = -d/ds[sin(L s)/s].
  const double d0 = db0 * special::Si(L * t) + quad::filon_sin(hb, 0.0, t, L, panels);

  const double g2 = bath.gamma * bath.gamma;
  r.dC_noise = bath.hbar * g2 * (n0 + n_th);
  r.dC_diss = bath.hbar * g2 * cth * d0;
  r.C_o = r.C_c + r.dC_noise + r.dC_diss;
  return r;
}

inline double relative_environment_contribution(double k, double t, const OhmicBath& bath) {
  const auto r = open_correction(k, t, bath);
  if (!(std::abs(r.C_c) > 1e-300)) throw DegenerateMode("closed-system mode correlation vanishes");
  return std::abs((r.C_c - r.C_o) / r.C_c);
}

// First time e_r(k, t) reaches level, searched on a log bracket up to t_max.
inline double er_crossing_time(double k, const OhmicBath& bath, double level, double t_lo, double t_max) {
  auto f = [&](double t) { return relative_environment_contribution(k, t, bath) - level; };
  double a = t_lo, fa = f(a);
  if (fa >= 0) return a;
  double b = a;
  double fb = fa;
  while (fb < 0) {
    if (b >= t_max) throw NoRoot("e_r does not reach the requested level", b);
    a = b;
    fa = fb;
    b = std::min(2.0 * b, t_max);
    fb = f(b);
  }
  std::uintmax_t iters = 100;
  auto [lo, hi] = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(30), iters);
  return 0.5 * (lo + hi);
}

}  // namespace abh
