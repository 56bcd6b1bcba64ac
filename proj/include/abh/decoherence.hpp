#pragma once

// Decoherence time of a single ring mode: Gamma, the closed forms and the
// numeric root of the decoherence condition, plus parameter sweeps.
//
// Normalization: Gamma = gamma^2 V rho delta^2 / 2 and the condition is solved
// as (2 Gamma / hbar) int_0^t d = 1, which is the form whose large-omega t limit
// is t_D = 2 hbar / (gamma^2 rho delta^2 omega pi V).

#include <abh/environment.hpp>
#include <abh/errors.hpp>
#include <abh/geometry.hpp>
#include <abh/parallel.hpp>

#include <boost/math/tools/roots.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace abh {

enum class TdMethod { closed_form_T0, closed_form_smallT, numeric_root };

inline std::string to_string(TdMethod m) {
  switch (m) {
    case TdMethod::closed_form_T0: return "closed_form_T0";
    case TdMethod::closed_form_smallT: return "closed_form_smallT";
    case TdMethod::numeric_root: return "numeric_root";
  }
  return "?";
}

struct DecoherenceResult {
  double t_D = 0.0;
  TdMethod method = TdMethod::numeric_root;
  ModeSpec mode;
  double V = 0.0;
  double Gamma = 0.0;
  bool converged = false;
  double omega_tD_product = 0.0;
  double residual = 0.0;  // (2 Gamma/hbar) int_0^t_D d, numeric route only
};

// t_D >= 100 tau: the field survives long enough to be measured.
inline bool measurement_feasible(const DecoherenceResult& r, const PhysParams& params) {
  return r.converged && r.t_D >= 100.0 * params.tau;
}

inline double gamma_factor(double V, const PhysParams& params, const OhmicBath& bath) {
  const double d = params.delta();
  return bath.gamma * bath.gamma * V * params.rho * d * d / 2.0;
}

inline double gamma_factor(const ModeSpec& mode, const RingProfile& profile, const PhysParams& params,
                           const OhmicBath& bath) {
  return gamma_factor(geometric_factor_V(mode, profile, params), params, bath);
}

namespace deco_detail {

inline DecoherenceResult base_result(const ModeSpec& mode, double V, const PhysParams& params,
                                     const OhmicBath& bath, TdMethod method) {
  DecoherenceResult r;
  r.mode = mode;
  r.V = V;
  r.Gamma = gamma_factor(V, params, bath);
  r.method = method;
  return r;
}

inline double t0_closed(double omega, double V, const PhysParams& params, const OhmicBath& bath) {
  if (!(bath.gamma > 0)) throw ZeroCoupling("gamma = 0: no decoherence (t_D infinite)");
  const double d = params.delta();
  return 2.0 * params.hbar / (bath.gamma * bath.gamma * params.rho * d * d * omega * std::numbers::pi * V);
}

}  // namespace deco_detail

// Small-temperature shift -4/(omega^3 pi beta^2), as published.
inline double small_temperature_correction(double omega, double beta) {
  if (!std::isfinite(beta)) return 0.0;
  return -4.0 / (omega * omega * omega * std::numbers::pi * beta * beta);
}

inline DecoherenceResult decoherence_time_T0(const ModeSpec& mode, double V, const PhysParams& params,
                                             const OhmicBath& bath) {
  auto r = deco_detail::base_result(mode, V, params, bath, TdMethod::closed_form_T0);
  r.t_D = deco_detail::t0_closed(mode.omega, V, params, bath);
  r.converged = true;
  r.omega_tD_product = mode.omega * r.t_D;
  return r;
}

inline DecoherenceResult decoherence_time_T0(const ModeSpec& mode, const RingProfile& profile,
                                             const PhysParams& params, const OhmicBath& bath) {
  return decoherence_time_T0(mode, geometric_factor_V(mode, profile, params), params, bath);
}

// Leading term minus 4/(omega^3 pi beta^2). The expansion assumes the mode
// itself is thermally empty (coth(beta omega/2) ~ 1); a populated mode
// decoheres faster by ~tanh(beta omega/2), which the formula cannot express.
inline DecoherenceResult decoherence_time_smallT(const ModeSpec& mode, double V, const PhysParams& params,
                                                 const OhmicBath& bath) {
  auto r = deco_detail::base_result(mode, V, params, bath, TdMethod::closed_form_smallT);
  const double lead = deco_detail::t0_closed(mode.omega, V, params, bath);
  const double beta = bath.beta_th();
  const double corr = small_temperature_correction(mode.omega, beta);
  if (std::abs(corr) >= 0.25 * lead)
    throw OutOfRegime("small-temperature correction exceeds 25% of the leading term");
  if (std::isfinite(beta) && 1.0 / std::tanh(0.5 * beta * mode.omega) - 1.0 > 0.05)
    throw OutOfRegime("mode is thermally populated; small-temperature expansion does not apply");
  r.t_D = lead + corr;
  r.converged = true;
  r.omega_tD_product = mode.omega * r.t_D;
  return r;
}

inline DecoherenceResult decoherence_time_smallT(const ModeSpec& mode, const RingProfile& profile,
                                                 const PhysParams& params, const OhmicBath& bath) {
  return decoherence_time_smallT(mode, geometric_factor_V(mode, profile, params), params, bath);
}

// Root of (2 Gamma/hbar) int_0^t d - 1. The bracket grows geometrically from
// t = 1/omega; a root below one period is located but not trusted physically.
inline DecoherenceResult decoherence_time_numeric(const ModeSpec& mode, double V, const PhysParams& params,
                                                  const OhmicBath& bath) {
  auto r = deco_detail::base_result(mode, V, params, bath, TdMethod::numeric_root);
  if (!(bath.gamma > 0)) throw ZeroCoupling("gamma = 0: no decoherence (t_D infinite)");
  const double scale = 2.0 * r.Gamma / params.hbar;
  auto F = [&](double t) { return scale * diffusion_integral(t, mode.omega, bath) - 1.0; };

  const double t_cap = 1e6 * params.tau;
  double lo = 0.0, hi = 1.0 / mode.omega;
  double f_lo = -1.0, f_hi = F(hi);
  while (f_hi < 0) {
    if (hi >= t_cap) throw NoRoot("decoherence condition not reached within 1e6 tau", hi);
    lo = hi;
    f_lo = f_hi;
    hi = std::min(4.0 * hi, t_cap);
    f_hi = F(hi);
  }
  std::uintmax_t iters = 200;
  auto [a, b] = boost::math::tools::toms748_solve(F, lo, hi, f_lo, f_hi,
                                                  boost::math::tools::eps_tolerance<double>(30), iters);
  r.t_D = 0.5 * (a + b);
  r.residual = F(r.t_D) + 1.0;
  r.converged = std::abs(r.residual - 1.0) <= 1e-3;
  r.omega_tD_product = mode.omega * r.t_D;
  return r;
}

inline DecoherenceResult decoherence_time_numeric(const ModeSpec& mode, const RingProfile& profile,
                                                  const PhysParams& params, const OhmicBath& bath) {
  return decoherence_time_numeric(mode, geometric_factor_V(mode, profile, params), params, bath);
}

// ---- sweeps ----

enum class SweepAxis { zeta, v_min, temperature };

inline std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::zeta: return "zeta";
    case SweepAxis::v_min: return "v_min";
    case SweepAxis::temperature: return "temperature";
  }
  return "?";
}

// Everything a t_D evaluation needs. temperature is in units of hbar omega_1 / k_B
// with omega_1 the lowest ring mode of the current profile.
struct DecoherenceSetup {
  PhysParams params;
  RingProfile profile = RingProfile::constrained(5.0 / 6.0, PhysParams{});
  bool constrained = true;
  double zeta = 2e-8;
  double temperature = 0.0;
  double cutoff_ratio = 1e3;  // Lambda / omega_max
  Branch branch = Branch::u;
};

struct SweepRow {
  SweepAxis axis = SweepAxis::zeta;
  double value = 0.0;
  ModeSpec mode;
  double V = std::numeric_limits<double>::quiet_NaN();
  double Gamma = std::numeric_limits<double>::quiet_NaN();
  double t_D = std::numeric_limits<double>::quiet_NaN();
  double t_D_closed = std::numeric_limits<double>::quiet_NaN();
  TdMethod method = TdMethod::numeric_root;
  bool converged = false;
  bool feasible = false;
  std::string error;
};

inline OhmicBath bath_for(const DecoherenceSetup& s) {
  const double w1 = allowed_frequencies(s.profile, s.params, s.branch).front().omega;
  const double wmax = omega_max(s.profile, s.params, s.branch);
  return make_bath(s.zeta, s.params, s.profile.v_max - s.profile.v_min, s.temperature * s.params.hbar * w1,
                   s.cutoff_ratio * wmax);
}

// The n = 1 and n = N modes of the setup's branch.
inline std::array<ModeSpec, 2> extreme_modes(const DecoherenceSetup& s) {
  const auto modes = allowed_frequencies(s.profile, s.params, s.branch);
  return {modes.front(), modes.back()};
}

inline SweepRow evaluate_row(const DecoherenceSetup& s, const ModeSpec& mode, SweepAxis axis, double value) {
  SweepRow row;
  row.axis = axis;
  row.value = value;
  row.mode = mode;
  try {
    const OhmicBath bath = bath_for(s);
    row.V = geometric_factor_V(mode, s.profile, s.params);
    row.Gamma = gamma_factor(row.V, s.params, bath);
    const auto r = decoherence_time_numeric(mode, row.V, s.params, bath);
    row.t_D = r.t_D;
    row.converged = r.converged;
    row.feasible = measurement_feasible(r, s.params);
    try {
      row.t_D_closed = bath.zero_temperature() ? decoherence_time_T0(mode, row.V, s.params, bath).t_D
                                               : decoherence_time_smallT(mode, row.V, s.params, bath).t_D;
    } catch (const OutOfRegime&) {
    }
  } catch (const NoRoot& e) {
    row.error = e.what();
    row.t_D = e.lower_bound;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

inline DecoherenceSetup with_axis_value(DecoherenceSetup s, SweepAxis axis, double value) {
  switch (axis) {
    case SweepAxis::zeta: s.zeta = value; break;
    case SweepAxis::temperature: s.temperature = value; break;
    case SweepAxis::v_min:
      if (s.constrained)
        s.profile = RingProfile::constrained(value, s.params, s.profile.theta_H, s.profile.gamma1,
                                             s.profile.gamma2);
      else
        s.profile.v_min = value;
      break;
  }
  return s;
}

// Two rows per grid point (n = 1 then n = N), ordered by grid index.
inline std::vector<SweepRow> sweep(SweepAxis axis, const std::vector<double>& grid, const DecoherenceSetup& base,
                                   unsigned threads = 1) {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  std::vector<SweepRow> rows(2 * grid.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const double value = grid[i / 2];
    try {
      const auto s = with_axis_value(base, axis, value);
      const auto modes = extreme_modes(s);
      rows[i] = evaluate_row(s, modes[i % 2], axis, value);
    } catch (const std::exception& e) {
      rows[i].axis = axis;
      rows[i].value = value;
      rows[i].error = e.what();
    }
  });
  return rows;
}

// Rescale rho so the numeric t_D of the n = N mode at the setup's zeta equals
// target. Gamma scales as rho^2, so the fixed-point iteration converges fast.
inline DecoherenceSetup calibrate_density(DecoherenceSetup s, double target) {
  const auto modes = extreme_modes(s);
  const double V = geometric_factor_V(modes[1], s.profile, s.params);
  // Closed-form start, then refine on the numeric root.
  s.params.rho *= std::sqrt(decoherence_time_T0(modes[1], V, s.params, bath_for(s)).t_D / target);
  for (int it = 0; it < 40; ++it) {
    const double t = decoherence_time_numeric(modes[1], V, s.params, bath_for(s)).t_D;
    if (std::abs(t / target - 1.0) < 1e-9) return s;
    s.params.rho *= std::sqrt(t / target);
  }
  return s;
}

}  // namespace abh
