#pragma once

// Pipelines behind the command-line tool. Each one returns its output files as
// strings; the caller writes them only after the whole run has finished.

#include <abh/config.hpp>
#include <abh/correlations.hpp>
#include <abh/decoherence.hpp>
#include <abh/parallel.hpp>
#include <abh/stochastic.hpp>

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

namespace abh {

struct OutputFile {
  std::string name;
  std::string content;
};

struct RunOutput {
  int exit_code = 0;  // 0 ok, 3 some requested result could not be computed
  std::vector<OutputFile> files;
  std::vector<std::string> warnings;
};

using Cell = std::variant<double, long long, bool, std::string>;

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<Cell> row) {
    if (row.size() != columns_.size()) throw std::logic_error("table row has wrong width");
    rows_.push_back(std::move(row));
  }

  std::string csv(const std::string& hash) const {
    std::string out = "# config_hash " + hash + "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
    out += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ",";
        out += std::visit(
            [](const auto& v) -> std::string {
              using V = std::decay_t<decltype(v)>;
              if constexpr (std::is_same_v<V, double>) return config_detail::fmt(v);
              else if constexpr (std::is_same_v<V, bool>) return v ? "true" : "false";
              else if constexpr (std::is_same_v<V, long long>) return std::to_string(v);
              else return v;
            },
            r[i]);
      }
      out += "\n";
    }
    return out;
  }

  std::string jsonl(const std::string& hash) const {
    std::string out = nlohmann::json{{"config_hash", hash}}.dump() + "\n";
    for (const auto& r : rows_) {
      nlohmann::ordered_json o;
      for (std::size_t i = 0; i < r.size(); ++i)
        std::visit([&](const auto& v) { o[columns_[i]] = v; }, r[i]);
      out += o.dump() + "\n";
    }
    return out;
  }

  std::string render(OutputFormat f, const std::string& hash) const { return f == OutputFormat::csv ? csv(hash) : jsonl(hash); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
};

namespace cli_detail {

inline std::string ext(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".jsonl"; }

inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline OutputFile summary_file(nlohmann::ordered_json body, const RunConfig& c) {
  nlohmann::ordered_json s;
  s["config_hash"] = config_hash(c);
  s["command"] = to_string(c.command);
  for (auto& [k, v] : body.items()) s[k] = v;
  return {"summary.json", s.dump(2) + "\n"};
}

inline std::vector<double> default_grid(const RunConfig& c) {
  const auto& e = c.experiment;
  if (!e.grid.empty()) return e.grid;
  double lo, hi;
  int n;
  std::string spacing;
  if (e.axis == "zeta") {
    lo = 1e-9, hi = 1e-5, n = 17, spacing = "log";
  } else if (e.axis == "temperature") {
    lo = 0.0, hi = 10.0, n = 11, spacing = "linear";
  } else {
    lo = 0.70, hi = 0.90, n = 9, spacing = "linear";
  }
  lo = e.grid_min.value_or(lo);
  hi = e.grid_max.value_or(hi);
  n = e.grid_points.value_or(n);
  spacing = e.grid_spacing.value_or(spacing);
  if (spacing == "log" && !(lo > 0 && hi > 0)) throw ConfigError("experiment: log grid needs positive bounds");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    g[i] = spacing == "log" ? lo * std::pow(hi / lo, f) : lo + f * (hi - lo);
  }
  if (n > 1) g.back() = hi;
  return g;
}

// x grid in units of a, from integer steps so every temperature shares it exactly.
inline std::vector<double> x_grid(double lo, double hi, double step, double a) {
  const auto n = static_cast<long long>(std::floor((hi - lo) / step + 1e-9));
  if (n > 1000000) throw ConfigError("experiment: x grid has more than 1e6 points");
  std::vector<double> xs;
  for (long long i = 0; i <= n; ++i) xs.push_back((lo + i * step) * a);
  return xs;
}

inline CorrelationSpec correlation_spec(const RunConfig& c, const CollapseProfile& p, double temperature_over_TH,
                                        unsigned threads) {
  const auto& e = c.experiment;
  CorrelationSpec s;
  s.x1 = e.x1_over_a * p.a;
  s.xs = x_grid(e.x_min_over_a, e.x_max_over_a, e.x_step_over_a, p.a);
  s.t = e.t_over_tau_c * p.tau_c;
  s.hbar = c.physical.hbar;
  s.temperature = temperature_over_TH * hawking_temperature(p, c.physical.hbar);
  s.delta_c = e.delta_c_over_a * p.a;
  s.k_max_factor = e.k_max_factor;
  s.window = e.window_over_a * p.a + s.t;
  s.check_convergence = e.check_convergence;
  s.threads = threads;
  return s;
}

}  // namespace cli_detail

inline RunOutput run_decoherence_sweep(const RunConfig& c, unsigned threads = 1) {
  validate(c);
  const auto& e = c.experiment;
  DecoherenceSetup s;
  s.params = c.physical;
  s.profile = c.ring_shape();
  s.constrained = !c.ring.v_max;
  s.zeta = c.zeta();
  s.temperature = c.bath.temperature;
  s.cutoff_ratio = c.bath.cutoff_ratio;
  s.branch = c.ring.branch;
  const auto grid = cli_detail::default_grid(c);
  const SweepAxis axis = e.axis == "zeta" ? SweepAxis::zeta : (e.axis == "v_min" ? SweepAxis::v_min : SweepAxis::temperature);

  nlohmann::ordered_json summary;
  if (e.calibrate_target_over_tau > 0) {
    auto cal = s;
    cal.zeta = e.calibrate_zeta;
    s.params.rho = calibrate_density(cal, e.calibrate_target_over_tau * c.physical.tau).params.rho;
  }
  summary["rho"] = s.params.rho;
  summary["rho_calibrated"] = e.calibrate_target_over_tau > 0;
  summary["v_min"] = s.profile.v_min;
  summary["v_max"] = s.profile.v_max;

  const auto rows = sweep(axis, grid, s, threads);
  Table t({e.axis, "branch", "n", "omega", "V", "Gamma", "t_D", "t_D_over_tau", "t_D_closed", "method", "converged",
           "measurement_feasible", "error"});
  auto verdicts = nlohmann::ordered_json::array();
  RunOutput out;
  for (const auto& r : rows) {
    t.add({r.value, to_string(r.mode.branch), static_cast<long long>(r.mode.n), r.mode.omega, r.V, r.Gamma, r.t_D,
           r.t_D / c.physical.tau, r.t_D_closed, to_string(r.method), r.converged, r.feasible, r.error});
    verdicts.push_back({{e.axis, r.value}, {"n", r.mode.n}, {"t_D_over_tau", r.t_D / c.physical.tau},
                        {"measurement_feasible", r.feasible}, {"error", r.error}});
    if (!r.error.empty()) out.warnings.push_back(e.axis + "=" + config_detail::fmt(r.value) + ": " + r.error);
  }
  summary["rows"] = verdicts;
  out.files.push_back({"tdec_vs_" + e.axis + cli_detail::ext(c.output.format), t.render(c.output.format, config_hash(c))});
  out.files.push_back(cli_detail::summary_file(summary, c));
  return out;
}

inline RunOutput run_correlation_map(const RunConfig& c, unsigned threads = 1) {
  validate(c);
  const auto p = c.collapse_shape();
  const double TH = hawking_temperature(p, c.physical.hbar);
  const std::string hash = config_hash(c);
  RunOutput out;
  nlohmann::ordered_json summary;
  summary["kappa"] = p.kappa;
  summary["T_H"] = TH;
  const double t = c.experiment.t_over_tau_c * p.tau_c;
  summary["region_boundary_over_a"] = region_boundary(t, p) / p.a;
  auto peaks = nlohmann::ordered_json::array();
  for (double f : c.experiment.temperatures) {
    const auto spec = cli_detail::correlation_spec(c, p, f, threads);
    nlohmann::ordered_json entry{{"T_over_TH", f}};
    try {
      const auto g = closed_correlation(spec, p);
      const auto m = peak_metrics(g, p, spec);
      Table tab({"x/a", "region", "C_raw", "C_signal"});
      for (std::size_t i = 0; i < g.xs.size(); ++i) tab.add({g.xs[i] / p.a, to_string(g.regions[i]), g.values[i], g.signal[i]});
      out.files.push_back({"correlation_T_" + cli_detail::short_num(f) + "TH" + cli_detail::ext(c.output.format),
                           tab.render(c.output.format, hash)});
      entry["present"] = m.present;
      entry["peak_x_over_a"] = m.peak_x / p.a;
      entry["peak_height"] = m.peak_height;
      entry["fwhm_over_a"] = m.fwhm / p.a;
      entry["background"] = m.background;
    } catch (const Error& ex) {
      entry["error"] = ex.what();
      out.warnings.push_back("T=" + cli_detail::short_num(f) + "T_H: " + ex.what());
      out.exit_code = 3;
    }
    peaks.push_back(entry);
  }
  summary["peaks"] = peaks;
  out.files.push_back(cli_detail::summary_file(summary, c));
  return out;
}

// Bath of the collapse runs: Delta v from the profile, temperature in T_H units,
// cutoff relative to k_c = 1/delta_c.
inline OhmicBath collapse_bath(const RunConfig& c, const CollapseProfile& p) {
  const double kc = 1.0 / (c.experiment.delta_c_over_a * p.a);
  return make_bath(c.zeta(), c.physical, p.v_max_c - p.v_min_c, c.bath.temperature * hawking_temperature(p, c.physical.hbar),
                   c.bath.cutoff_ratio * kc);
}

inline RunOutput run_er_series(const RunConfig& c, unsigned threads = 1) {
  validate(c);
  const auto& e = c.experiment;
  const auto p = c.collapse_shape();
  const auto bath = collapse_bath(c, p);
  const double k = std::numbers::pi / (e.window_over_a * p.a + e.t_over_tau_c * p.tau_c);
  std::vector<double> ts(e.t_points), er(e.t_points);
  for (int i = 0; i < e.t_points; ++i)
    ts[i] = p.tau_c * e.t_min_over_tau_c * std::pow(e.t_max_over_tau_c / e.t_min_over_tau_c, static_cast<double>(i) / (e.t_points - 1));
  ts.back() = p.tau_c * e.t_max_over_tau_c;
  parallel_for(ts.size(), threads, [&](std::size_t i) { er[i] = relative_environment_contribution(k, ts[i], bath); });

  RunOutput out;
  Table tab({"t/tau_c", "e_r"});
  bool monotone = true;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tab.add({ts[i] / p.tau_c, er[i]});
    if (i && er[i] < er[i - 1]) monotone = false;
  }
  nlohmann::ordered_json summary;
  summary["k"] = k;
  summary["gamma"] = bath.gamma;
  summary["cutoff"] = bath.cutoff;
  summary["e_r_first"] = er.front();
  summary["e_r_last"] = er.back();
  summary["nondecreasing"] = monotone;
  summary["level"] = e.er_level;
  summary["t_cross_over_tau_c"] = nullptr;
  if (bath.gamma > 0) {
    try {
      summary["t_cross_over_tau_c"] =
          er_crossing_time(k, bath, e.er_level, ts.front(), 1e3 * ts.back()) / p.tau_c;
    } catch (const NoRoot& ex) {
      out.warnings.push_back(ex.what());
    }
  }
  out.files.push_back({"er_series" + cli_detail::ext(c.output.format), tab.render(c.output.format, config_hash(c))});
  out.files.push_back(cli_detail::summary_file(summary, c));
  return out;
}

// Agreement at 3 sigma, allowing the expected number of excursions: at most
// max(1, P/100) of P points may sit outside.
inline std::string mc_verdict(const std::vector<double>& z, bool insufficient) {
  if (insufficient) return "warning";
  std::size_t outside = 0;
  for (double v : z)
    if (!(std::abs(v) <= 3.0)) ++outside;
  return outside <= std::max<std::size_t>(1, z.size() / 100) ? "pass" : "fail";
}

inline RunOutput run_mc_validate(const RunConfig& c, unsigned threads = 1) {
  validate(c);
  const auto p = c.collapse_shape();
  const std::string hash = config_hash(c);
  RunOutput out;
  nlohmann::ordered_json summary;
  auto runs = nlohmann::ordered_json::array();
  std::string overall = "pass";
  for (double f : c.experiment.temperatures) {
    auto spec = cli_detail::correlation_spec(c, p, f, threads);
    spec.xs = cli_detail::x_grid(c.experiment.x_min_over_a, c.experiment.x_max_over_a, c.mc.dx_over_a, p.a);
    spec.delta_c = c.mc.delta_c_over_a * p.a;
    spec.window = c.mc.window_factor * p.a + spec.t;
    spec.check_convergence = false;  // both sides use the same k grid
    const auto closed = closed_correlation(spec, p);
    const auto mc = mc_correlation(spec, p, static_cast<std::size_t>(c.mc.realizations), c.mc.seed, threads);
    Table tab({"x/a", "region", "C_closed", "C_mc", "std_error", "z"});
    std::vector<double> z(spec.xs.size());
    for (std::size_t i = 0; i < spec.xs.size(); ++i) {
      const double d = mc.grid.values[i] - closed.values[i];
      z[i] = mc.std_error[i] > 0 ? d / mc.std_error[i] : (d == 0 ? 0.0 : std::copysign(INFINITY, d));
      tab.add({spec.xs[i] / p.a, to_string(closed.regions[i]), closed.values[i], mc.grid.values[i], mc.std_error[i], z[i]});
    }
    const auto verdict = mc_verdict(z, mc.insufficient_statistics);
    if (verdict == "fail") overall = "fail";
    else if (verdict == "warning" && overall == "pass") overall = "warning";
    if (mc.insufficient_statistics)
      out.warnings.push_back("T=" + cli_detail::short_num(f) + "T_H: insufficient statistics at the peak");
    double zmax = 0.0;
    for (double v : z) zmax = std::max(zmax, std::abs(v));
    runs.push_back({{"T_over_TH", f}, {"verdict", verdict}, {"max_abs_z", zmax},
                    {"insufficient_statistics", mc.insufficient_statistics}});
    out.files.push_back({"mc_validate_T_" + cli_detail::short_num(f) + "TH" + cli_detail::ext(c.output.format),
                         tab.render(c.output.format, hash)});
  }
  summary["realizations"] = c.mc.realizations;
  summary["seed"] = c.mc.seed;
  summary["verdict"] = overall;
  summary["runs"] = runs;
  out.files.push_back(cli_detail::summary_file(summary, c));
  return out;
}

inline RunOutput run(const RunConfig& c, unsigned threads = 1) {
  switch (c.command) {
    case Command::decoherence: return run_decoherence_sweep(c, threads);
    case Command::correlation: return run_correlation_map(c, threads);
    case Command::er: return run_er_series(c, threads);
    case Command::mc_validate: return run_mc_validate(c, threads);
  }
  throw ConfigError("unknown command");
}

}  // namespace abh
