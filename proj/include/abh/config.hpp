#pragma once

// INI run configuration. Every key is known in advance; anything else is a
// ConfigError before any work starts.

#include <abh/collapse.hpp>
#include <abh/decoherence.hpp>
#include <abh/errors.hpp>
#include <abh/geometry.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace abh {

enum class Command { decoherence, correlation, er, mc_validate };

inline std::string to_string(Command c) {
  switch (c) {
    case Command::decoherence: return "decoherence";
    case Command::correlation: return "correlation";
    case Command::er: return "er";
    case Command::mc_validate: return "mc-validate";
  }
  return "?";
}

enum class OutputFormat { csv, jsonl };

struct RingSection {
  double v_min = 5.0 / 6.0;
  std::optional<double> v_max;  // unset: solved from the revolution constraint
  double theta_H = std::numbers::pi / 2;
  double gamma1 = 0.05 * two_pi;
  double gamma2 = 0.05 * two_pi;
  Branch branch = Branch::u;
};

struct CollapseSection {
  double a = 1.0;
  std::optional<double> kappa, v_min, v_max;
  double tau_c = 1.0;
  SigmaKind sigma = SigmaKind::tanh;
};

struct BathSection {
  std::optional<double> zeta;  // default depends on the command
  double temperature = 0.0;    // ring: hbar omega_1 / k_B; collapse: T_H
  double cutoff_ratio = 1e3;   // ring: Lambda / omega_max; collapse: Lambda / k_c
};

struct ExperimentSection {
  // decoherence
  std::string axis = "zeta";
  std::vector<double> grid;
  std::optional<double> grid_min, grid_max;
  std::optional<int> grid_points;
  std::optional<std::string> grid_spacing;
  double calibrate_target_over_tau = 100.0;  // 0 keeps physical.rho
  double calibrate_zeta = 2e-8;
  // correlation / mc-validate
  double x1_over_a = -10.0;
  double x_min_over_a = 1.0, x_max_over_a = 30.0, x_step_over_a = 0.1;
  double t_over_tau_c = 100.0;
  std::vector<double> temperatures{0.0, 1.0, 3.0, 10.0};  // T_H units
  double delta_c_over_a = 0.1;
  double k_max_factor = 40.0;
  double window_over_a = 20.0;
  bool check_convergence = true;
  // er
  double t_min_over_tau_c = 0.1, t_max_over_tau_c = 1e5;
  int t_points = 51;
  double er_level = 0.5;
};

struct OutputSection {
  std::string dir = "out";
  OutputFormat format = OutputFormat::csv;
};

struct McSection {
  long long realizations = 10000;
  std::uint64_t seed = 1234567;
  double dx_over_a = 1.0;      // x spacing of the sampled grid
  double window_factor = 20.0; // k spacing pi / ((window_factor a) + t)
  double delta_c_over_a = 0.5; // reduced mode set
};

struct RunConfig {
  Command command = Command::decoherence;
  PhysParams physical;
  bool ring_profile = true;
  RingSection ring;
  CollapseSection collapse;
  BathSection bath;
  ExperimentSection experiment;
  OutputSection output;
  McSection mc;

  RingProfile ring_shape() const {
    if (ring.v_max) {
      RingProfile r{ring.v_min, *ring.v_max, ring.theta_H, ring.gamma1, ring.gamma2};
      r.validate();
      return r;
    }
    return RingProfile::constrained(ring.v_min, physical, ring.theta_H, ring.gamma1, ring.gamma2);
  }

  CollapseProfile collapse_shape() const {
    const auto& c = collapse;
    if (c.kappa && (c.v_min || c.v_max)) {
      auto p = CollapseProfile::from_kappa(*c.kappa, c.a, c.tau_c, c.sigma);
      if ((c.v_min && std::abs(*c.v_min - p.v_min_c) > 1e-12) || (c.v_max && std::abs(*c.v_max - p.v_max_c) > 1e-12))
        throw ConfigError("profile.collapse: kappa conflicts with v_min/v_max");
      return p;
    }
    if (c.kappa) return CollapseProfile::from_kappa(*c.kappa, c.a, c.tau_c, c.sigma);
    if (c.v_min.has_value() != c.v_max.has_value())
      throw ConfigError("profile.collapse: give both v_min and v_max, or kappa");
    return CollapseProfile::from_velocities(c.v_min.value_or(0.9), c.v_max.value_or(1.1), c.a, c.tau_c, c.sigma);
  }

  double zeta() const {
    if (bath.zeta) return *bath.zeta;
    switch (command) {
      case Command::decoherence: return 2e-8;
      case Command::mc_validate: return 0.0;
      default: return 5e-3;
    }
  }
};

namespace config_detail {

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not a number: '" + v + "'");
  if (!std::isfinite(d)) throw ConfigError(key + ": must be finite");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long i;
  try {
    i = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return i;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long i;
  if (v.empty() || v[0] == '-') throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  try {
    i = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  }
  if (used != v.size()) throw ConfigError(key + ": not an unsigned integer: '" + v + "'");
  return i;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(key + ": empty list entry");
    out.push_back(parse_double(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace config_detail

inline RunConfig parse_config(std::istream& in, Command command) {
  using namespace config_detail;
  namespace pt = boost::property_tree;
  // the INI reader drops empty sections, so headers are collected separately
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::set<std::string> seen_sections;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos || line[b] != '[') continue;
      const auto e = line.find(']', b);
      if (e != std::string::npos) seen_sections.insert(line.substr(b + 1, e - b - 1));
    }
  }
  pt::ptree tree;
  try {
    std::istringstream body(text);
    pt::ini_parser::read_ini(body, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  c.command = command;
  for (const auto& name : seen_sections) {
    static const std::set<std::string> known{"physical", "profile.ring", "profile.collapse", "bath", "experiment", "output", "mc"};
    if (!known.count(name)) throw ConfigError("config: unknown section [" + name + "]");
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      // the only key allowed outside a section
      if (section != "seed") throw ConfigError("config: key '" + section + "' outside any section");
      c.mc.seed = parse_u64("seed", body.get_value<std::string>());
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string v = node.get_value<std::string>();
      const std::string k = section + "." + key;
      auto unknown = [&] { throw ConfigError("config: unknown key '" + k + "'"); };
      if (section == "physical") {
        if (key == "c") c.physical.c = parse_double(k, v);
        else if (key == "L") c.physical.L = parse_double(k, v);
        else if (key == "n_ions") c.physical.n_ions = static_cast<int>(parse_int(k, v));
        else if (key == "rho") c.physical.rho = parse_double(k, v);
        else if (key == "hbar") c.physical.hbar = parse_double(k, v);
        else if (key == "tau") c.physical.tau = parse_double(k, v);
        else unknown();
      } else if (section == "profile.ring") {
        if (key == "v_min") c.ring.v_min = parse_double(k, v);
        else if (key == "v_max") c.ring.v_max = parse_double(k, v);
        else if (key == "theta_H") c.ring.theta_H = parse_double(k, v);
        else if (key == "gamma1") c.ring.gamma1 = parse_double(k, v);
        else if (key == "gamma2") c.ring.gamma2 = parse_double(k, v);
        else if (key == "branch") {
          if (v == "u") c.ring.branch = Branch::u;
          else if (v == "v") c.ring.branch = Branch::v;
          else throw ConfigError(k + ": expected u or v");
        } else unknown();
      } else if (section == "profile.collapse") {
        if (key == "a") c.collapse.a = parse_double(k, v);
        else if (key == "kappa") c.collapse.kappa = parse_double(k, v);
        else if (key == "v_min") c.collapse.v_min = parse_double(k, v);
        else if (key == "v_max") c.collapse.v_max = parse_double(k, v);
        else if (key == "tau_c") c.collapse.tau_c = parse_double(k, v);
        else if (key == "sigma") {
          if (v == "tanh") c.collapse.sigma = SigmaKind::tanh;
          else if (v == "smoothstep") c.collapse.sigma = SigmaKind::smoothstep;
          else throw ConfigError(k + ": expected tanh or smoothstep");
        } else unknown();
      } else if (section == "bath") {
        if (key == "zeta") c.bath.zeta = parse_double(k, v);
        else if (key == "temperature") c.bath.temperature = parse_double(k, v);
        else if (key == "cutoff_ratio") c.bath.cutoff_ratio = parse_double(k, v);
        else unknown();
      } else if (section == "experiment") {
        auto& e = c.experiment;
        if (key == "axis") e.axis = v;
        else if (key == "grid") e.grid = parse_list(k, v);
        else if (key == "grid_min") e.grid_min = parse_double(k, v);
        else if (key == "grid_max") e.grid_max = parse_double(k, v);
        else if (key == "grid_points") e.grid_points = static_cast<int>(parse_int(k, v));
        else if (key == "grid_spacing") e.grid_spacing = v;
        else if (key == "calibrate_target_over_tau") e.calibrate_target_over_tau = parse_double(k, v);
        else if (key == "calibrate_zeta") e.calibrate_zeta = parse_double(k, v);
        else if (key == "x1_over_a") e.x1_over_a = parse_double(k, v);
        else if (key == "x_min_over_a") e.x_min_over_a = parse_double(k, v);
        else if (key == "x_max_over_a") e.x_max_over_a = parse_double(k, v);
        else if (key == "x_step_over_a") e.x_step_over_a = parse_double(k, v);
        else if (key == "t_over_tau_c") e.t_over_tau_c = parse_double(k, v);
        else if (key == "temperatures") e.temperatures = parse_list(k, v);
        else if (key == "delta_c_over_a") e.delta_c_over_a = parse_double(k, v);
        else if (key == "k_max_factor") e.k_max_factor = parse_double(k, v);
        else if (key == "window_over_a") e.window_over_a = parse_double(k, v);
        else if (key == "check_convergence") e.check_convergence = parse_bool(k, v);
        else if (key == "t_min_over_tau_c") e.t_min_over_tau_c = parse_double(k, v);
        else if (key == "t_max_over_tau_c") e.t_max_over_tau_c = parse_double(k, v);
        else if (key == "t_points") e.t_points = static_cast<int>(parse_int(k, v));
        else if (key == "er_level") e.er_level = parse_double(k, v);
        else unknown();
      } else if (section == "output") {
        if (key == "dir") c.output.dir = v;
        else if (key == "format") {
          if (v == "csv") c.output.format = OutputFormat::csv;
          else if (v == "jsonl") c.output.format = OutputFormat::jsonl;
          else throw ConfigError(k + ": expected csv or jsonl");
        } else unknown();
      } else if (section == "mc") {
        if (key == "realizations") c.mc.realizations = parse_int(k, v);
        else if (key == "seed") c.mc.seed = parse_u64(k, v);
        else if (key == "dx_over_a") c.mc.dx_over_a = parse_double(k, v);
        else if (key == "window_factor") c.mc.window_factor = parse_double(k, v);
        else if (key == "delta_c_over_a") c.mc.delta_c_over_a = parse_double(k, v);
        else unknown();
      } else {
        throw ConfigError("config: unknown section [" + section + "]");
      }
    }
  }
  const bool ring = seen_sections.count("profile.ring") > 0, coll = seen_sections.count("profile.collapse") > 0;
  if (ring == coll) throw ConfigError("config: exactly one of [profile.ring] or [profile.collapse] is required");
  c.ring_profile = ring;
  return c;
}

inline RunConfig parse_config_file(const std::string& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in, command);
}

// Range checks that do not need any numerics; run before anything is written.
inline void validate(const RunConfig& c) {
  c.physical.validate();
  const auto& e = c.experiment;
  if (c.command == Command::decoherence) {
    if (!c.ring_profile) throw ConfigError("decoherence needs [profile.ring]");
    (void)c.ring_shape();
    if (e.axis != "zeta" && e.axis != "v_min" && e.axis != "temperature")
      throw ConfigError("experiment.axis: expected zeta, v_min or temperature");
    if (e.grid_spacing && *e.grid_spacing != "log" && *e.grid_spacing != "linear")
      throw ConfigError("experiment.grid_spacing: expected log or linear");
    if (e.grid_points && *e.grid_points < 1) throw ConfigError("experiment.grid_points must be >= 1");
    if (!e.grid.empty() && (e.grid_min || e.grid_max || e.grid_points || e.grid_spacing))
      throw ConfigError("experiment: give either grid or grid_min/grid_max/grid_points/grid_spacing");
    if (e.calibrate_target_over_tau < 0 || !(e.calibrate_zeta > 0))
      throw ConfigError("experiment: calibration target must be >= 0 and calibrate_zeta > 0");
  } else {
    if (c.ring_profile) throw ConfigError(to_string(c.command) + " needs [profile.collapse]");
    (void)c.collapse_shape();
    if (!(e.t_over_tau_c > 0) || !(e.delta_c_over_a > 0) || !(e.k_max_factor > 0) || !(e.window_over_a > 0))
      throw ConfigError("experiment: t_over_tau_c, delta_c_over_a, k_max_factor, window_over_a must be positive");
    if (!(e.x_step_over_a > 0) || !(e.x_max_over_a >= e.x_min_over_a))
      throw ConfigError("experiment: x grid needs x_step_over_a > 0 and x_max_over_a >= x_min_over_a");
    for (double T : e.temperatures)
      if (T < 0) throw ConfigError("experiment.temperatures must be >= 0");
  }
  if (c.command == Command::er) {
    if (!(e.t_min_over_tau_c > 0) || !(e.t_max_over_tau_c > e.t_min_over_tau_c) || e.t_points < 2)
      throw ConfigError("experiment: er grid needs 0 < t_min < t_max and t_points >= 2");
    if (!(e.er_level > 0)) throw ConfigError("experiment.er_level must be positive");
  }
  if (c.command == Command::mc_validate) {
    if (c.mc.realizations < 100) throw ConfigError("mc.realizations must be >= 100");
    if (!(c.mc.dx_over_a > 0) || !(c.mc.window_factor > 0) || !(c.mc.delta_c_over_a > 0))
      throw ConfigError("mc: dx_over_a, window_factor, delta_c_over_a must be positive");
    if (c.zeta() != 0.0) throw ConfigError("mc-validate checks the closed system; bath.zeta must be 0 or unset");
  }
  if (c.zeta() < 0 || c.bath.temperature < 0 || !(c.bath.cutoff_ratio > 0))
    throw ConfigError("bath: zeta >= 0, temperature >= 0, cutoff_ratio > 0 required");
}

// Resolved configuration as sorted key=value lines; threads and output dir are
// excluded because they never change results.
inline std::string canonical(const RunConfig& c) {
  using config_detail::fmt;
  std::map<std::string, std::string> kv;
  kv["command"] = to_string(c.command);
  kv["physical.c"] = fmt(c.physical.c);
  kv["physical.L"] = fmt(c.physical.L);
  kv["physical.n_ions"] = std::to_string(c.physical.n_ions);
  kv["physical.rho"] = fmt(c.physical.rho);
  kv["physical.hbar"] = fmt(c.physical.hbar);
  kv["physical.tau"] = fmt(c.physical.tau);
  if (c.ring_profile) {
    const auto r = c.ring_shape();
    kv["profile.ring.v_min"] = fmt(r.v_min);
    kv["profile.ring.v_max"] = fmt(r.v_max);
    kv["profile.ring.constrained"] = c.ring.v_max ? "false" : "true";
    kv["profile.ring.theta_H"] = fmt(r.theta_H);
    kv["profile.ring.gamma1"] = fmt(r.gamma1);
    kv["profile.ring.gamma2"] = fmt(r.gamma2);
    kv["profile.ring.branch"] = to_string(c.ring.branch);
  } else {
    const auto p = c.collapse_shape();
    kv["profile.collapse.a"] = fmt(p.a);
    kv["profile.collapse.kappa"] = fmt(p.kappa);
    kv["profile.collapse.v_min"] = fmt(p.v_min_c);
    kv["profile.collapse.v_max"] = fmt(p.v_max_c);
    kv["profile.collapse.tau_c"] = fmt(p.tau_c);
    kv["profile.collapse.sigma"] = to_string(p.sigma_kind);
  }
  kv["bath.zeta"] = fmt(c.zeta());
  kv["bath.temperature"] = fmt(c.bath.temperature);
  kv["bath.cutoff_ratio"] = fmt(c.bath.cutoff_ratio);
  const auto& e = c.experiment;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s;
  };
  if (c.command == Command::decoherence) {
    kv["experiment.axis"] = e.axis;
    kv["experiment.grid"] = list(e.grid);
    if (e.grid_min) kv["experiment.grid_min"] = fmt(*e.grid_min);
    if (e.grid_max) kv["experiment.grid_max"] = fmt(*e.grid_max);
    if (e.grid_points) kv["experiment.grid_points"] = std::to_string(*e.grid_points);
    if (e.grid_spacing) kv["experiment.grid_spacing"] = *e.grid_spacing;
    kv["experiment.calibrate_target_over_tau"] = fmt(e.calibrate_target_over_tau);
    kv["experiment.calibrate_zeta"] = fmt(e.calibrate_zeta);
  } else {
    kv["experiment.x1_over_a"] = fmt(e.x1_over_a);
    kv["experiment.x_min_over_a"] = fmt(e.x_min_over_a);
    kv["experiment.x_max_over_a"] = fmt(e.x_max_over_a);
    kv["experiment.x_step_over_a"] = fmt(e.x_step_over_a);
    kv["experiment.t_over_tau_c"] = fmt(e.t_over_tau_c);
    kv["experiment.temperatures"] = list(e.temperatures);
    kv["experiment.delta_c_over_a"] = fmt(e.delta_c_over_a);
    kv["experiment.k_max_factor"] = fmt(e.k_max_factor);
    kv["experiment.window_over_a"] = fmt(e.window_over_a);
    kv["experiment.check_convergence"] = e.check_convergence ? "true" : "false";
    kv["experiment.t_min_over_tau_c"] = fmt(e.t_min_over_tau_c);
    kv["experiment.t_max_over_tau_c"] = fmt(e.t_max_over_tau_c);
    kv["experiment.t_points"] = std::to_string(e.t_points);
    kv["experiment.er_level"] = fmt(e.er_level);
  }
  kv["output.format"] = c.output.format == OutputFormat::csv ? "csv" : "jsonl";
  if (c.command == Command::mc_validate) {
    kv["mc.realizations"] = std::to_string(c.mc.realizations);
    kv["mc.seed"] = std::to_string(c.mc.seed);
    kv["mc.dx_over_a"] = fmt(c.mc.dx_over_a);
    kv["mc.window_factor"] = fmt(c.mc.window_factor);
    kv["mc.delta_c_over_a"] = fmt(c.mc.delta_c_over_a);
  }
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical(c))));
  return buf;
}

}  // namespace abh
