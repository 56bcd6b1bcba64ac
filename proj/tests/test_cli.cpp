#include <abh/cli.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace abh;
namespace fs = std::filesystem;

namespace {

RunConfig parse(const std::string& text, Command cmd) {
  std::istringstream in(text);
  return parse_config(in, cmd);
}

const std::string ring = "[profile.ring]\nv_min = 0.8333333333333333\n";
const std::string collapse = "[profile.collapse]\nkappa = 0.1\n";

// Data rows of a CSV as string fields, header comment and column line dropped.
std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    out.push_back(f);
  }
  return out;
}

const OutputFile& file(const RunOutput& o, const std::string& name) {
  for (const auto& f : o.files)
    if (f.name == name) return f;
  throw std::runtime_error("missing " + name);
}

nlohmann::json summary(const RunOutput& o) { return nlohmann::json::parse(file(o, "summary.json").content); }

int run_tool(const std::string& args) {
  const int rc = std::system((std::string(ABH_CLI) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("abh_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Config, UnknownKeysAndSectionsAreErrors) {
  EXPECT_THROW(parse(ring + "vmin = 0.8\n", Command::decoherence), ConfigError);
  EXPECT_THROW(parse(ring + "[bath]\nzeta_ = 1\n", Command::decoherence), ConfigError);
  EXPECT_THROW(parse(ring + "[baths]\nzeta = 1\n", Command::decoherence), ConfigError);
  EXPECT_THROW(parse("foo = 1\n" + ring, Command::decoherence), ConfigError);
  EXPECT_THROW(parse(ring + "[bath]\nzeta = 1e-8x\n", Command::decoherence), ConfigError);
  EXPECT_THROW(parse(ring + "[physical]\nn_ions = 10.5\n", Command::decoherence), ConfigError);
}

TEST(Config, ExactlyOneProfile) {
  EXPECT_THROW(parse("[bath]\nzeta = 1e-8\n", Command::decoherence), ConfigError);
  EXPECT_THROW(parse(ring + collapse, Command::decoherence), ConfigError);
  EXPECT_NO_THROW(parse("[profile.collapse]\n", Command::correlation));
  EXPECT_THROW(validate(parse(collapse, Command::decoherence)), ConfigError);
  EXPECT_THROW(validate(parse(ring, Command::correlation)), ConfigError);
}

TEST(Config, DefaultsAndOverrides) {
  auto c = parse("seed = 17\n" + ring, Command::decoherence);
  EXPECT_EQ(c.mc.seed, 17u);
  EXPECT_EQ(c.zeta(), 2e-8);
  const auto r = c.ring_shape();
  EXPECT_NEAR(r.v_max, 2.0 - 5.0 / 6.0, 1e-14);
  c = parse(collapse, Command::er);
  EXPECT_EQ(c.zeta(), 5e-3);
  EXPECT_NEAR(c.collapse_shape().kappa, 0.1, 1e-15);
  c.command = Command::mc_validate;
  EXPECT_EQ(c.zeta(), 0.0);
  c = parse("[profile.collapse]\nkappa = 0.1\nv_min = 0.5\n", Command::correlation);
  EXPECT_THROW(c.collapse_shape(), ConfigError);
  c = parse("[profile.collapse]\nv_min = 0.85\n", Command::correlation);
  EXPECT_THROW(c.collapse_shape(), ConfigError);
}

TEST(Config, HashTracksResolvedValuesOnly) {
  const auto a = parse(ring, Command::decoherence);
  auto b = parse(ring + "[output]\ndir = elsewhere\n", Command::decoherence);
  EXPECT_EQ(config_hash(a), config_hash(b));
  b = parse(ring + "[bath]\nzeta = 2e-8\n", Command::decoherence);
  EXPECT_EQ(config_hash(a), config_hash(b));  // explicit default
  b = parse(ring + "[bath]\nzeta = 3e-8\n", Command::decoherence);
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Cli, ZetaSweepDecreases) {
  const auto c = parse(ring + "[experiment]\ngrid_points = 9\n", Command::decoherence);
  const auto o = run_decoherence_sweep(c, 2);
  const auto r = rows(file(o, "tdec_vs_zeta.csv").content);
  ASSERT_EQ(r.size(), 18u);
  for (std::size_t i = 2; i < r.size(); ++i) {
    const double prev = std::stod(r[i - 2][6]), cur = std::stod(r[i][6]);
    if (r[i][2] == "1000") EXPECT_LT(cur, prev) << i;
    else EXPECT_LE(cur, prev) << i;  // n = 1 may sit at the search bound
  }
  EXPECT_EQ(summary(o)["rows"].size(), 18u);
  EXPECT_TRUE(summary(o)["rho_calibrated"].get<bool>());
}

TEST(Cli, TemperatureSweepNonincreasing) {
  const auto c = parse(ring + "[experiment]\naxis = temperature\ngrid = 0, 1, 2, 5, 10\n", Command::decoherence);
  const auto r = rows(file(run_decoherence_sweep(c), "tdec_vs_temperature.csv").content);
  ASSERT_EQ(r.size(), 10u);
  for (std::size_t i = 2; i < r.size(); ++i) EXPECT_LE(std::stod(r[i][6]), std::stod(r[i - 2][6]) * (1 + 1e-12)) << i;
}

TEST(Cli, CorrelationMap) {
  auto c = parse(collapse + "[experiment]\ntemperatures = 0, 1, 3\n", Command::correlation);
  const auto o = run_correlation_map(c);
  const auto s = summary(o);
  ASSERT_EQ(s["peaks"].size(), 3u);
  EXPECT_TRUE(s["peaks"][0]["present"].get<bool>());
  const auto g0 = rows(file(o, "correlation_T_0TH.csv").content);
  for (const char* name : {"correlation_T_1TH.csv", "correlation_T_3TH.csv"}) {
    const auto g = rows(file(o, name).content);
    ASSERT_EQ(g.size(), g0.size());
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g[i][0], g0[i][0]);
  }
  EXPECT_EQ(g0.size(), 291u);

  c = parse("[profile.collapse]\nkappa = 1e-9\n[experiment]\ntemperatures = 0\n", Command::correlation);
  EXPECT_FALSE(summary(run_correlation_map(c))["peaks"][0]["present"].get<bool>());
}

TEST(Cli, ErSeries) {
  auto c = parse(collapse + "[experiment]\nt_points = 21\n", Command::er);
  auto o = run_er_series(c);
  const auto r = rows(file(o, "er_series.csv").content);
  ASSERT_EQ(r.size(), 21u);
  EXPECT_EQ(r.front()[0], "0.10000000000000001");
  EXPECT_EQ(r.back()[0], "100000");
  EXPECT_LT(std::stod(r.front()[1]), 0.01);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(std::stod(r[i][1]), std::stod(r[i - 1][1]));
  EXPECT_TRUE(summary(o)["nondecreasing"].get<bool>());

  c = parse(collapse + "[bath]\nzeta = 0\n[experiment]\nt_points = 5\n", Command::er);
  o = run_er_series(c);
  for (const auto& row : rows(file(o, "er_series.csv").content)) EXPECT_EQ(std::stod(row[1]), 0.0);
  EXPECT_TRUE(summary(o)["t_cross_over_tau_c"].is_null());
}

TEST(Cli, McValidate) {
  auto c = parse(collapse + "[experiment]\ntemperatures = 0\n[mc]\nrealizations = 200\n", Command::mc_validate);
  const auto o = run_mc_validate(c, 1);
  const auto r = rows(file(o, "mc_validate_T_0TH.csv").content);
  ASSERT_EQ(r.size(), 30u);
  std::vector<double> z;
  for (const auto& row : r) z.push_back(std::stod(row[5]));
  EXPECT_EQ(mc_verdict(z, false), "pass");
  // 200 realizations leave the peak error above 20% of the value
  EXPECT_EQ(summary(o)["verdict"], "warning");

  const auto again = run_mc_validate(c, 3);
  for (std::size_t i = 0; i < o.files.size(); ++i) EXPECT_EQ(o.files[i].content, again.files[i].content);

  c.mc.realizations = 10;
  EXPECT_THROW(run_mc_validate(c), ConfigError);
  c.mc.realizations = 200;
  c.bath.zeta = 1e-3;
  EXPECT_THROW(run_mc_validate(c), ConfigError);
  EXPECT_EQ(mc_verdict({0.1, 3.5, -4.0}, false), "fail");
}

TEST(Cli, OutputsCarryHashAndAreThreadIndependent) {
  const auto c = parse(collapse + "[experiment]\ntemperatures = 0, 1\n", Command::correlation);
  const auto a = run_correlation_map(c, 1), b = run_correlation_map(c, 3);
  ASSERT_EQ(a.files.size(), b.files.size());
  const std::string hash = config_hash(c);
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].content, b.files[i].content);
    EXPECT_NE(a.files[i].content.find(hash), std::string::npos) << a.files[i].name;
  }
  auto j = c;
  j.output.format = OutputFormat::jsonl;
  const auto jo = run_correlation_map(j);
  const auto& f = file(jo, "correlation_T_0TH.jsonl");
  std::istringstream in(f.content);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["config_hash"], config_hash(j));
  std::getline(in, line);
  EXPECT_EQ(nlohmann::json::parse(line)["x/a"], 1.0);
}

TEST(Cli, ToolExitCodesAndNoPartialOutput) {
  const auto dir = scratch("tool");
  {
    std::ofstream(dir / "bad.ini") << ring << "[experiment]\naxis = zeta\ngrid_pts = 3\n";
    std::ofstream(dir / "good.ini") << ring << "[experiment]\ngrid = 1e-8, 1e-7\n";
    std::ofstream(dir / "mc10.ini") << collapse << "[mc]\nrealizations = 10\n";
  }
  EXPECT_NE(run_tool("decoherence --config " + (dir / "bad.ini").string() + " --out " + (dir / "bad").string()), 0);
  EXPECT_FALSE(fs::exists(dir / "bad"));
  EXPECT_NE(run_tool("mc-validate --config " + (dir / "mc10.ini").string() + " --out " + (dir / "mc").string()), 0);
  EXPECT_FALSE(fs::exists(dir / "mc"));
  EXPECT_EQ(run_tool("decoherence --config " + (dir / "good.ini").string() + " --out " + (dir / "a").string()), 0);
  EXPECT_EQ(run_tool("decoherence --threads 2 --config " + (dir / "good.ini").string() + " --out " + (dir / "b").string()), 0);
  for (const char* name : {"tdec_vs_zeta.csv", "summary.json"}) {
    std::ifstream fa(dir / "a" / name), fb(dir / "b" / name);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_FALSE(sa.str().empty());
    EXPECT_EQ(sa.str(), sb.str()) << name;
  }
  EXPECT_EQ(run_tool("decoherence --format jsonl --config " + (dir / "good.ini").string() + " --out " + (dir / "j").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "j" / "tdec_vs_zeta.jsonl"));
  fs::remove_all(dir);
}
