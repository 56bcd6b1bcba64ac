#include <abh/cli.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;

namespace {

// Everything is computed before the first byte is written.
void write_all(const abh::RunOutput& out, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& f : out.files) {
    const auto tmp = dir / (f.name + ".tmp");
    {
      std::ofstream os(tmp, std::ios::binary);
      os << f.content;
      if (!os) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, dir / f.name);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic black hole decoherence and correlation simulator"};
  app.require_subcommand(1);
  std::string config_path, out_dir, format;
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());

  const std::vector<std::pair<std::string, abh::Command>> commands{
      {"decoherence", abh::Command::decoherence},
      {"correlation", abh::Command::correlation},
      {"er", abh::Command::er},
      {"mc-validate", abh::Command::mc_validate}};
  const std::vector<std::string> help{"decoherence time sweep on the ring", "momentum correlation map after collapse",
                                      "relative environment contribution e_r(t)", "ensemble check of the closed correlation"};
  std::vector<CLI::App*> subs;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* s = app.add_subcommand(commands[i].first, help[i]);
    s->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
    auto* o = s->add_option("--out", out_dir, "output directory (overrides output.dir)");
    auto* sd = s->add_option("--seed", seed, "master seed (overrides mc.seed)");
    auto* f = s->add_option("--format", format, "csv or jsonl (overrides output.format)")->check(CLI::IsMember({"csv", "jsonl"}));
    s->add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    // every subcommand binds the same variables; remember which options were given
    s->callback([&, o, sd, f] {
      out_opt = o;
      seed_opt = sd;
      format_opt = f;
    });
    subs.push_back(s);
  }
  CLI11_PARSE(app, argc, argv);

  abh::Command command{};
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) command = commands[i].second;

  abh::RunOutput out;
  fs::path dir;
  try {
    auto cfg = abh::parse_config_file(config_path, command);
    if (seed_opt && seed_opt->count()) cfg.mc.seed = seed;
    if (format_opt && format_opt->count()) cfg.output.format = format == "csv" ? abh::OutputFormat::csv : abh::OutputFormat::jsonl;
    if (out_opt && out_opt->count()) cfg.output.dir = out_dir;
    dir = cfg.output.dir;
    out = abh::run(cfg, threads);
  } catch (const abh::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  try {
    write_all(out, dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  for (const auto& f : out.files) std::cout << (dir / f.name).string() << "\n";
  return out.exit_code;
}
