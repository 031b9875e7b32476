#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seth/config.hpp"
#include "seth/presets.hpp"

namespace fs = std::filesystem;

namespace {

std::string usage() {
  std::string s = "usage: seth run <preset|config-path> [--seed N] [--out DIR] [--check] [--runs K] [--set key=value ...]\n";
  s += "presets:";
  for (const auto& n : seth::presets::names()) s += " " + n;
  return s + "\n";
}

void write_files(const seth::presets::Output& out, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, body] : out.files) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f << body;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacitive intra-silicone bus simulator"};
  app.require_subcommand(1);

  std::string target;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int runs = 0;
  bool check = false;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Run a preset or a scenario file");
  run->add_option("target", target, "Preset name or path to an INI scenario")->required();
  auto* seed_opt = run->add_option("--seed", seed, "Root seed");
  run->add_option("--out", out_dir, "Output directory")->capture_default_str();
  run->add_flag("--check", check, "Exit 2 when an acceptance check fails");
  auto* runs_opt = run->add_option("--runs", runs, "Replicates")->check(CLI::PositiveNumber);
  run->add_option("--set", sets, "Override section.key=value")->allow_extra_args(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n" << usage();
    return 1;
  }

  seth::presets::Options opts;
  if (*seed_opt) opts.seed = seed;
  if (*runs_opt) opts.runs = runs;
  opts.overrides = sets;

  try {
    seth::presets::Output out;
    if (seth::presets::exists(target)) {
      out = seth::presets::run_preset(target, opts);
    } else if (fs::is_regular_file(target)) {
      out = seth::presets::run_config(seth::config::parse_config(target, sets), opts);
    } else {
      std::cerr << "seth: unknown preset or missing file '" << target << "'\n" << usage();
      return 1;
    }
    write_files(out, out_dir);
    for (const auto& c : out.checks) {
      std::printf("%s  %s  (%s)\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    }
    if (check && !out.passed()) return 2;
  } catch (const std::exception& e) {
    std::cerr << "seth: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
