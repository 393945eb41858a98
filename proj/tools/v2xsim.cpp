#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "v2x/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

}  // namespace

int main(int argc, char** argv) {
  v2x::tune_allocator();
  CLI::App app{"NR-V2X sidelink AoI/energy simulator and experiment runner"};
  app.require_subcommand(1);

  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_dir;
  bool quiet = false;
  std::string config_path, dir;

  auto* run = app.add_subcommand("run", "Run every sweep point of a config (or manifest)");
  run->add_option("config", config_path, "Config or manifest JSON")->required();
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed-override", seed_override, "Replace the seed list with this seed");
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_flag("-q,--quiet", quiet, "No per-record progress");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "Config JSON")->required();

  auto* summarize = app.add_subcommand("summarize", "Write summary.csv from results.csv");
  summarize->add_option("dir", dir, "Run output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (*validate) {
    const auto report = v2x::validate_config_file(config_path);
    if (report.ok()) {
      std::cout << "ok\n";
      return kExitOk;
    }
    for (const auto& issue : report.issues) std::cerr << issue << '\n';
    return kExitConfig;
  }

  if (*summarize) {
    try {
      const auto rows = v2x::summarize_dir(dir);
      std::cout << rows.size() << " sweep points summarized\n";
      return kExitOk;
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return kExitConfig;
    }
  }

  v2x::ExperimentConfig config;
  try {
    config = v2x::load_config(config_path);
  } catch (const v2x::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }
  v2x::set_warnings_enabled(false);
  v2x::RunOptions options;
  options.jobs = jobs;
  options.seed_override = seed_override;
  options.out_dir = out_dir;
  if (!quiet)
    options.on_record = [](const v2x::ResultRecord& r) {
      std::cerr << r.point.id() << " seed " << r.seed << ": " << r.status << " (" << r.wallclock_s << " s)\n";
    };
  try {
    const auto out = v2x::run_experiment(config, options);
    if (out.n_failed > 0) {
      std::cerr << out.n_failed << " of " << out.records.size() << " runs failed\n";
      return kExitPartial;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitPartial;
  }
  return kExitOk;
}
