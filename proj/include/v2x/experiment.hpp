#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2x/config.hpp"

namespace v2x {

/// One row of results.csv. Units: slots, joules per vehicle-slot, dimensionless.
struct ResultRecord {
  SweepPoint point;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double avg_aoi_slots = 0.0;
  double avg_energy_j = 0.0;
  double objective = 0.0;
  double mean_reward = 0.0;
  double wallclock_s = 0.0;  // timings.csv only
};

struct CurveRow {
  int point_index = 0;
  std::uint64_t seed = 0;
  int episode = 0;
  double mean_reward = 0.0;
};

struct RunOutput {
  std::vector<ResultRecord> records;
  std::vector<CurveRow> learning_curves;
  std::vector<CurveRow> ga_progress;  // episode = generation, mean_reward = best fitness
  int n_failed = 0;
};

struct RunOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_dir;
  bool save_checkpoints = true;
  std::function<void(const ResultRecord&)> on_record;
};

std::uint64_t eval_seed_for(std::uint64_t seed);

/// Runs a single (sweep point, seed) pair; throws on failure.
ResultRecord run_point(const ExperimentConfig& c, const SweepPoint& p, std::uint64_t seed,
                       std::vector<CurveRow>* curve, std::vector<CurveRow>* ga_progress,
                       const std::string& checkpoint_path = {});

/// Executes the full sweep and writes results.csv, learning_curves.csv,
/// ga_progress.csv, timings.csv and manifest.json into the output directory.
RunOutput run_experiment(ExperimentConfig c, const RunOptions& options);

std::string results_csv_header();
std::string format_record(const ResultRecord& r);

/// 64-bit FNV-1a over the canonical config text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SummaryRow {
  int n_vehicles = 0;
  double message_size_bits = 0.0;
  std::string access, radio, policy;
  int n_seeds = 0;
  double aoi_mean = 0.0, aoi_std = 0.0;
  double energy_mean = 0.0, energy_std = 0.0;
  double objective_mean = 0.0, objective_std = 0.0;
  double reward_mean = 0.0, reward_std = 0.0;
};

/// Reads results.csv; malformed input raises CsvError naming the line.
std::vector<ResultRecord> read_results_csv(const std::string& path);

/// Per sweep point mean and sample standard deviation over ok seeds (std 0 for one seed).
std::vector<SummaryRow> summarize_records(const std::vector<ResultRecord>& records);

/// Writes <dir>/summary.csv from <dir>/results.csv.
std::vector<SummaryRow> summarize_dir(const std::string& dir);

}  // namespace v2x
