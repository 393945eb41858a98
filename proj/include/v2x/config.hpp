#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "v2x/baselines.hpp"
#include "v2x/env.hpp"
#include "v2x/mpdqn.hpp"

namespace v2x {

enum class PolicyKind { kMpdqn, kGa, kRandom };

std::string to_string(PolicyKind p);
std::string to_string(AccessMode a);
std::string to_string(RadioMode r);

struct SweepAxes {
  std::vector<int> n_vehicles{20};
  std::vector<double> message_size_bits{2400.0};
  std::vector<AccessMode> access{AccessMode::kNoma};
  std::vector<RadioMode> radio{RadioMode::kNrMode2};
  std::vector<PolicyKind> policy{PolicyKind::kRandom};
};

struct ExperimentConfig {
  EnvConfig env;  // sweep axes override n_vehicles, message_bits, access and radio mode
  AgentParams agent;
  int train_episodes = 300;
  std::int64_t train_horizon_slots = 0;  // 0: scenario horizon
  GaConfig ga;
  int eval_episodes = 3;
  SweepAxes sweep;
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
};

/// Every problem found, each prefixed with its JSON location ("$.agent.batch_size: ...").
struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
  std::string joined() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc, ValidationReport& report);

/// Accepts either a config document or a run manifest (its embedded config).
nlohmann::json read_config_document(const std::string& path);

/// Parses and validates; throws ConfigError listing every issue.
ExperimentConfig load_config(const std::string& path);

ValidationReport validate_config_file(const std::string& path);

/// Canonical, fully-populated form. parse_config(config_to_json(c)) == c.
nlohmann::json config_to_json(const ExperimentConfig& c);

struct SweepPoint {
  int index = 0;
  int n_vehicles = 20;
  double message_size_bits = 2400.0;
  AccessMode access = AccessMode::kNoma;
  RadioMode radio = RadioMode::kNrMode2;
  PolicyKind policy = PolicyKind::kRandom;

  std::string id() const;
};

/// Cartesian product in axis order n_vehicles, message_size_bits, access, radio, policy.
std::vector<SweepPoint> expand_sweep(const SweepAxes& axes);

EnvConfig env_for(const ExperimentConfig& c, const SweepPoint& p);

}  // namespace v2x
