#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "v2x/config.hpp"

using namespace v2x;
using nlohmann::json;

namespace {

ValidationReport parse(const json& doc) {
  ValidationReport r;
  parse_config(doc, r);
  return r;
}

bool mentions(const ValidationReport& r, const std::string& needle) {
  for (const auto& s : r.issues)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("an empty document gives the defaults") {
  ValidationReport r;
  const ExperimentConfig c = parse_config(json::object(), r);
  CHECK(r.ok());
  CHECK(c.env.scenario.n_vehicles == ScenarioConfig{}.n_vehicles);
  CHECK(c.agent.batch_size == 128);
  CHECK(c.agent.buffer_capacity == 2000);
  CHECK(c.ga.fitness_episodes == 1);
  CHECK(c.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("sweep expansion is a cartesian product in axis order") {
  SweepAxes a;
  a.n_vehicles = {10, 20, 30, 40};
  a.message_size_bits = {1200, 2400, 4800};
  a.policy = {PolicyKind::kRandom, PolicyKind::kGa, PolicyKind::kMpdqn};
  a.access = {AccessMode::kOma, AccessMode::kNoma};
  a.radio = {RadioMode::kNrMode2};
  const auto points = expand_sweep(a);
  CHECK(points.size() == 4 * 3 * 2 * 1 * 3);
  for (std::size_t k = 0; k < points.size(); ++k) CHECK(points[k].index == static_cast<int>(k));
  CHECK(points.front().n_vehicles == 10);
  CHECK(points[1].policy == PolicyKind::kGa);
  CHECK(points[3].access == AccessMode::kNoma);
  CHECK(points.back().n_vehicles == 40);

  SweepAxes b;
  b.n_vehicles = {10, 20, 30, 40};
  b.message_size_bits = {1, 2, 3};
  b.policy = {PolicyKind::kRandom, PolicyKind::kGa, PolicyKind::kMpdqn, PolicyKind::kRandom, PolicyKind::kGa};
  CHECK(expand_sweep(b).size() == 60);
}

TEST_CASE("unknown keys are reported with their location") {
  const auto r = parse(json::parse(R"({"agent": {"batch_sise": 64}, "extra": 1})"));
  CHECK_FALSE(r.ok());
  CHECK(mentions(r, "$.agent.batch_sise: unknown key"));
  CHECK(mentions(r, "$.extra: unknown key"));
}

TEST_CASE("type and range errors are all collected") {
  const auto r = parse(json::parse(R"({
    "agent": {"batch_size": 4096, "lr_q": "fast"},
    "sweep": {"access": ["CDMA"], "n_vehicles": []},
    "seeds": [-1]
  })"));
  CHECK(mentions(r, "$.agent.lr_q: wrong type"));
  CHECK(mentions(r, "$.agent"));
  CHECK(mentions(r, "batch_size must not exceed buffer_capacity"));
  CHECK(mentions(r, "$.sweep.access[0]: invalid value"));
  CHECK(mentions(r, "$.sweep.n_vehicles: expected a non-empty array"));
  CHECK(mentions(r, "$.seeds[0]"));
  CHECK(r.issues.size() >= 5);
}

TEST_CASE("weights must be non-negative and not both zero") {
  CHECK_FALSE(parse(json::parse(R"({"env": {"weights": {"energy": -0.1}}})")).ok());
  CHECK_FALSE(parse(json::parse(R"({"env": {"weights": {"energy": 0, "aoi": 0}}})")).ok());
  CHECK(parse(json::parse(R"({"env": {"weights": {"energy": 3, "aoi": 2}}})")).ok());
}

TEST_CASE("canonical form round trips") {
  ValidationReport r;
  const ExperimentConfig c = parse_config(json::parse(R"({
    "scenario": {"horizon_slots": 1234},
    "agent": {"hidden": 64, "train_episodes": 7},
    "ga": {"population": 12, "fitness_episodes": 2},
    "sweep": {"n_vehicles": [5, 9], "radio": ["NR", "LTE"], "policy": ["GA", "MPDQN"]},
    "seeds": [3, 4],
    "output_dir": "somewhere"
  })"),
                                          r);
  REQUIRE(r.ok());
  const json canon = config_to_json(c);
  ValidationReport r2;
  const ExperimentConfig back = parse_config(canon, r2);
  CHECK(r2.ok());
  CHECK(config_to_json(back) == canon);
  CHECK(back.ga.fitness_episodes == 2);
  CHECK(back.train_episodes == 7);
  CHECK(back.sweep.radio.size() == 2);
}

TEST_CASE("files: missing, malformed and manifest-wrapped") {
  const auto dir = std::filesystem::temp_directory_path() / "v2x_cfg_test";
  std::filesystem::create_directories(dir);
  CHECK_THROWS_AS(load_config((dir / "nope.json").string()), ConfigError);
  {
    std::ofstream(dir / "bad.json") << "{ not json";
  }
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
  CHECK_FALSE(validate_config_file((dir / "bad.json").string()).ok());
  {
    std::ofstream(dir / "m.json") << json{{"format", "v2x-manifest"}, {"config", {{"seeds", {9}}}}}.dump();
  }
  CHECK(load_config((dir / "m.json").string()).seeds == std::vector<std::uint64_t>{9});
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweep points drive the environment") {
  ExperimentConfig c;
  SweepPoint p;
  p.n_vehicles = 7;
  p.message_size_bits = 999;
  p.access = AccessMode::kOma;
  p.radio = RadioMode::kLteMode4;
  const EnvConfig e = env_for(c, p);
  CHECK(e.scenario.n_vehicles == 7);
  CHECK(e.access == AccessMode::kOma);
  CHECK(e.sps.mode == RadioMode::kLteMode4);
  CHECK(e.kpi.message_bits == 999);
  CHECK(p.id() != SweepPoint{}.id());
}
