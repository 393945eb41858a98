#include "v2x/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace v2x {

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("scenario: " + what); };
  if (n_vehicles < 2) fail("n_vehicles must be >= 2");
  if (!(road_length_m > 0.0)) fail("road_length_m must be > 0");
  if (!(rx_range_m > 0.0)) fail("rx_range_m must be > 0");
  if (rx_range_m > road_length_m) fail("rx_range_m must be <= road_length_m");
  if (v_min_mps < 0.0) fail("v_min_mps must be >= 0");
  if (v_min_mps > v_max_mps) fail("v_min_mps must be <= v_max_mps");
  if (n_lanes_per_direction < 1) fail("n_lanes_per_direction must be >= 1");
  if (slot_ms != 1.0) fail("slot_ms must be 1");
  if (horizon_slots < 1) fail("horizon_slots must be >= 1");
}

World init_world(const ScenarioConfig& config) {
  config.validate();
  World world;
  world.config = config;
  Rng rng = make_rng(config.seed, Stream::kMobility);
  std::uniform_real_distribution<double> pos(0.0, config.road_length_m);
  std::uniform_real_distribution<double> speed(config.v_min_mps, config.v_max_mps);
  world.vehicles.reserve(config.n_vehicles);
  for (int k = 0; k < config.n_vehicles; ++k) {
    Vehicle v;
    v.id = k;
    v.direction = (k % 2 == 0) ? 1 : -1;
    v.lane = (k / 2) % config.n_lanes_per_direction;
    v.position_m = pos(rng);
    v.speed_mps = config.v_min_mps == config.v_max_mps ? config.v_min_mps : speed(rng);
    world.vehicles.push_back(v);
  }
  return world;
}

void step_mobility(World& world) {
  const double length = world.config.road_length_m;
  const double dt = world.config.slot_ms / 1000.0;
  for (auto& v : world.vehicles) {
    double x = v.position_m + v.direction * v.speed_mps * dt;
    x = std::fmod(x, length);
    if (x < 0.0) x += length;
    v.position_m = x;
  }
  ++world.clock_slots;
}

double ring_distance(const World& world, int i, int j) {
  const double length = world.config.road_length_m;
  double d = std::fabs(world.vehicles[i].position_m - world.vehicles[j].position_m);
  return std::min(d, length - d);
}

ReceiverSet receivers_of(const World& world, int i) {
  ReceiverSet out;
  double sum = 0.0;
  for (int j = 0; j < static_cast<int>(world.vehicles.size()); ++j) {
    if (j == i) continue;
    double d = ring_distance(world, i, j);
    if (d <= world.config.rx_range_m) {
      out.ids.push_back(j);
      sum += d;
    }
  }
  if (!out.ids.empty()) out.mean_distance_m = sum / static_cast<double>(out.ids.size());
  return out;
}

}  // namespace v2x
