#pragma once

#include <cstdint>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

/// Road geometry and population. Defaults follow the highway setup used in
/// the experiments (500 m road, 150 m receiver range, 60-80 km/h).
struct ScenarioConfig {
  int n_vehicles = 20;
  double road_length_m = 500.0;
  double rsu_range_m = 250.0;  // bookkeeping only
  double rx_range_m = 150.0;
  double v_min_mps = 60.0 / 3.6;
  double v_max_mps = 80.0 / 3.6;
  int n_lanes_per_direction = 2;
  double slot_ms = 1.0;
  std::int64_t horizon_slots = 5000;
  std::uint64_t seed = 1;

  /// Throws ConfigError naming the first violated bound.
  void validate() const;
};

struct Vehicle {
  int id = 0;
  double position_m = 0.0;
  int lane = 0;
  int direction = 1;  // +1 or -1
  double speed_mps = 0.0;
};

struct World {
  ScenarioConfig config;
  std::vector<Vehicle> vehicles;
  std::int64_t clock_slots = 0;
};

struct ReceiverSet {
  std::vector<int> ids;
  double mean_distance_m = 0.0;
};

World init_world(const ScenarioConfig& config);

/// Advances every vehicle by one slot at constant speed on the ring road.
void step_mobility(World& world);

/// Longitudinal distance on the ring (lane offsets ignored).
double ring_distance(const World& world, int i, int j);

ReceiverSet receivers_of(const World& world, int i);

}  // namespace v2x
