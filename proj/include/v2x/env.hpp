#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "v2x/channel.hpp"
#include "v2x/common.hpp"
#include "v2x/kpi.hpp"
#include "v2x/scenario.hpp"
#include "v2x/sps.hpp"

namespace v2x {

enum class AccessMode { kOma, kNoma };

/// The three admissible RRIs as a closed type.
enum class Rri : int { k20 = 20, k50 = 50, k100 = 100 };

inline int rri_slots(Rri r) { return static_cast<int>(r); }
inline int rri_to_index(Rri r) { return r == Rri::k20 ? 0 : (r == Rri::k50 ? 1 : 2); }
inline Rri rri_from_index(int k) { return k == 0 ? Rri::k20 : (k == 1 ? Rri::k50 : Rri::k100); }

struct ActionTuple {
  Rri gamma = Rri::k100;
  double power_w = 0.0;
};

struct ObjectiveWeights {
  double energy = 0.6;  // omega_1
  double aoi = 0.4;     // omega_2

  void validate() const;
  ObjectiveWeights normalized() const;
};

inline constexpr int kStateDim = 4;
using StateVector = std::array<double, kStateDim>;

struct VehicleState {
  int n_receivers = 0;
  double mean_dist_m = 0.0;
  double succ_prob = 1.0;
  int rc0 = 0;

  /// Network input: N/N_v, d/w, P(u=1), RC0/50.
  StateVector normalized(int n_vehicles, double rx_range_m) const;
};

struct Transition {
  StateVector state{};
  int action_index = 0;  // index into kRris
  double power_w = 0.0;  // executed (post-noise, clamped)
  double reward = 0.0;
  StateVector next_state{};
  bool done = false;
};

struct EnvConfig {
  ScenarioConfig scenario;
  ChannelParams channel;
  SpsParams sps;
  KpiParams kpi;
  ObjectiveWeights weights;
  AccessMode access = AccessMode::kNoma;
  double p_max_dbm = 23.0;
  int success_window_slots = 500;
  double aoi_ref_slots = 100.0;

  void validate() const;
  double p_max_w() const { return dbm_to_w(p_max_dbm); }
  double subchannel_bandwidth_hz() const { return channel.bandwidth_hz / sps.n_subchannels; }
  /// Per-vehicle per-slot energy when transmitting at P_max every 20 slots.
  double energy_ref_j() const { return p_max_w() * kpi.slot_s / kRris.front(); }
  /// Largest energy a single reservation can charge.
  double reservation_energy_max_j() const { return p_max_w() * kpi.slot_s * rc0_of(kRris.front()); }
};

/// Running min-max scaling of the two reward terms. Bounds start at the
/// feasible range and widen whenever a sample falls outside.
class RewardNormalizer {
 public:
  RewardNormalizer() = default;
  RewardNormalizer(double energy_max_j, double aoi_max_slots)
      : e_max_(energy_max_j), a_max_(aoi_max_slots) {}

  std::pair<double, double> normalize(double energy_j, double aoi_slots);

  double energy_max() const { return e_max_; }
  double aoi_max() const { return a_max_; }

 private:
  static double scale(double x, double lo, double hi) { return hi > lo ? (x - lo) / (hi - lo) : 0.0; }
  double e_min_ = 0.0, e_max_ = 1.0, a_min_ = 0.0, a_max_ = 1.0;
};

/// r = -(w1 * E_norm + w2 * Phi_norm)
inline double reward_from_terms(double energy_norm, double aoi_norm, const ObjectiveWeights& w) {
  return -(w.energy * energy_norm + w.aoi * aoi_norm);
}

struct EpisodeMetrics {
  double avg_aoi_slots = 0.0;
  double avg_energy_j = 0.0;
  double objective = 0.0;
  std::int64_t slots = 0;
};

/// Slot-level simulator exposed as an episodic decision process: actions are
/// requested only when a vehicle has to (re)select resources.
class V2xEnv {
 public:
  explicit V2xEnv(EnvConfig config);

  /// Starts a fresh episode; every vehicle awaits its initial action.
  std::vector<int> reset(std::uint64_t seed);

  VehicleState observe(int i) const;
  StateVector observe_normalized(int i) const;

  /// Executes (RRI, power) for a vehicle awaiting an action: runs resource
  /// selection, charges the reservation energy and opens a decision epoch.
  void apply_action(int i, const ActionTuple& action);

  /// Advances one slot. Returns the vehicles that now need a new action.
  std::vector<int> step();
  bool done() const { return world_.clock_slots >= config_.scenario.horizon_slots; }

  struct EpochOutcome {
    StateVector state{};
    ActionTuple action;
    double reward = 0.0;
    double energy_j = 0.0;
    double mean_aoi_slots = 0.0;
  };
  /// Closes vehicle i's current decision epoch and computes its reward.
  std::optional<EpochOutcome> close_epoch(int i);
  bool has_open_epoch(int i) const { return epochs_[static_cast<std::size_t>(i)].open; }

  EpisodeMetrics metrics() const;

  const EnvConfig& config() const { return config_; }
  /// Reward normalisation statistics persist across reset().
  const RewardNormalizer& normalizer() const { return normalizer_; }
  void set_normalizer(const RewardNormalizer& n) { normalizer_ = n; }
  const World& world() const { return world_; }
  const AoiLedger& aoi() const { return aoi_; }
  const EnergyLedger& energy() const { return energy_; }
  const ResourceGrid& grid() const { return grid_; }
  const std::vector<std::optional<Reservation>>& reservations() const { return reservations_; }
  const PriorityQueues& queues() const { return queues_; }
  EventLog& events() { return events_; }
  const EventLog& events() const { return events_; }
  void attach_trace(std::ostream* out) { events_.attach(out); }

  /// Per-slot record of deliveries, for tests and log replay.
  struct Delivery {
    std::int64_t slot = 0;
    int tx = 0;
    int rx = 0;
    double sinr = 0.0;
    int u = 0;
    bool has_message = false;
  };
  void record_deliveries(bool on) { record_deliveries_ = on; }
  const std::vector<Delivery>& deliveries() const { return deliveries_; }

 private:
  struct Epoch {
    bool open = false;
    StateVector state{};
    ActionTuple action;
    std::int64_t start_slot = 0;
    double row_accumulated_at_start = 0.0;
    double energy_j = 0.0;
    int lifetimes = 0;
  };
  struct SuccessSample {
    std::int64_t slot;
    int attempts;
    int successes;
  };
  struct TxInfo {
    int id;
    int subchannel;
    double power_w;
    int rri_slots;
    bool has_message;
    int head_age;
  };

  void run_reevaluations(std::int64_t t);
  void transmit_and_receive(std::int64_t t, const std::vector<TxInfo>& tx);

  EnvConfig config_;
  World world_;
  ResourceGrid grid_;
  ShadowingField shadowing_;
  PriorityQueues queues_;
  AoiLedger aoi_;
  EnergyLedger energy_;
  std::vector<std::optional<Reservation>> reservations_;
  std::vector<Epoch> epochs_;
  std::vector<std::deque<SuccessSample>> success_;
  RewardNormalizer normalizer_;
  EventLog events_;
  Rng fading_rng_;
  // Per-vehicle SPS streams, split by purpose so paired NR/LTE or OMA/NOMA
  // runs consume identical draws for identical events.
  std::vector<Rng> select_rng_;
  std::vector<Rng> keep_rng_;
  std::vector<Rng> reeval_rng_;
  double noise_w_ = 0.0;
  bool record_deliveries_ = false;
  std::vector<Delivery> deliveries_;
};

using PolicyFn = std::function<ActionTuple(int vehicle, const StateVector& state, int epoch_index)>;

struct EpisodeHooks {
  std::function<void(const Transition&)> on_transition;
  std::function<void()> on_slot;
};

struct EpisodeSummary {
  EpisodeMetrics metrics;
  double mean_reward = 0.0;
  int n_transitions = 0;
};

/// Drives one episode: initial actions, slot loop, per-epoch transitions, and
/// terminal transitions for epochs still open at the horizon.
EpisodeSummary run_episode(V2xEnv& env, std::uint64_t seed, const PolicyFn& policy,
                           const EpisodeHooks& hooks = {});

}  // namespace v2x
