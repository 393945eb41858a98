#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

struct KpiParams {
  int queue_capacity = 10;        // L
  int n_message_types = 4;        // type 0 has the highest priority
  int arrival_period_slots = 100; // one message per type per period
  double message_bits = 2400.0;   // G
  double slot_s = 0.001;          // also the per-use air time l

  void validate() const;
};

/// u = floor(W * log2(1 + sinr) * slot_s / G); delivery succeeds iff u >= 1.
int success_indicator(double bandwidth_hz, double sinr, double message_bits, double slot_s);

/// Receiver-side AoI after one transmission opportunity spaced `rri` slots:
/// a success restarts from the delivered message's age, a failure keeps aging.
inline double update_rx_aoi(double current, int u, int rri_slots, double head_age) {
  return u >= 1 ? head_age + rri_slots : current + rri_slots;
}

/// One slot of the queue-age recursion phi' = beta*(phi[b+1] - phi[b]) + phi[b] + 1
/// for ages listed head (oldest) first. With beta = 1 the head departs and the
/// tail position is left for the arrival rule, so the result is one shorter.
std::vector<int> queue_age_step(std::span<const int> ages, int beta);

/// Service gate: 1 exactly at a reserved slot while the queue is non-empty.
inline int beta(std::int64_t t, std::int64_t reserved_slot, int queue_length, int capacity) {
  if (t != reserved_slot || queue_length <= 0) return 0;
  return (queue_length + capacity - 1) / capacity >= 1 ? 1 : 0;
}

/// Four FIFO priority queues per vehicle with periodic arrivals. Entries keep
/// their arrival slot, so an entry's age at slot t is t - arrival.
class PriorityQueues {
 public:
  PriorityQueues() = default;
  PriorityQueues(int n_vehicles, const KpiParams& params, Rng& rng);

  /// Periodic arrivals at slot t; a full queue drops its head first.
  void arrivals(std::int64_t t);

  struct Served {
    bool has_message = false;
    int type = -1;
    int head_age = 0;
  };
  /// Serves the highest-priority non-empty queue of vehicle i at slot t.
  Served serve(int i, std::int64_t t);

  int length(int i, int type) const;
  std::vector<int> ages(int i, int type, std::int64_t t) const;
  std::int64_t dropped() const { return dropped_; }

 private:
  KpiParams params_;
  int n_vehicles_ = 0;
  std::vector<int> phase_;                      // [vehicle * types + type]
  std::vector<std::deque<std::int64_t>> queue_; // arrival slots, head first
  std::int64_t dropped_ = 0;
};

/// Receiver-side AoI matrix Phi (slots) with per-slot accumulation.
class AoiLedger {
 public:
  AoiLedger() = default;
  explicit AoiLedger(int n_vehicles);

  int size() const { return n_; }
  double get(int i, int j) const { return phi_[idx(i, j)]; }
  /// Diagonal writes are ignored.
  void set(int i, int j, double value);
  double row_sum(int i) const { return row_sum_[static_cast<std::size_t>(i)]; }

  /// Adds the current matrix to the running totals (call once per slot).
  void accumulate_slot();
  std::int64_t slots() const { return slots_; }
  double total_accumulated() const { return total_; }
  double row_accumulated(int i) const { return row_cum_[static_cast<std::size_t>(i)]; }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }
  int n_ = 0;
  std::vector<double> phi_;
  std::vector<double> row_sum_;
  std::vector<double> row_cum_;
  double total_ = 0.0;
  std::int64_t slots_ = 0;
};

/// (1/T)(1/N^2) sum_t sum_i sum_j Phi_ij.
double avg_aoi(const AoiLedger& ledger, std::int64_t horizon_slots);

/// (1/T)(1/N) sum over a window of row i, given the row accumulator at the
/// window start.
double per_vehicle_mean_aoi(const AoiLedger& ledger, int i, double row_accumulated_at_start,
                            std::int64_t window_slots);

/// E = p * l * RC0
inline double energy_event(double power_w, double duration_s, int rc0) {
  return power_w * duration_s * rc0;
}

struct EnergyEvent {
  int vehicle = 0;
  std::int64_t slot = 0;
  double power_w = 0.0;
  double duration_s = 0.0;
  int rc0 = 0;
  double joules = 0.0;
};

class EnergyLedger {
 public:
  EnergyLedger() = default;
  explicit EnergyLedger(int n_vehicles) : per_vehicle_(static_cast<std::size_t>(n_vehicles), 0.0) {}

  double charge(int vehicle, std::int64_t slot, double power_w, double duration_s, int rc0);
  double total() const { return total_; }
  double vehicle_total(int i) const { return per_vehicle_[static_cast<std::size_t>(i)]; }
  const std::vector<EnergyEvent>& events() const { return events_; }

 private:
  std::vector<double> per_vehicle_;
  std::vector<EnergyEvent> events_;
  double total_ = 0.0;
};

/// (1/T)(1/N) sum_t sum_i E_i.
double avg_energy(const EnergyLedger& ledger, std::int64_t horizon_slots, int n_vehicles);

/// Scalarised objective w1 * E/E_ref + w2 * Phi/Phi_ref.
inline double weighted_objective(double avg_energy_j, double avg_aoi_slots, double w_energy,
                                 double w_aoi, double energy_ref_j, double aoi_ref_slots) {
  return w_energy * avg_energy_j / energy_ref_j + w_aoi * avg_aoi_slots / aoi_ref_slots;
}

}  // namespace v2x
