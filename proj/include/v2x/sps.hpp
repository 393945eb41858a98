#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

/// Admissible resource reservation intervals, in slots.
inline constexpr std::array<int, 3> kRris = {20, 50, 100};

inline int rri_index(int rri_slots) {
  for (int k = 0; k < 3; ++k)
    if (kRris[k] == rri_slots) return k;
  return -1;
}

enum class RadioMode { kNrMode2, kLteMode4 };

struct SpsParams {
  int n_subchannels = 5;
  int t1_slots = 2;
  int n_sense_slots = 100;
  int lte_sense_slots = 1000;
  int x_percent = 20;
  double p_rk = 0.4;
  double rsrp_step_db = 3.0;
  RadioMode mode = RadioMode::kNrMode2;

  void validate() const;
  int sensing_window() const {
    return mode == RadioMode::kLteMode4 ? lte_sense_slots : n_sense_slots;
  }
};

struct Resource {
  std::int64_t slot = 0;
  int subchannel = 0;
  auto operator<=>(const Resource&) const = default;
};

struct Reservation {
  int owner = 0;
  std::int64_t selected_slot = 0;  // slot at which the selection was made
  std::int64_t start_slot = 0;
  int subchannel = 0;
  int rri_slots = 100;
  int rc_remaining = 0;
  int rc0 = 0;
  double tx_power_w = 0.0;
  int uses = 0;
  bool reevaluated = false;

  std::int64_t next_slot() const { return start_slot + static_cast<std::int64_t>(uses) * rri_slots; }
  Resource resource() const { return {start_slot, subchannel}; }
};

struct SensedSci {
  int tx_id = 0;
  int subchannel = 0;
  double rsrp_dbm = 0.0;
  int rri_slots = 100;
};

/// Trailing `window` slots of what one vehicle sensed (or transmitted itself).
class SensingLog {
 public:
  struct SlotRecord {
    std::int64_t slot = -1;
    bool own_tx = false;
    std::vector<SensedSci> scis;
  };

  explicit SensingLog(int window = 100) : ring_(static_cast<std::size_t>(window)) {}

  void record_own_tx(std::int64_t slot) { touch(slot).own_tx = true; }
  void record_sci(std::int64_t slot, const SensedSci& sci) { touch(slot).scis.push_back(sci); }

  /// Record for `slot`, or nullptr if nothing was logged or it was overwritten.
  const SlotRecord* at(std::int64_t slot) const {
    if (slot < 0) return nullptr;
    const auto& r = ring_[static_cast<std::size_t>(slot % window())];
    return r.slot == slot ? &r : nullptr;
  }
  int window() const { return static_cast<int>(ring_.size()); }

 private:
  SlotRecord& touch(std::int64_t slot) {
    auto& r = ring_[static_cast<std::size_t>(slot % window())];
    if (r.slot != slot) {
      r.slot = slot;
      r.own_tx = false;
      r.scis.clear();
    }
    return r;
  }
  std::vector<SlotRecord> ring_;
};

/// Time x subchannel lattice together with every vehicle's sensing history.
struct ResourceGrid {
  int n_subchannels = 5;
  std::vector<SensingLog> logs;

  ResourceGrid() = default;
  ResourceGrid(int n_vehicles, int n_subchannels_, int window)
      : n_subchannels(n_subchannels_), logs(static_cast<std::size_t>(n_vehicles), SensingLog(window)) {}
  int window() const { return logs.empty() ? 0 : logs.front().window(); }
};

/// Vehicles whose active reservation lands on `r`.
std::vector<int> reservers_of(std::span<const std::optional<Reservation>> reservations, const Resource& r);

/// Every (slot, subchannel) with slot in [now + T1, now + rri].
std::vector<Resource> build_candidate_set(int n_subchannels, int rri_slots, std::int64_t now,
                                          int t1_slots);

/// Removes candidates blocked by the sensing log of `vehicle` over the window
/// [now - window, now): (a) own transmissions project onto every candidate
/// slot a positive multiple of an admissible RRI later (half-duplex blind
/// slots), (b) a sensed SCI with RSRP >= threshold projects onto its own
/// subchannel at multiples of its advertised RRI.
std::vector<Resource> exclude_candidates(const ResourceGrid& grid, int vehicle,
                                         std::span<const Resource> candidates,
                                         double rsrp_threshold_dbm, std::int64_t now);

struct SelectionResult {
  Reservation reservation;
  std::size_t n_candidates = 0;
  std::size_t n_remaining = 0;
  int threshold_raises = 0;
  double final_threshold_dbm = 0.0;
  bool saturated = false;
};

/// Candidate construction, exclusion with 3 dB threshold relaxation until X%
/// survive, then a uniform pick. The window length comes from the grid, so
/// the same routine serves both radio modes.
SelectionResult select_resource(const ResourceGrid& grid, int vehicle, int rri_slots,
                                std::int64_t now, const SpsParams& params,
                                double rsrp_threshold_dbm, double tx_power_w, Rng& rng);

/// LTE-V2X Mode 4 flavour: same pipeline, long sensing window, never re-evaluated.
SelectionResult lte_mode4_select(const ResourceGrid& grid, int vehicle, int rri_slots,
                                 std::int64_t now, const SpsParams& params,
                                 double rsrp_threshold_dbm, double tx_power_w, Rng& rng);

/// Initial reselection counter for an RRI in [1, 100].
int rc0_of(int rri_slots);

struct OpportunityResult {
  bool transmit = true;
  bool counter_expired = false;
};

/// Consumes one reserved transmission. Throws std::logic_error off-schedule.
OpportunityResult on_transmit_opportunity(Reservation& reservation, std::int64_t now);

enum class KeepDecision { kKeep, kReselect };

/// Called with an expired counter: keep the resource (counter reloaded)
/// with probability p_rk, otherwise request a fresh selection.
KeepDecision reselect_or_keep(Reservation& reservation, const SpsParams& params, Rng& rng);

struct ReevalResult {
  enum class Kind { kConfirm, kMoved } kind = Kind::kConfirm;
  Reservation reservation;
  bool conflict_unresolved = false;
};

/// Mode 2 re-evaluation at slot z_g before first use: re-runs exclusion over
/// [z_g + T1, selected_slot + rri] and moves the reservation if its resource
/// is no longer available.
ReevalResult reevaluate(const ResourceGrid& grid, int vehicle, const Reservation& reservation,
                        std::int64_t z_g, const SpsParams& params, double rsrp_threshold_dbm,
                        Rng& rng);

}  // namespace v2x
