#include "v2x/sps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace v2x {

void SpsParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("sps: " + what); };
  if (n_subchannels < 1) fail("n_subchannels must be >= 1");
  if (t1_slots < 0) fail("t1_slots must be >= 0");
  if (t1_slots >= kRris.front()) fail("t1_slots must be < the smallest RRI (20)");
  if (n_sense_slots < 1) fail("n_sense_slots must be >= 1");
  if (lte_sense_slots < 1) fail("lte_sense_slots must be >= 1");
  if (x_percent != 20 && x_percent != 35 && x_percent != 50) fail("x_percent must be 20, 35 or 50");
  if (!(p_rk >= 0.0 && p_rk < 1.0)) fail("p_rk must be in [0, 1)");
  if (!(rsrp_step_db > 0.0)) fail("rsrp_step_db must be > 0");
}

std::vector<int> reservers_of(std::span<const std::optional<Reservation>> reservations,
                              const Resource& r) {
  std::vector<int> out;
  for (const auto& res : reservations) {
    if (!res || res->subchannel != r.subchannel) continue;
    const std::int64_t delta = r.slot - res->start_slot;
    if (delta >= 0 && delta % res->rri_slots == 0) out.push_back(res->owner);
  }
  return out;
}

std::vector<Resource> build_candidate_set(int n_subchannels, int rri_slots, std::int64_t now,
                                          int t1_slots) {
  if (t1_slots >= rri_slots)
    throw ConfigError("sps: T1 (" + std::to_string(t1_slots) + ") must be < RRI (" +
                      std::to_string(rri_slots) + ")");
  std::vector<Resource> out;
  out.reserve(static_cast<std::size_t>(rri_slots - t1_slots + 1) * n_subchannels);
  for (std::int64_t s = now + t1_slots; s <= now + rri_slots; ++s)
    for (int j = 0; j < n_subchannels; ++j) out.push_back({s, j});
  return out;
}

namespace {

/// Per-candidate view of the sensing log: half-duplex blocking and the
/// strongest RSRP projected onto the cell.
struct Assessment {
  std::vector<bool> half_duplex;
  std::vector<double> max_rsrp_dbm;
};

Assessment assess(const ResourceGrid& grid, int vehicle, std::span<const Resource> candidates,
                  std::int64_t now) {
  Assessment a{std::vector<bool>(candidates.size(), false),
               std::vector<double>(candidates.size(), -std::numeric_limits<double>::infinity())};
  if (candidates.empty()) return a;
  const int J = grid.n_subchannels;
  std::int64_t lo = candidates.front().slot, hi = lo;
  for (const auto& c : candidates) {
    lo = std::min(lo, c.slot);
    hi = std::max(hi, c.slot);
  }
  const std::size_t span = static_cast<std::size_t>(hi - lo + 1);
  std::vector<bool> hd_slot(span, false);
  std::vector<double> cell(span * J, -std::numeric_limits<double>::infinity());

  const SensingLog& log = grid.logs[static_cast<std::size_t>(vehicle)];
  for (std::int64_t s = std::max<std::int64_t>(0, now - log.window()); s < now; ++s) {
    const auto* rec = log.at(s);
    if (rec == nullptr) continue;
    if (rec->own_tx) {
      for (int period : kRris) {
        std::int64_t c = s + period;
        if (c < lo) c += ((lo - c + period - 1) / period) * period;
        for (; c <= hi; c += period) hd_slot[static_cast<std::size_t>(c - lo)] = true;
      }
    }
    for (const auto& sci : rec->scis) {
      const int period = sci.rri_slots;
      std::int64_t c = s + period;
      if (c < lo) c += ((lo - c + period - 1) / period) * period;
      for (; c <= hi; c += period) {
        double& v = cell[static_cast<std::size_t>(c - lo) * J + sci.subchannel];
        v = std::max(v, sci.rsrp_dbm);
      }
    }
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& c = candidates[k];
    a.half_duplex[k] = hd_slot[static_cast<std::size_t>(c.slot - lo)];
    a.max_rsrp_dbm[k] = cell[static_cast<std::size_t>(c.slot - lo) * J + c.subchannel];
  }
  return a;
}

std::vector<std::size_t> surviving(const Assessment& a, double threshold_dbm) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < a.half_duplex.size(); ++k)
    if (!a.half_duplex[k] && a.max_rsrp_dbm[k] < threshold_dbm) out.push_back(k);
  return out;
}

struct FilterOutcome {
  std::vector<std::size_t> remaining;
  int raises = 0;
  double threshold_dbm = 0.0;
  bool saturated = false;
};

/// Raises the threshold in steps until X% of the candidates survive. When
/// half-duplex blocking alone already violates X%, falls back to the
/// non-blocked cells (or to every cell if none is left).
FilterOutcome filter_with_relaxation(const Assessment& a, std::size_t n_candidates,
                                     const SpsParams& params, double threshold_dbm) {
  FilterOutcome out;
  const auto needed = static_cast<std::size_t>(
      std::ceil(params.x_percent / 100.0 * static_cast<double>(n_candidates) - 1e-9));
  const auto hd_only = surviving(a, std::numeric_limits<double>::infinity());
  out.threshold_dbm = threshold_dbm;
  for (;;) {
    out.remaining = surviving(a, out.threshold_dbm);
    if (out.remaining.size() >= needed) return out;
    if (out.remaining.size() == hd_only.size()) break;
    out.threshold_dbm += params.rsrp_step_db;
    ++out.raises;
  }
  out.saturated = true;
  if (out.remaining.empty()) {
    out.remaining.resize(n_candidates);
    for (std::size_t k = 0; k < n_candidates; ++k) out.remaining[k] = k;
  }
  return out;
}

SelectionResult select_impl(const ResourceGrid& grid, int vehicle, int rri_slots, std::int64_t now,
                            const SpsParams& params, double threshold_dbm, double tx_power_w,
                            Rng& rng) {
  const auto candidates = build_candidate_set(grid.n_subchannels, rri_slots, now, params.t1_slots);
  const auto a = assess(grid, vehicle, candidates, now);
  const auto f = filter_with_relaxation(a, candidates.size(), params, threshold_dbm);
  std::uniform_int_distribution<std::size_t> pick(0, f.remaining.size() - 1);
  const Resource chosen = candidates[f.remaining[pick(rng)]];

  SelectionResult out;
  out.n_candidates = candidates.size();
  out.n_remaining = f.remaining.size();
  out.threshold_raises = f.raises;
  out.final_threshold_dbm = f.threshold_dbm;
  out.saturated = f.saturated;
  Reservation& r = out.reservation;
  r.owner = vehicle;
  r.selected_slot = now;
  r.start_slot = chosen.slot;
  r.subchannel = chosen.subchannel;
  r.rri_slots = rri_slots;
  r.rc0 = rc0_of(rri_slots);
  r.rc_remaining = r.rc0;
  r.tx_power_w = tx_power_w;
  return out;
}

}  // namespace

std::vector<Resource> exclude_candidates(const ResourceGrid& grid, int vehicle,
                                         std::span<const Resource> candidates,
                                         double rsrp_threshold_dbm, std::int64_t now) {
  const auto a = assess(grid, vehicle, candidates, now);
  std::vector<Resource> out;
  for (std::size_t k : surviving(a, rsrp_threshold_dbm)) out.push_back(candidates[k]);
  return out;
}

SelectionResult select_resource(const ResourceGrid& grid, int vehicle, int rri_slots,
                                std::int64_t now, const SpsParams& params,
                                double rsrp_threshold_dbm, double tx_power_w, Rng& rng) {
  return select_impl(grid, vehicle, rri_slots, now, params, rsrp_threshold_dbm, tx_power_w, rng);
}

SelectionResult lte_mode4_select(const ResourceGrid& grid, int vehicle, int rri_slots,
                                 std::int64_t now, const SpsParams& params,
                                 double rsrp_threshold_dbm, double tx_power_w, Rng& rng) {
  if (params.mode != RadioMode::kLteMode4)
    throw std::logic_error("lte_mode4_select called outside LTE mode");
  return select_impl(grid, vehicle, rri_slots, now, params, rsrp_threshold_dbm, tx_power_w, rng);
}

int rc0_of(int rri_slots) {
  if (rri_slots < 1 || rri_slots > 100)
    throw std::out_of_range("rc0_of: RRI " + std::to_string(rri_slots) + " outside [1, 100]");
  if (rri_slots <= 19) return 50;
  return static_cast<int>(std::lround(1000.0 / std::max(20, rri_slots)));
}

OpportunityResult on_transmit_opportunity(Reservation& reservation, std::int64_t now) {
  if (now != reservation.next_slot())
    throw std::logic_error("transmit opportunity off schedule: slot " + std::to_string(now) +
                           ", expected " + std::to_string(reservation.next_slot()));
  if (reservation.rc_remaining <= 0) throw std::logic_error("transmit opportunity with expired counter");
  ++reservation.uses;
  --reservation.rc_remaining;
  return {true, reservation.rc_remaining == 0};
}

KeepDecision reselect_or_keep(Reservation& reservation, const SpsParams& params, Rng& rng) {
  if (reservation.rc_remaining != 0) throw std::logic_error("reselect_or_keep with live counter");
  std::bernoulli_distribution keep(params.p_rk);
  if (keep(rng)) {
    reservation.rc_remaining = reservation.rc0;
    return KeepDecision::kKeep;
  }
  return KeepDecision::kReselect;
}

ReevalResult reevaluate(const ResourceGrid& grid, int vehicle, const Reservation& reservation,
                        std::int64_t z_g, const SpsParams& params, double rsrp_threshold_dbm,
                        Rng& rng) {
  if (params.mode != RadioMode::kNrMode2) throw std::logic_error("re-evaluation is NR Mode 2 only");
  if (z_g >= reservation.start_slot) throw std::logic_error("re-evaluation after first use");

  ReevalResult out;
  out.reservation = reservation;
  out.reservation.reevaluated = true;

  std::vector<Resource> window;
  for (std::int64_t s = z_g + params.t1_slots; s <= reservation.selected_slot + reservation.rri_slots; ++s)
    for (int j = 0; j < grid.n_subchannels; ++j) window.push_back({s, j});
  if (window.empty()) {
    out.conflict_unresolved = true;
    return out;
  }
  const auto a = assess(grid, vehicle, window, z_g);
  const auto f = filter_with_relaxation(a, window.size(), params, rsrp_threshold_dbm);
  const Resource held = reservation.resource();
  std::vector<std::size_t> alternatives;
  for (std::size_t k : f.remaining) {
    if (window[k] == held) return out;  // still available
    alternatives.push_back(k);
  }
  if (alternatives.empty()) {
    out.conflict_unresolved = true;
    return out;
  }
  std::uniform_int_distribution<std::size_t> pick(0, alternatives.size() - 1);
  const Resource chosen = window[alternatives[pick(rng)]];
  out.kind = ReevalResult::Kind::kMoved;
  out.reservation.start_slot = chosen.slot;
  out.reservation.subchannel = chosen.subchannel;
  out.reservation.uses = 0;
  return out;
}

}  // namespace v2x
