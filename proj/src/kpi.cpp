#include "v2x/kpi.hpp"

#include <cmath>
#include <string>

namespace v2x {

void KpiParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("kpi: " + what); };
  if (queue_capacity < 1) fail("queue_capacity must be >= 1");
  if (n_message_types < 1) fail("n_message_types must be >= 1");
  if (arrival_period_slots < 1) fail("arrival_period_slots must be >= 1");
  if (!(message_bits > 0.0)) fail("message_bits must be > 0");
  if (!(slot_s > 0.0)) fail("slot_s must be > 0");
}

int success_indicator(double bandwidth_hz, double sinr, double message_bits, double slot_s) {
  if (!(sinr > 0.0)) return 0;
  const double bits = bandwidth_hz * std::log2(1.0 + sinr) * slot_s;
  return static_cast<int>(std::floor(bits / message_bits));
}

std::vector<int> queue_age_step(std::span<const int> ages, int beta) {
  std::vector<int> out;
  if (beta == 0) {
    out.reserve(ages.size());
    for (int a : ages) out.push_back(a + 1);
    return out;
  }
  for (std::size_t b = 0; b + 1 < ages.size(); ++b)
    out.push_back(beta * (ages[b + 1] - ages[b]) + ages[b] + 1);
  return out;
}

PriorityQueues::PriorityQueues(int n_vehicles, const KpiParams& params, Rng& rng)
    : params_(params),
      n_vehicles_(n_vehicles),
      phase_(static_cast<std::size_t>(n_vehicles) * params.n_message_types),
      queue_(static_cast<std::size_t>(n_vehicles) * params.n_message_types) {
  std::uniform_int_distribution<int> phase(0, params.arrival_period_slots - 1);
  for (auto& p : phase_) p = phase(rng);
}

void PriorityQueues::arrivals(std::int64_t t) {
  for (std::size_t k = 0; k < queue_.size(); ++k) {
    if ((t - phase_[k]) % params_.arrival_period_slots != 0 || t < phase_[k]) continue;
    auto& q = queue_[k];
    if (static_cast<int>(q.size()) >= params_.queue_capacity) {
      q.pop_front();
      ++dropped_;
    }
    q.push_back(t);
  }
}

PriorityQueues::Served PriorityQueues::serve(int i, std::int64_t t) {
  for (int n = 0; n < params_.n_message_types; ++n) {
    auto& q = queue_[static_cast<std::size_t>(i) * params_.n_message_types + n];
    if (q.empty()) continue;
    Served s{true, n, static_cast<int>(t - q.front())};
    q.pop_front();
    return s;
  }
  return {};
}

int PriorityQueues::length(int i, int type) const {
  return static_cast<int>(queue_[static_cast<std::size_t>(i) * params_.n_message_types + type].size());
}

std::vector<int> PriorityQueues::ages(int i, int type, std::int64_t t) const {
  std::vector<int> out;
  for (auto arrival : queue_[static_cast<std::size_t>(i) * params_.n_message_types + type])
    out.push_back(static_cast<int>(t - arrival));
  return out;
}

AoiLedger::AoiLedger(int n_vehicles)
    : n_(n_vehicles),
      phi_(static_cast<std::size_t>(n_vehicles) * n_vehicles, 0.0),
      row_sum_(static_cast<std::size_t>(n_vehicles), 0.0),
      row_cum_(static_cast<std::size_t>(n_vehicles), 0.0) {}

void AoiLedger::set(int i, int j, double value) {
  if (i == j) return;
  double& cell = phi_[idx(i, j)];
  row_sum_[static_cast<std::size_t>(i)] += value - cell;
  cell = value;
}

void AoiLedger::accumulate_slot() {
  for (int i = 0; i < n_; ++i) {
    row_cum_[static_cast<std::size_t>(i)] += row_sum_[static_cast<std::size_t>(i)];
    total_ += row_sum_[static_cast<std::size_t>(i)];
  }
  ++slots_;
}

double avg_aoi(const AoiLedger& ledger, std::int64_t horizon_slots) {
  const double n = ledger.size();
  return ledger.total_accumulated() / (static_cast<double>(horizon_slots) * n * n);
}

double per_vehicle_mean_aoi(const AoiLedger& ledger, int i, double row_accumulated_at_start,
                            std::int64_t window_slots) {
  if (window_slots <= 0) return 0.0;
  return (ledger.row_accumulated(i) - row_accumulated_at_start) /
         (static_cast<double>(window_slots) * ledger.size());
}

double EnergyLedger::charge(int vehicle, std::int64_t slot, double power_w, double duration_s, int rc0) {
  const double e = energy_event(power_w, duration_s, rc0);
  events_.push_back({vehicle, slot, power_w, duration_s, rc0, e});
  per_vehicle_[static_cast<std::size_t>(vehicle)] += e;
  total_ += e;
  return e;
}

double avg_energy(const EnergyLedger& ledger, std::int64_t horizon_slots, int n_vehicles) {
  return ledger.total() / (static_cast<double>(horizon_slots) * n_vehicles);
}

}  // namespace v2x
