#include "v2x/env.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace v2x {

void ObjectiveWeights::validate() const {
  if (!(energy >= 0.0) || !(aoi >= 0.0)) throw ConfigError("env: objective weights must be >= 0");
  if (energy + aoi <= 0.0) throw ConfigError("env: objective weights must not both be 0");
}

ObjectiveWeights ObjectiveWeights::normalized() const {
  const double s = energy + aoi;
  return {energy / s, aoi / s};
}

StateVector VehicleState::normalized(int n_vehicles, double rx_range_m) const {
  return {static_cast<double>(n_receivers) / n_vehicles, mean_dist_m / rx_range_m, succ_prob,
          rc0 / 50.0};
}

void EnvConfig::validate() const {
  scenario.validate();
  channel.validate();
  sps.validate();
  kpi.validate();
  weights.validate();
  if (success_window_slots < 1) throw ConfigError("env: success_window_slots must be >= 1");
  if (!(aoi_ref_slots > 0.0)) throw ConfigError("env: aoi_ref_slots must be > 0");
  if (!std::isfinite(p_max_dbm)) throw ConfigError("env: p_max_dbm must be finite");
}

std::pair<double, double> RewardNormalizer::normalize(double energy_j, double aoi_slots) {
  e_min_ = std::min(e_min_, energy_j);
  e_max_ = std::max(e_max_, energy_j);
  a_min_ = std::min(a_min_, aoi_slots);
  a_max_ = std::max(a_max_, aoi_slots);
  return {scale(energy_j, e_min_, e_max_), scale(aoi_slots, a_min_, a_max_)};
}

V2xEnv::V2xEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  config_.weights = config_.weights.normalized();
  normalizer_ = RewardNormalizer(config_.reservation_energy_max_j(), config_.aoi_ref_slots);
  noise_w_ = noise_power_w(config_.subchannel_bandwidth_hz(), config_.channel.noise_figure_db);
}

std::vector<int> V2xEnv::reset(std::uint64_t seed) {
  ScenarioConfig sc = config_.scenario;
  sc.seed = seed;
  world_ = init_world(sc);
  const int n = sc.n_vehicles;
  grid_ = ResourceGrid(n, config_.sps.n_subchannels, config_.sps.sensing_window());
  shadowing_ = ShadowingField(n, config_.channel, make_rng(seed, Stream::kShadowing));
  Rng traffic = make_rng(seed, Stream::kTraffic);
  queues_ = PriorityQueues(n, config_.kpi, traffic);
  aoi_ = AoiLedger(n);
  energy_ = EnergyLedger(n);
  reservations_.assign(static_cast<std::size_t>(n), std::nullopt);
  epochs_.assign(static_cast<std::size_t>(n), Epoch{});
  success_.assign(static_cast<std::size_t>(n), {});
  fading_rng_ = make_rng(seed, Stream::kFading);
  select_rng_.clear();
  keep_rng_.clear();
  reeval_rng_.clear();
  for (int i = 0; i < n; ++i) {
    const std::uint64_t base = mix_seed(seed ^ mix_seed(0x100ULL + static_cast<std::uint64_t>(i)));
    select_rng_.push_back(make_rng(base, Stream::kSps));
    keep_rng_.push_back(make_rng(base + 1, Stream::kSps));
    reeval_rng_.push_back(make_rng(base + 2, Stream::kSps));
  }
  events_.clear_counts();
  deliveries_.clear();

  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  return all;
}

VehicleState V2xEnv::observe(int i) const {
  VehicleState s;
  const auto rx = receivers_of(world_, i);
  s.n_receivers = static_cast<int>(rx.ids.size());
  s.mean_dist_m = rx.mean_distance_m;
  int attempts = 0, successes = 0;
  const std::int64_t from = world_.clock_slots - config_.success_window_slots;
  for (const auto& sample : success_[static_cast<std::size_t>(i)]) {
    if (sample.slot < from) continue;
    attempts += sample.attempts;
    successes += sample.successes;
  }
  s.succ_prob = attempts > 0 ? static_cast<double>(successes) / attempts : 1.0;
  const auto& r = reservations_[static_cast<std::size_t>(i)];
  s.rc0 = r ? r->rc0 : 0;
  return s;
}

StateVector V2xEnv::observe_normalized(int i) const {
  return observe(i).normalized(config_.scenario.n_vehicles, config_.scenario.rx_range_m);
}

void V2xEnv::apply_action(int i, const ActionTuple& action) {
  ActionTuple a = action;
  const double p_max = config_.p_max_w();
  if (!(a.power_w >= 0.0 && a.power_w <= p_max)) {
    const double requested = a.power_w;
    a.power_w = std::isnan(a.power_w) ? 0.0 : std::clamp(a.power_w, 0.0, p_max);
    std::ostringstream f;
    f << "\"vehicle\":" << i << ",\"requested_w\":" << requested << ",\"clamped_w\":" << a.power_w;
    events_.emit("power_clamp", f.str());
  }

  Epoch& ep = epochs_[static_cast<std::size_t>(i)];
  ep = Epoch{};
  ep.open = true;
  ep.state = observe_normalized(i);
  ep.action = a;
  ep.start_slot = world_.clock_slots;
  ep.row_accumulated_at_start = aoi_.row_accumulated(i);

  const std::int64_t now = world_.clock_slots;
  const double threshold = config_.channel.rsrp_threshold_dbm;
  const SelectionResult sel =
      config_.sps.mode == RadioMode::kLteMode4
          ? lte_mode4_select(grid_, i, rri_slots(a.gamma), now, config_.sps, threshold, a.power_w, select_rng_[static_cast<std::size_t>(i)])
          : select_resource(grid_, i, rri_slots(a.gamma), now, config_.sps, threshold, a.power_w, select_rng_[static_cast<std::size_t>(i)]);
  reservations_[static_cast<std::size_t>(i)] = sel.reservation;
  {
    std::ostringstream f;
    f.precision(17);
    f << "\"slot\":" << now << ",\"vehicle\":" << i << ",\"rri\":" << rri_slots(a.gamma)
      << ",\"power_w\":" << a.power_w << ",\"start\":" << sel.reservation.start_slot
      << ",\"subchannel\":" << sel.reservation.subchannel << ",\"candidates\":" << sel.n_candidates
      << ",\"remaining\":" << sel.n_remaining << ",\"raises\":" << sel.threshold_raises;
    events_.emit("select", f.str());
  }
  if (sel.saturated) events_.emit("saturation", "\"vehicle\":" + std::to_string(i));

  ep.energy_j += energy_.charge(i, now, a.power_w, config_.kpi.slot_s, sel.reservation.rc0);
  ep.lifetimes = 1;
}

void V2xEnv::run_reevaluations(std::int64_t t) {
  if (config_.sps.mode != RadioMode::kNrMode2) return;
  const int t1 = config_.sps.t1_slots;
  for (auto& slot : reservations_) {
    if (!slot || slot->reevaluated || slot->uses != 0) continue;
    Reservation& r = *slot;
    if (t != r.start_slot - t1 || t <= r.selected_slot) continue;
    const auto result = reevaluate(grid_, r.owner, r, t, config_.sps,
                                   config_.channel.rsrp_threshold_dbm,
                                   reeval_rng_[static_cast<std::size_t>(r.owner)]);
    if (result.kind == ReevalResult::Kind::kMoved) {
      std::ostringstream f;
      f << "\"slot\":" << t << ",\"vehicle\":" << r.owner << ",\"from\":[" << r.start_slot << ','
        << r.subchannel << "],\"to\":[" << result.reservation.start_slot << ','
        << result.reservation.subchannel << ']';
      events_.emit("reeval_move", f.str());
    } else if (result.conflict_unresolved) {
      events_.emit("reeval_conflict", "\"vehicle\":" + std::to_string(r.owner));
    }
    r = result.reservation;
    r.reevaluated = true;
  }
}

std::vector<int> V2xEnv::step() {
  if (done()) throw std::logic_error("step() past the horizon");
  const std::int64_t t = world_.clock_slots;
  const int n = config_.scenario.n_vehicles;

  run_reevaluations(t);
  queues_.arrivals(t);

  std::vector<TxInfo> tx;
  std::vector<int> need_action;
  std::vector<std::size_t> expired;
  for (int i = 0; i < n; ++i) {
    auto& r = reservations_[static_cast<std::size_t>(i)];
    if (!r || r->next_slot() != t) continue;
    const auto served = queues_.serve(i, t);
    tx.push_back({i, r->subchannel, r->tx_power_w, r->rri_slots, served.has_message, served.head_age});
    if (on_transmit_opportunity(*r, t).counter_expired) expired.push_back(static_cast<std::size_t>(i));
  }

  if (!tx.empty()) transmit_and_receive(t, tx);

  for (std::size_t i : expired) {
    auto& r = reservations_[i];
    if (reselect_or_keep(*r, config_.sps, keep_rng_[i]) == KeepDecision::kKeep) {
      const double e = energy_.charge(static_cast<int>(i), t, r->tx_power_w, config_.kpi.slot_s, r->rc0);
      epochs_[i].energy_j += e;
      ++epochs_[i].lifetimes;
      events_.emit("keep", "\"vehicle\":" + std::to_string(i));
    } else {
      r.reset();
      need_action.push_back(static_cast<int>(i));
    }
  }

  aoi_.accumulate_slot();
  step_mobility(world_);
  return need_action;
}

void V2xEnv::transmit_and_receive(std::int64_t t, const std::vector<TxInfo>& tx) {
  const int n = config_.scenario.n_vehicles;
  const double dt = config_.scenario.slot_ms / 1000.0;
  const double w_range = config_.scenario.rx_range_m;
  const double leakage = config_.channel.adjacent_leakage();
  const double bandwidth = config_.subchannel_bandwidth_hz();
  const std::size_t ntx = tx.size();

  std::vector<bool> transmitting(static_cast<std::size_t>(n), false);
  for (const auto& x : tx) {
    transmitting[static_cast<std::size_t>(x.id)] = true;
    grid_.logs[static_cast<std::size_t>(x.id)].record_own_tx(t);
  }

  // sinr[k * n + j]: SINR of transmitter k's message at vehicle j.
  std::vector<double> sinr(ntx * n, 0.0);
  std::exponential_distribution<double> fading(1.0);
  std::vector<CoSlotSignal> signals(ntx);
  for (int j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < ntx; ++k) {
      const int src = tx[k].id;
      signals[k] = {src, 0.0, tx[k].subchannel};
      if (src == j) {
        fading(fading_rng_);
        continue;
      }
      const double d = ring_distance(world_, src, j);
      const double travel = (world_.vehicles[static_cast<std::size_t>(src)].speed_mps +
                             world_.vehicles[static_cast<std::size_t>(j)].speed_mps) *
                            static_cast<double>(t) * dt;
      LinkSample link;
      link.large_scale_gain = db_to_linear(shadowing_.gain_db(src, j, travel));
      link.path_loss = path_loss(config_.channel, d);
      link.small_scale_gain = fading(fading_rng_);
      signals[k].rx_power_w = rx_power(tx[k].power_w, link);
      const double rsrp_w = link.large_scale_gain * tx[k].power_w / link.path_loss;
      if (!transmitting[static_cast<std::size_t>(j)])
        grid_.logs[static_cast<std::size_t>(j)].record_sci(
            t, {src, tx[k].subchannel, w_to_dbm(rsrp_w), tx[k].rri_slots});
    }
    if (transmitting[static_cast<std::size_t>(j)]) continue;  // half-duplex

    // A receiver's own (zero) entry must not take part in decoding.
    std::vector<CoSlotSignal> heard;
    std::vector<std::size_t> heard_idx;
    heard.reserve(ntx);
    for (std::size_t k = 0; k < ntx; ++k) {
      if (tx[k].id == j) continue;
      heard.push_back(signals[k]);
      heard_idx.push_back(k);
    }
    std::vector<double> result;
    if (config_.access == AccessMode::kNoma) {
      auto decodes = [&](double s) {
        return success_indicator(bandwidth, s, config_.kpi.message_bits, config_.kpi.slot_s) >= 1;
      };
      result = sic_decode(heard, noise_w_, leakage, decodes).sinr;
    } else {
      result = oma_decode(heard, noise_w_, leakage);
    }
    for (std::size_t m = 0; m < heard.size(); ++m) sinr[heard_idx[m] * n + j] = result[m];
  }

  for (std::size_t k = 0; k < ntx; ++k) {
    const TxInfo& x = tx[k];
    int attempts = 0, successes = 0;
    for (int j = 0; j < n; ++j) {
      if (j == x.id) continue;
      if (ring_distance(world_, x.id, j) > w_range) {
        aoi_.set(x.id, j, 0.0);
        continue;
      }
      const bool half_duplex = transmitting[static_cast<std::size_t>(j)];
      const double s = half_duplex ? 0.0 : sinr[k * n + j];
      int u = half_duplex ? 0 : success_indicator(bandwidth, s, config_.kpi.message_bits, config_.kpi.slot_s);
      if (!x.has_message) u = 0;
      aoi_.set(x.id, j, update_rx_aoi(aoi_.get(x.id, j), u, x.rri_slots, x.head_age));
      if (x.has_message) {
        ++attempts;
        if (u >= 1) ++successes;
      }
      if (record_deliveries_) deliveries_.push_back({t, x.id, j, s, u, x.has_message});
    }
    if (attempts > 0) {
      auto& hist = success_[static_cast<std::size_t>(x.id)];
      hist.push_back({t, attempts, successes});
      while (!hist.empty() && hist.front().slot < t - config_.success_window_slots) hist.pop_front();
    }
  }
}

std::optional<V2xEnv::EpochOutcome> V2xEnv::close_epoch(int i) {
  Epoch& ep = epochs_[static_cast<std::size_t>(i)];
  if (!ep.open) return std::nullopt;
  EpochOutcome out;
  out.state = ep.state;
  out.action = ep.action;
  const std::int64_t window = world_.clock_slots - ep.start_slot;
  out.mean_aoi_slots = per_vehicle_mean_aoi(aoi_, i, ep.row_accumulated_at_start, window);
  out.energy_j = ep.lifetimes > 0 ? ep.energy_j / ep.lifetimes : 0.0;
  const auto [e_norm, a_norm] = normalizer_.normalize(out.energy_j, out.mean_aoi_slots);
  out.reward = reward_from_terms(e_norm, a_norm, config_.weights);
  ep.open = false;
  return out;
}

EpisodeMetrics V2xEnv::metrics() const {
  EpisodeMetrics m;
  m.slots = world_.clock_slots;
  if (m.slots == 0) return m;
  m.avg_aoi_slots = avg_aoi(aoi_, m.slots);
  m.avg_energy_j = avg_energy(energy_, m.slots, config_.scenario.n_vehicles);
  m.objective = weighted_objective(m.avg_energy_j, m.avg_aoi_slots, config_.weights.energy,
                                   config_.weights.aoi, config_.energy_ref_j(), config_.aoi_ref_slots);
  return m;
}

EpisodeSummary run_episode(V2xEnv& env, std::uint64_t seed, const PolicyFn& policy,
                           const EpisodeHooks& hooks) {
  const int n = env.config().scenario.n_vehicles;
  std::vector<int> epoch_index(static_cast<std::size_t>(n), 0);
  EpisodeSummary summary;
  double reward_sum = 0.0;

  auto act = [&](int i, const StateVector& s) {
    env.apply_action(i, policy(i, s, epoch_index[static_cast<std::size_t>(i)]++));
  };
  auto emit = [&](int i, bool done) {
    const auto outcome = env.close_epoch(i);
    if (!outcome) return;
    Transition tr;
    tr.state = outcome->state;
    tr.action_index = rri_to_index(outcome->action.gamma);
    tr.power_w = outcome->action.power_w;
    tr.reward = outcome->reward;
    tr.next_state = env.observe_normalized(i);
    tr.done = done;
    reward_sum += tr.reward;
    ++summary.n_transitions;
    if (!env.events().tracing()) {
      env.events().emit("transition");
    } else {
      std::ostringstream f;
      f.precision(17);
      f << "\"slot\":" << env.world().clock_slots << ",\"vehicle\":" << i << ",\"s\":[" << tr.state[0] << ','
        << tr.state[1] << ',' << tr.state[2] << ',' << tr.state[3] << "],\"rri\":" << kRris[tr.action_index]
        << ",\"power_w\":" << tr.power_w << ",\"reward\":" << tr.reward << ",\"energy_j\":" << outcome->energy_j
        << ",\"mean_aoi\":" << outcome->mean_aoi_slots << ",\"done\":" << (done ? "true" : "false");
      env.events().emit("transition", f.str());
    }
    if (hooks.on_transition) hooks.on_transition(tr);
  };

  for (int i : env.reset(seed)) act(i, env.observe_normalized(i));
  while (!env.done()) {
    for (int i : env.step()) {
      emit(i, false);
      act(i, env.observe_normalized(i));
    }
    if (hooks.on_slot) hooks.on_slot();
  }
  for (int i = 0; i < n; ++i) emit(i, true);

  summary.metrics = env.metrics();
  summary.mean_reward = summary.n_transitions > 0 ? reward_sum / summary.n_transitions : 0.0;
  return summary;
}

}  // namespace v2x
