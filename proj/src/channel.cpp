#include "v2x/channel.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>
#include <string>

namespace v2x {

double free_space_loss_1m_db(double carrier_ghz) {
  const double lambda = 299792458.0 / (carrier_ghz * 1e9);
  return 20.0 * std::log10(4.0 * std::numbers::pi / lambda);
}

void ChannelParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("channel: " + what); };
  if (!(bandwidth_hz > 0.0)) fail("bandwidth_hz must be > 0");
  if (!(shadow_std_db >= 0.0)) fail("shadow_std_db must be >= 0");
  if (!(decorr_dist_m > 0.0)) fail("decorr_dist_m must be > 0");
  if (!(pathloss_exponent > 0.0)) fail("pathloss_exponent must be > 0");
  if (!(carrier_ghz > 0.0)) fail("carrier_ghz must be > 0");
  if (adjacent_leakage_db > 0.0) fail("adjacent_leakage_db must be <= 0");
}

double noise_power_w(double bandwidth_hz, double noise_figure_db) {
  return dbm_to_w(-174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

double path_loss(const ChannelParams& params, double d_m) {
  if (d_m <= 0.0) warn("path_loss: non-positive distance " + std::to_string(d_m) + " clamped to 1 m");
  const double d = std::max(d_m, 1.0);
  return db_to_linear(params.pathloss_ref_db) * std::pow(d, params.pathloss_exponent);
}

ShadowingProcess::ShadowingProcess(double std_db, double decorr_dist_m, Rng& rng)
    : std_db_(std_db), decorr_dist_m_(decorr_dist_m) {
  std::normal_distribution<double> n01(0.0, 1.0);
  value_db_ = std_db_ * n01(rng);
}

double ShadowingProcess::advance(double delta_d_m, Rng& rng) {
  if (delta_d_m <= 0.0) return value_db_;
  const double rho = std::exp(-delta_d_m / decorr_dist_m_);
  std::normal_distribution<double> n01(0.0, 1.0);
  value_db_ = rho * value_db_ + std::sqrt(1.0 - rho * rho) * std_db_ * n01(rng);
  return value_db_;
}

ShadowingField::ShadowingField(int n, const ChannelParams& params, Rng rng)
    : n_(n), params_(params), rng_(std::move(rng)), links_(static_cast<std::size_t>(n) * n) {}

double ShadowingField::gain_db(int i, int j, double displacement_m) {
  if (i > j) std::swap(i, j);
  Link& link = links_[static_cast<std::size_t>(i) * n_ + j];
  if (!link.initialized) {
    link.process = ShadowingProcess(params_.shadow_std_db, params_.decorr_dist_m, rng_);
    link.last_displacement_m = displacement_m;
    link.initialized = true;
    return link.process.value_db();
  }
  const double delta = displacement_m - link.last_displacement_m;
  link.last_displacement_m = displacement_m;
  return link.process.advance(delta, rng_);
}

double interference(std::span<const RxPowerEntry> co_slot) {
  double sum = 0.0;
  for (const auto& e : co_slot) sum += e.overlap * e.rx_power_w;
  return sum;
}

double sinr_oma(double desired_rx_w, std::span<const RxPowerEntry> interferers, double noise_w) {
  return desired_rx_w / (interference(interferers) + noise_w);
}

double overlap_sigma(int subchannel_a, int subchannel_b, double leakage) {
  const int gap = std::abs(subchannel_a - subchannel_b);
  if (gap == 0) return 1.0;
  if (gap == 1) return leakage;
  return 0.0;
}

std::vector<double> oma_decode(std::span<const CoSlotSignal> signals, double noise_w,
                               double leakage) {
  std::vector<double> out(signals.size());
  for (std::size_t a = 0; a < signals.size(); ++a) {
    double interf = 0.0;
    for (std::size_t b = 0; b < signals.size(); ++b) {
      if (a == b) continue;
      interf += overlap_sigma(signals[b].subchannel, signals[a].subchannel, leakage) *
                signals[b].rx_power_w;
    }
    out[a] = signals[a].rx_power_w / (interf + noise_w);
  }
  return out;
}

SicOutcome sic_decode(std::span<const CoSlotSignal> signals, double noise_w, double leakage,
                      const std::function<bool(double)>& decodes) {
  const std::size_t n = signals.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (signals[a].rx_power_w != signals[b].rx_power_w)
      return signals[a].rx_power_w > signals[b].rx_power_w;
    return signals[a].tx_id < signals[b].tx_id;
  });

  SicOutcome out{std::vector<double>(n, 0.0), std::vector<bool>(n, false)};
  std::vector<bool> cancelled(n, false);
  for (std::size_t a : order) {
    double interf = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || cancelled[b]) continue;
      interf += overlap_sigma(signals[b].subchannel, signals[a].subchannel, leakage) *
                signals[b].rx_power_w;
    }
    const double sinr = signals[a].rx_power_w / (interf + noise_w);
    out.sinr[a] = sinr;
    if (decodes(sinr)) {
      out.decoded[a] = true;
      cancelled[a] = true;
    }
  }
  return out;
}

}  // namespace v2x
