#pragma once

#include <functional>
#include <span>
#include <vector>

#include "v2x/common.hpp"

namespace v2x {

/// Free-space loss at the 1 m reference distance for a carrier in GHz.
double free_space_loss_1m_db(double carrier_ghz);

/// Radio parameters. dB/dBm at this boundary, linear everywhere else.
struct ChannelParams {
  double carrier_ghz = 5.9;
  double bandwidth_hz = 10e6;
  double noise_figure_db = 9.0;
  double shadow_std_db = 3.0;
  double decorr_dist_m = 25.0;
  double pathloss_exponent = 2.75;
  double pathloss_ref_db = free_space_loss_1m_db(5.9);
  double rsrp_threshold_dbm = -126.0;
  double adjacent_leakage_db = -30.0;

  void validate() const;
  double adjacent_leakage() const { return db_to_linear(adjacent_leakage_db); }
};

/// Thermal noise (-174 dBm/Hz) over `bandwidth_hz` plus the noise figure, in watts.
double noise_power_w(double bandwidth_hz, double noise_figure_db);
inline double noise_power_w(const ChannelParams& p) {
  return noise_power_w(p.bandwidth_hz, p.noise_figure_db);
}

/// Log-distance attenuation (linear, >= 1 at the reference). Distances below
/// 1 m are clamped to 1 m; non-positive distances also emit a warning.
double path_loss(const ChannelParams& params, double d_m);

/// Gudmundson log-normal shadowing for one link: successive samples taken
/// `delta_d` metres apart have correlation exp(-delta_d / decorr_dist).
class ShadowingProcess {
 public:
  ShadowingProcess() = default;
  ShadowingProcess(double std_db, double decorr_dist_m, Rng& rng);

  double advance(double delta_d_m, Rng& rng);
  double value_db() const { return value_db_; }

 private:
  double std_db_ = 0.0;
  double decorr_dist_m_ = 1.0;
  double value_db_ = 0.0;
};

/// Symmetric per-pair shadowing state for a population of `n` nodes,
/// advanced lazily when a link is queried.
class ShadowingField {
 public:
  ShadowingField() = default;
  ShadowingField(int n, const ChannelParams& params, Rng rng);

  /// Shadowing in dB for link (i, j) after the pair has accumulated
  /// `displacement_m` of combined motion since the field was created.
  double gain_db(int i, int j, double displacement_m);

 private:
  struct Link {
    bool initialized = false;
    double last_displacement_m = 0.0;
    ShadowingProcess process;
  };
  int n_ = 0;
  ChannelParams params_;
  Rng rng_;
  std::vector<Link> links_;
};

struct LinkSample {
  double large_scale_gain = 1.0;  // shadowing, linear
  double small_scale_gain = 1.0;  // fading power gain
  double path_loss = 1.0;         // linear attenuation
};

/// C = h_s * h * p / L_d
inline double rx_power(double tx_power_w, const LinkSample& link) {
  return link.small_scale_gain * link.large_scale_gain * tx_power_w / link.path_loss;
}

struct RxPowerEntry {
  int tx_id = 0;
  double rx_power_w = 0.0;
  double overlap = 1.0;  // sigma relative to the desired transmission
};

/// Sum of overlap-weighted received powers of co-slot interferers.
double interference(std::span<const RxPowerEntry> co_slot);

double sinr_oma(double desired_rx_w, std::span<const RxPowerEntry> interferers, double noise_w);

/// 1 on the same subchannel, `leakage` on an adjacent one, 0 otherwise.
double overlap_sigma(int subchannel_a, int subchannel_b, double leakage);

struct CoSlotSignal {
  int tx_id = 0;
  double rx_power_w = 0.0;
  int subchannel = 0;
};

/// Per-signal SINR at one receiver when every other co-slot signal is
/// treated as interference. Aligned with `signals`.
std::vector<double> oma_decode(std::span<const CoSlotSignal> signals, double noise_w,
                               double leakage);

struct SicOutcome {
  std::vector<double> sinr;    // aligned with the input order
  std::vector<bool> decoded;
};

/// Successive interference cancellation at one receiver. Signals are visited
/// strongest first (ties: lower tx_id first). Each is decoded against every
/// signal not yet cancelled; when `decodes(sinr)` holds its power is removed
/// before the next one is attempted. A failed message stays in the residual.
SicOutcome sic_decode(std::span<const CoSlotSignal> signals, double noise_w, double leakage,
                      const std::function<bool(double)>& decodes);

}  // namespace v2x
