#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "v2x/env.hpp"
#include "v2x/mlp.hpp"
#include "json.hpp"

namespace v2x {

inline constexpr int kNumRri = 3;
inline constexpr int kQInputDim = kStateDim + kNumRri;

using ParamVector = Eigen::Vector3d;  // one power per RRI, watts

struct AgentParams {
  double lr_q = 5e-4;
  double lr_x = 1e-4;
  double gamma_discount = 0.99;
  double tau = 0.01;
  int buffer_capacity = 2000;
  int batch_size = 128;
  int hidden = 128;
  double ou_decay = 0.15;
  double ou_variance = 1e-4;
  double p_ran_start = 1.0;
  double p_ran_end = 0.05;
  double p_ran_decay_fraction = 0.5;  // of the episode budget
  int train_interval_slots = 1;       // slots between training steps once warm
  std::uint64_t seed = 1;

  void validate() const;
};

/// Linear decay from p_ran_start to p_ran_end over the first
/// p_ran_decay_fraction of the episodes, flat afterwards.
double p_ran_schedule(const AgentParams& params, int episode, int n_episodes);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);

  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  int capacity() const { return capacity_; }
  const Transition& at(std::size_t k) const { return data_[k]; }

  /// Indices of `batch` distinct stored transitions, uniformly chosen.
  std::vector<std::size_t> sample_indices(int batch, Rng& rng) const;

 private:
  int capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

/// Discrete Ornstein-Uhlenbeck process, one value per RRI.
class OuNoise {
 public:
  OuNoise(double decay, double variance);
  double sample(int k, Rng& rng);
  void reset() { value_.fill(0.0); }
  const std::array<double, kNumRri>& value() const { return value_; }
  void set_value(const std::array<double, kNumRri>& v) { value_ = v; }

 private:
  double decay_;
  double sigma_;
  std::array<double, kNumRri> value_{};
};

/// x = P_max * sigmoid(actor(s)). Throws std::invalid_argument on non-finite input.
ParamVector actor_forward(const Mlp& actor, const StateVector& s, double p_max_w);

/// Q input for pass k: s followed by x_k / P_max in slot k, zeros elsewhere.
Eigen::Matrix<double, kQInputDim, 1> q_input(const StateVector& s, const ParamVector& x, int k, double p_max_w);

/// Output k of pass k, for k = 0..2.
Eigen::Vector3d q_multipass(const Mlp& q, const StateVector& s, const ParamVector& x, double p_max_w);

/// Lowest index among ties.
int argmax_q(const Eigen::Vector3d& q);

struct QSample {
  StateVector state{};
  int action_index = 0;
  double power_w = 0.0;
  double target = 0.0;
};

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Mean of 0.5 * (y - Q(s, k, p))^2 over the batch, gradient w.r.t. the Q parameters.
LossGrad loss_q(const Mlp& q, std::span<const QSample> batch, double p_max_w);

/// Mean over states of -sum_k Q_k(s, x(s)), gradient w.r.t. the actor parameters only.
LossGrad loss_actor(const Mlp& actor, const Mlp& q, std::span<const StateVector> states, double p_max_w);

class MpdqnAgent {
 public:
  MpdqnAgent(const AgentParams& params, double p_max_w);

  const AgentParams& params() const { return params_; }
  double p_max_w() const { return p_max_w_; }

  ParamVector actor_params(const StateVector& s) const { return actor_forward(actor_, s, p_max_w_); }
  Eigen::Vector3d q_values(const StateVector& s, const ParamVector& x) const {
    return q_multipass(q_, s, x, p_max_w_);
  }

  /// explore=false is the greedy rule and touches no random state.
  ActionTuple select_action(const StateVector& s, bool explore);
  ActionTuple greedy_action(const StateVector& s) const;

  double td_target(double reward, const StateVector& next_state, bool done) const;

  void set_p_ran(double p) { p_ran_ = p; }
  double p_ran() const { return p_ran_; }
  void begin_episode() { noise_.reset(); }

  void remember(const Transition& t) { buffer_.push(t); }
  const ReplayBuffer& buffer() const { return buffer_; }

  /// One minibatch update if the buffer holds more than B transitions.
  bool train_step();
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t skipped_steps() const { return skipped_steps_; }
  void attach_events(EventLog* log) { events_ = log; }

  Mlp& actor() { return actor_; }
  Mlp& q() { return q_; }
  Mlp& actor_target() { return actor_target_; }
  Mlp& q_target() { return q_target_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& q() const { return q_; }

  nlohmann::json to_json() const;
  static MpdqnAgent from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static MpdqnAgent load(const std::string& path);

 private:
  AgentParams params_;
  double p_max_w_;
  Rng rng_;
  Mlp actor_, q_, actor_target_, q_target_;
  AdamState adam_x_, adam_q_;
  ReplayBuffer buffer_;
  OuNoise noise_;
  double p_ran_;
  std::int64_t train_steps_ = 0;
  std::int64_t skipped_steps_ = 0;
  EventLog* events_ = nullptr;
};

struct TrainResult {
  std::vector<double> episode_mean_reward;
  std::vector<EpisodeMetrics> episode_metrics;
  std::int64_t train_steps = 0;
};

std::uint64_t episode_seed(std::uint64_t seed, int episode);

/// Algorithm-level training loop; episode k runs on episode_seed(seed, k).
TrainResult train(V2xEnv& env, MpdqnAgent& agent, int n_episodes, std::uint64_t seed,
                  const std::function<void(int, const EpisodeSummary&)>& on_episode = {});

struct EvalReport {
  double avg_aoi_slots = 0.0;
  double avg_energy_j = 0.0;
  double objective = 0.0;
  double mean_reward = 0.0;
  std::vector<double> episode_mean_reward;
  std::vector<EpisodeMetrics> episodes;
};

EvalReport evaluate_policy(V2xEnv& env, const PolicyFn& policy, int n_episodes, std::uint64_t seed);

/// Greedy evaluation; the agent is not modified.
EvalReport evaluate(V2xEnv& env, const MpdqnAgent& agent, int n_episodes, std::uint64_t seed);

}  // namespace v2x
