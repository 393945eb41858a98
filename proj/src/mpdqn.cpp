#include "v2x/mpdqn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace v2x {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::Matrix<double, kStateDim, 1> state_column(const StateVector& s) {
  Eigen::Matrix<double, kStateDim, 1> c;
  for (int d = 0; d < kStateDim; ++d) c[d] = s[static_cast<std::size_t>(d)];
  return c;
}

// Q_k(s_b, x_b) for every sample column b; rows are RRI indices.
Eigen::MatrixXd q_multipass_batch(const Mlp& q, const Eigen::MatrixXd& s, const Eigen::MatrixXd& x_over_pmax) {
  const Eigen::Index n = s.cols();
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(kQInputDim, kNumRri * n);
  for (int k = 0; k < kNumRri; ++k) {
    in.block(0, k * n, kStateDim, n) = s;
    in.block(kStateDim + k, k * n, 1, n) = x_over_pmax.row(k);
  }
  const Eigen::MatrixXd out = q.forward(in);
  Eigen::MatrixXd values(kNumRri, n);
  for (int k = 0; k < kNumRri; ++k) values.row(k) = out.block(k, k * n, 1, n);
  return values;
}

nlohmann::json mlp_to_json(const Mlp& m) {
  const auto& th = m.parameters();
  return {{"shape", {m.n_in(), m.n_hidden(), m.n_out()}},
          {"theta", std::vector<double>(th.data(), th.data() + th.size())}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<int>>();
  if (shape.size() != 3) throw std::invalid_argument("checkpoint: network shape must have 3 entries");
  Mlp m(shape[0], shape[1], shape[2]);
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (theta.size() != m.n_parameters()) throw std::invalid_argument("checkpoint: parameter count mismatch");
  m.parameters() = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  if (!m.parameters().allFinite()) throw std::invalid_argument("checkpoint: non-finite parameters");
  return m;
}

nlohmann::json adam_to_json(const AdamState& a) {
  return {{"t", a.t},
          {"m", std::vector<double>(a.m.data(), a.m.data() + a.m.size())},
          {"v", std::vector<double>(a.v.data(), a.v.data() + a.v.size())}};
}

AdamState adam_from_json(const nlohmann::json& j) {
  AdamState a;
  a.t = j.at("t").get<std::int64_t>();
  const auto m = j.at("m").get<std::vector<double>>();
  const auto v = j.at("v").get<std::vector<double>>();
  a.m = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  a.v = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return a;
}

nlohmann::json params_to_json(const AgentParams& p) {
  return {{"lr_q", p.lr_q},
          {"lr_x", p.lr_x},
          {"gamma_discount", p.gamma_discount},
          {"tau", p.tau},
          {"buffer_capacity", p.buffer_capacity},
          {"batch_size", p.batch_size},
          {"hidden", p.hidden},
          {"ou_decay", p.ou_decay},
          {"ou_variance", p.ou_variance},
          {"p_ran_start", p.p_ran_start},
          {"p_ran_end", p.p_ran_end},
          {"p_ran_decay_fraction", p.p_ran_decay_fraction},
          {"train_interval_slots", p.train_interval_slots},
          {"seed", p.seed}};
}

AgentParams params_from_json(const nlohmann::json& j) {
  AgentParams p;
  p.lr_q = j.at("lr_q").get<double>();
  p.lr_x = j.at("lr_x").get<double>();
  p.gamma_discount = j.at("gamma_discount").get<double>();
  p.tau = j.at("tau").get<double>();
  p.buffer_capacity = j.at("buffer_capacity").get<int>();
  p.batch_size = j.at("batch_size").get<int>();
  p.hidden = j.at("hidden").get<int>();
  p.ou_decay = j.at("ou_decay").get<double>();
  p.ou_variance = j.at("ou_variance").get<double>();
  p.p_ran_start = j.at("p_ran_start").get<double>();
  p.p_ran_end = j.at("p_ran_end").get<double>();
  p.p_ran_decay_fraction = j.at("p_ran_decay_fraction").get<double>();
  p.train_interval_slots = j.at("train_interval_slots").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

}  // namespace

void AgentParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("agent: " + what); };
  if (!(lr_q > 0.0)) fail("lr_q must be > 0");
  if (!(lr_x > 0.0)) fail("lr_x must be > 0");
  if (!(gamma_discount >= 0.0 && gamma_discount <= 1.0)) fail("gamma_discount must be in [0, 1]");
  if (!(tau > 0.0 && tau <= 1.0)) fail("tau must be in (0, 1]");
  if (buffer_capacity < 1) fail("buffer_capacity must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (batch_size > buffer_capacity) fail("batch_size must not exceed buffer_capacity");
  if (hidden < 1) fail("hidden must be >= 1");
  if (!(ou_decay > 0.0 && ou_decay <= 1.0)) fail("ou_decay must be in (0, 1]");
  if (!(ou_variance >= 0.0)) fail("ou_variance must be >= 0");
  if (!(p_ran_start >= 0.0 && p_ran_start <= 1.0)) fail("p_ran_start must be in [0, 1]");
  if (!(p_ran_end >= 0.0 && p_ran_end <= 1.0)) fail("p_ran_end must be in [0, 1]");
  if (!(p_ran_decay_fraction > 0.0 && p_ran_decay_fraction <= 1.0)) fail("p_ran_decay_fraction must be in (0, 1]");
  if (train_interval_slots < 1) fail("train_interval_slots must be >= 1");
}

double p_ran_schedule(const AgentParams& params, int episode, int n_episodes) {
  const double span = params.p_ran_decay_fraction * std::max(1, n_episodes);
  const double f = std::clamp(episode / span, 0.0, 1.0);
  return params.p_ran_start + f * (params.p_ran_end - params.p_ran_start);
}

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  data_.reserve(static_cast<std::size_t>(capacity));
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < static_cast<std::size_t>(capacity_)) {
    data_.push_back(t);
  } else {
    data_[next_] = t;
  }
  next_ = (next_ + 1) % static_cast<std::size_t>(capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(int batch, Rng& rng) const {
  if (batch < 0 || static_cast<std::size_t>(batch) > data_.size())
    throw std::invalid_argument("ReplayBuffer: batch larger than stored transitions");
  std::vector<std::size_t> all(data_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t k = 0; k < static_cast<std::size_t>(batch); ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, all.size() - 1);
    std::swap(all[k], all[pick(rng)]);
  }
  all.resize(static_cast<std::size_t>(batch));
  return all;
}

OuNoise::OuNoise(double decay, double variance)
    : decay_(decay), sigma_(std::sqrt(variance * (1.0 - (1.0 - decay) * (1.0 - decay)))) {}

double OuNoise::sample(int k, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double& x = value_[static_cast<std::size_t>(k)];
  x = (1.0 - decay_) * x + sigma_ * n(rng);
  return x;
}

ParamVector actor_forward(const Mlp& actor, const StateVector& s, double p_max_w) {
  for (double v : s)
    if (!std::isfinite(v)) throw std::invalid_argument("actor_forward: non-finite state");
  const Eigen::MatrixXd z = actor.forward(state_column(s));
  ParamVector x;
  for (int k = 0; k < kNumRri; ++k) x[k] = p_max_w * sigmoid(z(k, 0));
  return x;
}

Eigen::Matrix<double, kQInputDim, 1> q_input(const StateVector& s, const ParamVector& x, int k, double p_max_w) {
  Eigen::Matrix<double, kQInputDim, 1> in = Eigen::Matrix<double, kQInputDim, 1>::Zero();
  in.head<kStateDim>() = state_column(s);
  in[kStateDim + k] = x[k] / p_max_w;
  return in;
}

Eigen::Vector3d q_multipass(const Mlp& q, const StateVector& s, const ParamVector& x, double p_max_w) {
  Eigen::MatrixXd in(kQInputDim, kNumRri);
  for (int k = 0; k < kNumRri; ++k) in.col(k) = q_input(s, x, k, p_max_w);
  const Eigen::MatrixXd out = q.forward(in);
  Eigen::Vector3d values;
  for (int k = 0; k < kNumRri; ++k) values[k] = out(k, k);
  return values;
}

int argmax_q(const Eigen::Vector3d& q) {
  int best = 0;
  for (int k = 1; k < kNumRri; ++k)
    if (q[k] > q[best]) best = k;
  return best;
}

LossGrad loss_q(const Mlp& q, std::span<const QSample> batch, double p_max_w) {
  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(q.n_parameters()));
  if (batch.empty()) return out;
  const auto n = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd in(kQInputDim, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const QSample& smp = batch[static_cast<std::size_t>(b)];
    ParamVector x = ParamVector::Zero();
    x[smp.action_index] = smp.power_w;
    in.col(b) = q_input(smp.state, x, smp.action_index, p_max_w);
  }
  Mlp::Cache cache;
  const Eigen::MatrixXd qv = q.forward(in, &cache);
  Eigen::MatrixXd grad_out = Eigen::MatrixXd::Zero(qv.rows(), n);
  for (Eigen::Index b = 0; b < n; ++b) {
    const QSample& smp = batch[static_cast<std::size_t>(b)];
    const double err = smp.target - qv(smp.action_index, b);
    out.loss += 0.5 * err * err / static_cast<double>(n);
    grad_out(smp.action_index, b) = -err / static_cast<double>(n);
  }
  q.backward(cache, grad_out, &out.grad);
  return out;
}

LossGrad loss_actor(const Mlp& actor, const Mlp& q, std::span<const StateVector> states, double p_max_w) {
  LossGrad out;
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(actor.n_parameters()));
  if (states.empty()) return out;
  const auto n = static_cast<Eigen::Index>(states.size());
  Eigen::MatrixXd s(kStateDim, n);
  for (Eigen::Index b = 0; b < n; ++b) s.col(b) = state_column(states[static_cast<std::size_t>(b)]);

  Mlp::Cache actor_cache;
  const Eigen::MatrixXd z = actor.forward(s, &actor_cache);
  const Eigen::MatrixXd sig = z.unaryExpr([](double v) { return sigmoid(v); });

  // Column k*n + b holds pass k of sample b.
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(kQInputDim, kNumRri * n);
  for (int k = 0; k < kNumRri; ++k) {
    in.block(0, k * n, kStateDim, n) = s;
    in.block(kStateDim + k, k * n, 1, n) = sig.row(k);  // x_k / P_max
  }
  Mlp::Cache q_cache;
  const Eigen::MatrixXd qv = q.forward(in, &q_cache);
  Eigen::MatrixXd grad_q = Eigen::MatrixXd::Zero(qv.rows(), qv.cols());
  for (int k = 0; k < kNumRri; ++k) {
    out.loss -= qv.block(k, k * n, 1, n).sum() / static_cast<double>(n);
    grad_q.block(k, k * n, 1, n).setConstant(-1.0 / static_cast<double>(n));
  }
  const Eigen::MatrixXd grad_in = q.backward(q_cache, grad_q, nullptr);

  Eigen::MatrixXd grad_z(kNumRri, n);
  for (int k = 0; k < kNumRri; ++k)
    grad_z.row(k) = grad_in.block(kStateDim + k, k * n, 1, n).cwiseProduct(
        sig.row(k).cwiseProduct((1.0 - sig.row(k).array()).matrix()));
  actor.backward(actor_cache, grad_z, &out.grad);
  (void)p_max_w;  // x_k / P_max = sigmoid(z_k); the scale cancels
  return out;
}

MpdqnAgent::MpdqnAgent(const AgentParams& params, double p_max_w)
    : params_(params),
      p_max_w_(p_max_w),
      rng_(make_rng(params.seed, Stream::kAgent)),
      buffer_(std::max(1, params.buffer_capacity)),
      noise_(params.ou_decay, params.ou_variance),
      p_ran_(params.p_ran_start) {
  params_.validate();
  if (!(p_max_w > 0.0)) throw ConfigError("agent: p_max must be > 0");
  actor_ = Mlp(kStateDim, params_.hidden, kNumRri, rng_);
  q_ = Mlp(kQInputDim, params_.hidden, kNumRri, rng_);
  actor_target_ = actor_;
  q_target_ = q_;
}

ActionTuple MpdqnAgent::greedy_action(const StateVector& s) const {
  const ParamVector x = actor_params(s);
  const int k = argmax_q(q_values(s, x));
  return {rri_from_index(k), std::clamp(x[k], 0.0, p_max_w_)};
}

ActionTuple MpdqnAgent::select_action(const StateVector& s, bool explore) {
  if (!explore) return greedy_action(s);
  ActionTuple a;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng_) < p_ran_) {
    std::uniform_int_distribution<int> pick(0, kNumRri - 1);
    a.gamma = rri_from_index(pick(rng_));
    a.power_w = std::uniform_real_distribution<double>(0.0, p_max_w_)(rng_);
  } else {
    a = greedy_action(s);
  }
  a.power_w = std::clamp(a.power_w + noise_.sample(rri_to_index(a.gamma), rng_), 0.0, p_max_w_);
  return a;
}

double MpdqnAgent::td_target(double reward, const StateVector& next_state, bool done) const {
  if (done) return reward;
  const ParamVector x = actor_forward(actor_target_, next_state, p_max_w_);
  return reward + params_.gamma_discount * q_multipass(q_target_, next_state, x, p_max_w_).maxCoeff();
}

bool MpdqnAgent::train_step() {
  if (buffer_.size() <= static_cast<std::size_t>(params_.batch_size)) return false;
  const auto idx = buffer_.sample_indices(params_.batch_size, rng_);
  const auto n = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd next(kStateDim, n);
  for (Eigen::Index b = 0; b < n; ++b) next.col(b) = state_column(buffer_.at(idx[static_cast<std::size_t>(b)]).next_state);
  const Eigen::MatrixXd x_next = actor_target_.forward(next).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::RowVectorXd q_next = q_multipass_batch(q_target_, next, x_next).colwise().maxCoeff();

  std::vector<QSample> batch;
  std::vector<StateVector> states;
  batch.reserve(idx.size());
  states.reserve(idx.size());
  for (Eigen::Index b = 0; b < n; ++b) {
    const Transition& t = buffer_.at(idx[static_cast<std::size_t>(b)]);
    const double y = t.done ? t.reward : t.reward + params_.gamma_discount * q_next[b];
    batch.push_back({t.state, t.action_index, t.power_w, y});
    states.push_back(t.state);
  }
  bool ok = true;
  const LossGrad gq = loss_q(q_, batch, p_max_w_);
  if (!adam_step(q_.parameters(), gq.grad, params_.lr_q, adam_q_)) ok = false;
  const LossGrad gx = loss_actor(actor_, q_, states, p_max_w_);
  if (!adam_step(actor_.parameters(), gx.grad, params_.lr_x, adam_x_)) ok = false;
  if (!ok) {
    ++skipped_steps_;
    if (events_ != nullptr) events_->emit("nonfinite_gradient", "\"step\":" + std::to_string(train_steps_));
  }
  soft_update(q_target_.parameters(), q_.parameters(), params_.tau);
  soft_update(actor_target_.parameters(), actor_.parameters(), params_.tau);
  ++train_steps_;
  return true;
}

nlohmann::json MpdqnAgent::to_json() const {
  std::ostringstream rng_state;
  rng_state << rng_;
  const auto& ou = noise_.value();
  return {{"format", "v2x-mpdqn"},
          {"version", 1},
          {"p_max_w", p_max_w_},
          {"params", params_to_json(params_)},
          {"actor", mlp_to_json(actor_)},
          {"q", mlp_to_json(q_)},
          {"actor_target", mlp_to_json(actor_target_)},
          {"q_target", mlp_to_json(q_target_)},
          {"adam_x", adam_to_json(adam_x_)},
          {"adam_q", adam_to_json(adam_q_)},
          {"ou", std::vector<double>(ou.begin(), ou.end())},
          {"p_ran", p_ran_},
          {"train_steps", train_steps_},
          {"rng", rng_state.str()}};
}

MpdqnAgent MpdqnAgent::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "v2x-mpdqn") throw std::invalid_argument("checkpoint: unknown format");
  if (j.at("version").get<int>() != 1) throw std::invalid_argument("checkpoint: unsupported version");
  AgentParams params = params_from_json(j.at("params"));
  MpdqnAgent agent(params, j.at("p_max_w").get<double>());
  agent.actor_ = mlp_from_json(j.at("actor"));
  agent.q_ = mlp_from_json(j.at("q"));
  agent.actor_target_ = mlp_from_json(j.at("actor_target"));
  agent.q_target_ = mlp_from_json(j.at("q_target"));
  if (agent.actor_.n_in() != kStateDim || agent.actor_.n_out() != kNumRri || agent.q_.n_in() != kQInputDim ||
      agent.q_.n_out() != kNumRri)
    throw std::invalid_argument("checkpoint: network shapes do not match the state/action layout");
  agent.adam_x_ = adam_from_json(j.at("adam_x"));
  agent.adam_q_ = adam_from_json(j.at("adam_q"));
  const auto ou = j.at("ou").get<std::vector<double>>();
  if (ou.size() != kNumRri) throw std::invalid_argument("checkpoint: bad noise state");
  agent.noise_.set_value({ou[0], ou[1], ou[2]});
  agent.p_ran_ = j.at("p_ran").get<double>();
  agent.train_steps_ = j.at("train_steps").get<std::int64_t>();
  std::istringstream rng_state(j.at("rng").get<std::string>());
  rng_state >> agent.rng_;
  return agent;
}

void MpdqnAgent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out << to_json().dump() << '\n';
}

MpdqnAgent MpdqnAgent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return from_json(nlohmann::json::parse(in));
}

std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  return mix_seed(seed ^ mix_seed(0x5eedULL + static_cast<std::uint64_t>(episode)));
}

TrainResult train(V2xEnv& env, MpdqnAgent& agent, int n_episodes, std::uint64_t seed,
                  const std::function<void(int, const EpisodeSummary&)>& on_episode) {
  TrainResult result;
  const int interval = agent.params().train_interval_slots;
  std::int64_t slot_counter = 0;
  EpisodeHooks hooks;
  hooks.on_transition = [&](const Transition& t) { agent.remember(t); };
  hooks.on_slot = [&] {
    if (++slot_counter % interval == 0) agent.train_step();
  };
  const PolicyFn policy = [&](int, const StateVector& s, int) { return agent.select_action(s, true); };
  for (int ep = 0; ep < n_episodes; ++ep) {
    agent.set_p_ran(p_ran_schedule(agent.params(), ep, n_episodes));
    agent.begin_episode();
    const EpisodeSummary summary = run_episode(env, episode_seed(seed, ep), policy, hooks);
    result.episode_mean_reward.push_back(summary.mean_reward);
    result.episode_metrics.push_back(summary.metrics);
    if (on_episode) on_episode(ep, summary);
  }
  result.train_steps = agent.train_steps();
  return result;
}

EvalReport evaluate_policy(V2xEnv& env, const PolicyFn& policy, int n_episodes, std::uint64_t seed) {
  EvalReport report;
  for (int ep = 0; ep < n_episodes; ++ep) {
    const EpisodeSummary summary = run_episode(env, episode_seed(seed, ep), policy);
    report.episode_mean_reward.push_back(summary.mean_reward);
    report.episodes.push_back(summary.metrics);
  }
  if (n_episodes > 0) {
    for (const auto& m : report.episodes) {
      report.avg_aoi_slots += m.avg_aoi_slots / n_episodes;
      report.avg_energy_j += m.avg_energy_j / n_episodes;
      report.objective += m.objective / n_episodes;
    }
    for (double r : report.episode_mean_reward) report.mean_reward += r / n_episodes;
  }
  return report;
}

EvalReport evaluate(V2xEnv& env, const MpdqnAgent& agent, int n_episodes, std::uint64_t seed) {
  return evaluate_policy(
      env, [&](int, const StateVector& s, int) { return agent.greedy_action(s); }, n_episodes, seed);
}

}  // namespace v2x
