#include "v2x/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace v2x {

Mlp::Mlp(int n_in, int n_hidden, int n_out)
    : n_in_(n_in), n_hidden_(n_hidden), n_out_(n_out) {
  if (n_in < 1 || n_hidden < 1 || n_out < 1) throw std::invalid_argument("Mlp: layer sizes must be >= 1");
  off_b1_ = static_cast<Eigen::Index>(n_hidden) * n_in;
  off_w2_ = off_b1_ + n_hidden;
  off_b2_ = off_w2_ + static_cast<Eigen::Index>(n_out) * n_hidden;
  theta_ = Eigen::VectorXd::Zero(off_b2_ + n_out);
}

Mlp::Mlp(int n_in, int n_hidden, int n_out, Rng& rng) : Mlp(n_in, n_hidden, n_out) {
  auto fill = [&](Eigen::Index off, Eigen::Index count, int fan_in, int fan_out) {
    const double a = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index k = 0; k < count; ++k) theta_[off + k] = u(rng);
  };
  fill(0, off_b1_, n_in, n_hidden);
  fill(off_w2_, off_b2_ - off_w2_, n_hidden, n_out);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
  Eigen::MatrixXd pre = (w1() * x).colwise() + b1();
  Eigen::MatrixXd h = pre.cwiseMax(0.0);
  Eigen::MatrixXd out = (w2() * h).colwise() + b2();
  if (cache != nullptr) {
    cache->input = x;
    cache->pre_hidden = std::move(pre);
    cache->hidden = std::move(h);
  }
  return out;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                              Eigen::VectorXd* grad_theta) const {
  Eigen::MatrixXd grad_h = w2().transpose() * grad_out;
  Eigen::MatrixXd grad_pre = grad_h.cwiseProduct(
      (cache.pre_hidden.array() > 0.0).cast<double>().matrix());
  if (grad_theta != nullptr) {
    Eigen::VectorXd& g = *grad_theta;
    if (g.size() != theta_.size()) g = Eigen::VectorXd::Zero(theta_.size());
    Eigen::Map<Eigen::MatrixXd>(g.data(), n_hidden_, n_in_) += grad_pre * cache.input.transpose();
    Eigen::Map<Eigen::VectorXd>(g.data() + off_b1_, n_hidden_) += grad_pre.rowwise().sum();
    Eigen::Map<Eigen::MatrixXd>(g.data() + off_w2_, n_out_, n_hidden_) += grad_out * cache.hidden.transpose();
    Eigen::Map<Eigen::VectorXd>(g.data() + off_b2_, n_out_) += grad_out.rowwise().sum();
  }
  return w1().transpose() * grad_pre;
}

bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr, AdamState& state) {
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: shape mismatch");
  if (!grads.allFinite()) return false;
  if (state.m.size() != params.size()) {
    state.m = Eigen::VectorXd::Zero(params.size());
    state.v = Eigen::VectorXd::Zero(params.size());
    state.t = 0;
  }
  ++state.t;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
  return true;
}

void soft_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau) {
  if (target.size() != online.size()) throw std::invalid_argument("soft_update: shape mismatch");
  target = (1.0 - tau) * target + tau * online;
}

}  // namespace v2x
