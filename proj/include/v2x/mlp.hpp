#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "v2x/common.hpp"

namespace v2x {

/// One-hidden-layer perceptron (ReLU hidden, linear output) over a flat
/// parameter vector laid out as [W1 | b1 | W2 | b2], column-major.
/// Inputs and outputs are batched column-wise.
class Mlp {
 public:
  struct Cache {
    Eigen::MatrixXd input;
    Eigen::MatrixXd pre_hidden;
    Eigen::MatrixXd hidden;
  };

  Mlp() = default;
  Mlp(int n_in, int n_hidden, int n_out);
  Mlp(int n_in, int n_hidden, int n_out, Rng& rng);  // Glorot-uniform weights, zero biases

  int n_in() const { return n_in_; }
  int n_hidden() const { return n_hidden_; }
  int n_out() const { return n_out_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;

  /// Back-propagates dL/d(output). Parameter gradients are accumulated into
  /// `grad_theta` when given; returns dL/d(input).
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& grad_out,
                           Eigen::VectorXd* grad_theta) const;

  Eigen::VectorXd& parameters() { return theta_; }
  const Eigen::VectorXd& parameters() const { return theta_; }
  std::size_t n_parameters() const { return static_cast<std::size_t>(theta_.size()); }

 private:
  Eigen::Map<const Eigen::MatrixXd> w1() const { return {theta_.data(), n_hidden_, n_in_}; }
  Eigen::Map<const Eigen::VectorXd> b1() const { return {theta_.data() + off_b1_, n_hidden_}; }
  Eigen::Map<const Eigen::MatrixXd> w2() const { return {theta_.data() + off_w2_, n_out_, n_hidden_}; }
  Eigen::Map<const Eigen::VectorXd> b2() const { return {theta_.data() + off_b2_, n_out_}; }

  int n_in_ = 0, n_hidden_ = 0, n_out_ = 0;
  Eigen::Index off_b1_ = 0, off_w2_ = 0, off_b2_ = 0;
  Eigen::VectorXd theta_;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update. Non-finite gradients leave everything
/// untouched and return false.
bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, double lr, AdamState& state);

/// target <- (1 - tau) * target + tau * online
void soft_update(Eigen::VectorXd& target, const Eigen::VectorXd& online, double tau);

}  // namespace v2x
