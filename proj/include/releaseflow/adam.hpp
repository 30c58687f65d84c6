#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace releaseflow::nn {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Eigen::Index size, double learning_rate = 1e-3);
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad);

}  // namespace releaseflow::nn
