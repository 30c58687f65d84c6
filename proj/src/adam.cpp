#include "releaseflow/adam.hpp"

#include <cmath>

#include "releaseflow/error.hpp"

namespace releaseflow::nn {

AdamState AdamState::zeros(Eigen::Index size, double learning_rate) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(size);
  s.v = Eigen::VectorXd::Zero(size);
  s.learning_rate = learning_rate;
  return s;
}

void adam_step(AdamState& s, Eigen::Ref<Eigen::VectorXd> params,
               const Eigen::Ref<const Eigen::VectorXd>& grad) {
  require(params.size() == grad.size() && s.m.size() == grad.size() && s.v.size() == grad.size(),
          "Adam state, parameters and gradient must have equal lengths");
  ++s.step;
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  params.array() -= s.learning_rate * (s.m.array() / c1) /
                    ((s.v.array() / c2).sqrt() + s.epsilon);
}

}  // namespace releaseflow::nn
