#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

namespace releaseflow::detail {

struct LmResult {
  Eigen::VectorXd params;
  double ssr = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct LmSettings {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double initial_lambda = 1e-3;
};

// Residual vector as a function of (unconstrained) parameters.
using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline Eigen::MatrixXd central_jacobian(const ResidualFn& residual, const Eigen::VectorXd& p,
                                        Eigen::Index n_residuals) {
  Eigen::MatrixXd jac(n_residuals, p.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double h = 1e-6 * std::max(std::abs(p[j]), 1.0);
    Eigen::VectorXd plus = p;
    Eigen::VectorXd minus = p;
    plus[j] += h;
    minus[j] -= h;
    jac.col(j) = (residual(plus) - residual(minus)) / (2.0 * h);
  }
  return jac;
}

// Levenberg-Marquardt with multiplicative damping (x10 on rejection, /10 on
// acceptance). Stops on a relative SSR change below tolerance after an accepted
// step, on an exact zero residual, or when damping saturates without progress.
inline LmResult levenberg_marquardt(const ResidualFn& residual, Eigen::VectorXd p,
                                    const LmSettings& settings) {
  Eigen::VectorXd r = residual(p);
  double ssr = r.squaredNorm();
  double lambda = settings.initial_lambda;
  LmResult out;
  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    if (!(ssr > 0.0)) {
      out.converged = std::isfinite(ssr);
      break;
    }
    const Eigen::MatrixXd jac = central_jacobian(residual, p, r.size());
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool accepted = false;
    while (lambda < 1e16) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd candidate = p + step;
      const Eigen::VectorXd r_new = residual(candidate);
      const double ssr_new = r_new.squaredNorm();
      if (std::isfinite(ssr_new) && ssr_new <= ssr) {
        const double rel = (ssr - ssr_new) / ssr;
        p = candidate;
        r = r_new;
        ssr = ssr_new;
        lambda = std::max(lambda / 10.0, 1e-15);
        accepted = true;
        if (rel < settings.relative_tolerance) out.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No downhill step exists at any damping: the point is stationary.
      out.converged = true;
    }
    if (out.converged) {
      ++it;
      break;
    }
  }
  out.params = p;
  out.ssr = ssr;
  out.iterations = it;
  return out;
}

}  // namespace releaseflow::detail
