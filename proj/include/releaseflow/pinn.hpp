#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "releaseflow/dataset.hpp"
#include "releaseflow/nn.hpp"

namespace releaseflow {

struct LossWeights {
  double data = 1.0;
  double pde = 1.0;
  double ic = 1.0;
  double bc = 1.0;
};

enum class DiffusivityMode { Fixed, Learnable };

/// Training setup for one physics-informed network. `d` is the fixed
/// diffusivity in Fixed mode and the starting value in Learnable mode.
struct PinnConfig {
  nn::MlpArchitecture arch;
  double learning_rate = 1e-3;
  int epochs = 2500;
  int n_collocation = 10000;
  DiffusivityMode d_mode = DiffusivityMode::Fixed;
  double d = 0.01;
  LossWeights weights;
  int quadrature_points = 101;
  int boundary_points = 101;
  /// Dropout keep probability applied after every hidden layer; 1 disables it.
  double dropout_keep = 1.0;
  std::uint64_t seed = 0;

  void validate() const;

  // Reference training setups (one per experiment).
  static PinnConfig classical_comparison();
  static PinnConfig ensemble_member();
  static PinnConfig bayesian_dropout();
  static PinnConfig limited_data();
};

/// Space-time points (x, t) in [0, 1]^2.
struct CollocationSet {
  Eigen::VectorXd xs;
  Eigen::VectorXd ts;

  Eigen::Index size() const noexcept { return xs.size(); }
};

/// Latin hypercube sample: each of the n equal-width bins on either axis holds
/// exactly one point.
CollocationSet sample_lhs(std::size_t n, std::uint64_t seed);

/// r_i = u_t - d u_xx at every collocation point.
Eigen::VectorXd pde_residual(const nn::MlpParams& params, double d, const CollocationSet& pts);

/// Composite Simpson weights on a uniform grid of [0, 1] (odd count >= 3).
Eigen::VectorXd simpson_weights(int points);

/// R(t) = 1 - integral_0^1 u(x, t) dx.
double release_fraction(const nn::MlpParams& params, double t, int quadrature_points = 101,
                        const nn::DropoutMask* mask = nullptr);
std::vector<double> release_fractions(const nn::MlpParams& params, std::span<const double> times,
                                      int quadrature_points = 101,
                                      const nn::DropoutMask* mask = nullptr);

struct LossBreakdown {
  double total = 0.0;
  double data = 0.0;
  double pde = 0.0;
  double ic = 0.0;
  double bc = 0.0;
};

/// Raw residual groups of the physics-informed problem.
struct PinnResiduals {
  Eigen::VectorXd data;      // R(t_i) - y_i
  Eigen::VectorXd pde;       // u_t - d u_xx at collocation points
  Eigen::VectorXd ic;        // u(x_k, 0) - 1
  Eigen::VectorXd bc;        // u(0, t_k) then u(1, t_k)
  Eigen::RowVectorXd u_xx;   // at collocation points, for the d-gradient
};

/// Adjoints (dObjective / dresidual) for each residual group.
struct ResidualAdjoints {
  Eigen::VectorXd data;
  Eigen::VectorXd pde;
  Eigen::VectorXd ic;
  Eigen::VectorXd bc;
};

/// Caches the evaluation layout for one curve and collocation set so the
/// residuals and their parameter gradients can be computed repeatedly.
/// Boundary conditions are perfect sinks u(0,t) = u(1,t) = 0 with uniform
/// initial concentration u(x,0) = 1.
class PinnProblem {
 public:
  PinnProblem(const ReleaseCurve& curve, CollocationSet colloc, int quadrature_points = 101,
              int boundary_points = 101);
  /// Problem without data (curve-free), e.g. for pretraining checks.
  PinnProblem(std::span<const double> times, std::span<const double> fractions,
              CollocationSet colloc, int quadrature_points, int boundary_points);

  struct Evaluation {
    PinnResiduals residuals;
    nn::Tape value_tape;
    nn::Tape deriv_tape;
    double d = 0.0;
  };

  Evaluation evaluate(const nn::MlpParams& params, double d,
                      const nn::DropoutMask* mask = nullptr) const;

  /// Accumulates d/dtheta and d/dd of sum(adjoint . residual) for each group.
  void backward(const Evaluation& eval, const ResidualAdjoints& adjoints,
                Eigen::Ref<Eigen::VectorXd> grad_params, double& grad_d) const;

  /// Per-group sums of squared residuals.
  struct SquaredSums {
    double data = 0.0;
    double pde = 0.0;
    double ic = 0.0;
    double bc = 0.0;
  };
  /// Objective sum_g coeff_g * ||r_g||^2 and its gradient, computed in
  /// cache-sized chunks without materializing the full tapes. Gradients are
  /// accumulated into grad_params and grad_d.
  SquaredSums quadratic_gradient(const nn::MlpParams& params, double d,
                                 const LossWeights& coeff, const nn::DropoutMask* mask,
                                 Eigen::Ref<Eigen::VectorXd> grad_params,
                                 double& grad_d) const;
  /// Weighted mean-square loss with its gradient (chunked).
  LossBreakdown loss_gradient(const nn::MlpParams& params, double d, const LossWeights& w,
                              const nn::DropoutMask* mask, Eigen::Ref<Eigen::VectorXd> grad_params,
                              double& grad_d) const;

  LossBreakdown loss(const PinnResiduals& r, const LossWeights& w) const;
  /// Adjoints of the weighted mean-square loss.
  ResidualAdjoints loss_adjoints(const PinnResiduals& r, const LossWeights& w) const;

  const CollocationSet& collocation() const noexcept { return colloc_; }
  Eigen::Index data_count() const noexcept { return targets_.size(); }
  int boundary_points() const noexcept { return boundary_points_; }

 private:
  Eigen::VectorXd targets_;
  CollocationSet colloc_;
  int quadrature_points_;
  int boundary_points_;
  Eigen::VectorXd quad_weights_;
  Eigen::VectorXd value_xs_;
  Eigen::VectorXd value_ts_;
};

LossBreakdown total_loss(const nn::MlpParams& params, double d, const ReleaseCurve& curve,
                         const CollocationSet& colloc, const LossWeights& weights,
                         int quadrature_points = 101, int boundary_points = 101);

struct LossGradient {
  LossBreakdown loss;
  Eigen::VectorXd params;
  double d = 0.0;
};

LossGradient total_loss_gradient(const nn::MlpParams& params, double d,
                                 const ReleaseCurve& curve, const CollocationSet& colloc,
                                 const LossWeights& weights, int quadrature_points = 101,
                                 int boundary_points = 101);

struct TrainedPinn {
  nn::MlpParams params;
  double d_value = 0.0;
  std::vector<LossBreakdown> loss_history;
  PinnConfig config;
};

struct TrainOptions {
  /// Called after each epoch's loss is evaluated (before the update).
  std::function<void(int epoch, const LossBreakdown&)> on_epoch;
};

/// Full-batch Adam training. Throws NonFiniteLossError on divergence.
TrainedPinn train(const PinnConfig& config, const ReleaseCurve& curve,
                  const TrainOptions& options = {});

/// Directory layout: checkpoint.bin, params.json, config.json, loss_history.csv.
void save_trained(const std::filesystem::path& dir, const TrainedPinn& model);
TrainedPinn load_trained(const std::filesystem::path& dir);

}  // namespace releaseflow
