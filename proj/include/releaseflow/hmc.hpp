#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "releaseflow/dataset.hpp"
#include "releaseflow/nn.hpp"
#include "releaseflow/pinn.hpp"
#include "releaseflow/uq.hpp"

namespace releaseflow {

/// Likelihood scales, priors and sampler settings for HMC over the network
/// parameters and the diffusivity.
struct HmcConfig {
  int n_samples = 2000;
  int burn_in = 1000;
  int leapfrog_steps = 50;
  double step_size = 1e-3;
  double prior_std_weights = 1.0;
  double noise_std_data = 0.05;
  double noise_std_pde = 0.05;
  /// Std of the initial/boundary-condition residuals.
  double noise_std_boundary = 0.05;
  /// Log-normal prior on d: median and std of log(d).
  double d_prior_median = 0.01;
  double d_prior_log_std = 1.0;
  int quadrature_points = 101;
  /// Points per IC/BC edge; 0 drops the IC/BC likelihood.
  int boundary_points = 101;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Log posterior split by factor. All Gaussian terms include their
/// normalizing constants.
struct LogPosteriorTerms {
  double data = 0.0;
  double pde = 0.0;
  double boundary = 0.0;
  double prior_weights = 0.0;
  double prior_d = 0.0;
  double total = 0.0;
};

LogPosteriorTerms log_posterior_terms(const nn::MlpParams& params, double d,
                                      const ReleaseCurve& curve, const CollocationSet& colloc,
                                      const HmcConfig& cfg);
double log_posterior(const nn::MlpParams& params, double d, const ReleaseCurve& curve,
                     const CollocationSet& colloc, const HmcConfig& cfg);

struct LogPosteriorGradient {
  LogPosteriorTerms terms;
  Eigen::VectorXd params;
  double d = 0.0;
};

LogPosteriorGradient log_posterior_gradient(const nn::MlpParams& params, double d,
                                            const ReleaseCurve& curve,
                                            const CollocationSet& colloc, const HmcConfig& cfg);

// Generic sampler over R^n, used for the network posterior and for known
// test targets.

/// Returns log density at q and writes its gradient into grad.
using LogDensityFn = std::function<double(const Eigen::VectorXd& q, Eigen::VectorXd& grad)>;

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  double log_density = 0.0;
  Eigen::VectorXd grad;
};

/// H = -log density + |p|^2 / 2 (unit mass).
double hamiltonian(const PhasePoint& z);

PhasePoint make_phase_point(const LogDensityFn& target, Eigen::VectorXd q, Eigen::VectorXd p);

/// `steps` leapfrog steps of size `step_size`, in place.
void leapfrog(const LogDensityFn& target, PhasePoint& z, double step_size, int steps);

struct ChainSettings {
  int n_samples = 2000;
  int burn_in = 1000;
  int leapfrog_steps = 50;
  double step_size = 1e-3;
  std::uint64_t seed = 0;
};

struct ChainResult {
  std::vector<Eigen::VectorXd> draws;
  /// Accepted fraction of the post-burn-in proposals.
  double acceptance_rate = 0.0;
  int divergences = 0;
  int iterations = 0;
};

/// Standard HMC: fresh unit-mass momentum each iteration, leapfrog, Metropolis
/// correction. A proposal with a non-finite Hamiltonian is a divergence and is
/// rejected; more than half the iterations diverging aborts with
/// DivergentTrajectory.
ChainResult hmc_chain(const LogDensityFn& target, Eigen::VectorXd init,
                      const ChainSettings& settings);

struct PosteriorSamples {
  nn::MlpArchitecture arch;
  /// One draw per column: network parameters.
  Eigen::MatrixXd params;
  std::vector<double> d;
  double acceptance_rate = 0.0;
  int divergences = 0;

  std::size_t size() const noexcept { return d.size(); }
  nn::MlpParams draw(std::size_t k) const;
  void validate() const;
};

/// Samples (theta, log d). The chain runs on rho = log d, so the sampled
/// density is the posterior times the Jacobian d.
PosteriorSamples hmc_sample(const ReleaseCurve& curve, const CollocationSet& colloc,
                            const HmcConfig& cfg, const nn::MlpParams& init_params,
                            double init_d);

/// Binary: magic "RFLOWHMC", architecture digest, draw count, parameter count,
/// then per draw the parameters followed by d, all little-endian.
void write_samples(std::ostream& out, const PosteriorSamples& samples);
PosteriorSamples read_samples(std::istream& in, const nn::MlpArchitecture& arch);
void save_samples(const std::filesystem::path& path, const PosteriorSamples& samples);
PosteriorSamples load_samples(const std::filesystem::path& path, const nn::MlpArchitecture& arch);

/// Quantile of d over the draws (linear interpolation between order statistics).
double d_quantile(const PosteriorSamples& samples, double q);

UncertaintyBand posterior_band(const PosteriorSamples& samples, std::span<const double> times,
                               int quadrature_points = 101);

}  // namespace releaseflow
