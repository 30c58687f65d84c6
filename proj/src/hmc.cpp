#include "releaseflow/hmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include "binary_io.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/rng.hpp"

namespace releaseflow {

namespace {

constexpr std::array<char, 8> kSamplesMagic = {'R', 'F', 'L', 'O', 'W', 'H', 'M', 'C'};

// log of the N(0, sigma^2) normalizing constant, per observation.
double log_norm_const(double sigma) { return -std::log(std::sqrt(2.0 * std::numbers::pi) * sigma); }

LogPosteriorTerms evaluate_posterior(const PinnProblem& problem, const nn::MlpParams& params,
                                     double d, const HmcConfig& cfg, Eigen::VectorXd* grad_params,
                                     double* grad_d) {
  require(d > 0.0 && std::isfinite(d), "diffusivity must be positive");
  // sum_g -||r_g||^2 / (2 sigma_g^2), with its gradient.
  auto neg_half_inv_var = [](double s) { return -0.5 / (s * s); };
  const LossWeights coeff{neg_half_inv_var(cfg.noise_std_data), neg_half_inv_var(cfg.noise_std_pde),
                          neg_half_inv_var(cfg.noise_std_boundary),
                          neg_half_inv_var(cfg.noise_std_boundary)};
  Eigen::VectorXd scratch;
  double scratch_d = 0.0;
  if (grad_params == nullptr) scratch = Eigen::VectorXd::Zero(params.values().size());
  Eigen::VectorXd& g = grad_params != nullptr ? *grad_params : scratch;
  double& gd = grad_d != nullptr ? *grad_d : scratch_d;
  const PinnProblem::SquaredSums sums = problem.quadratic_gradient(params, d, coeff, nullptr, g, gd);

  const auto n_data = static_cast<double>(problem.data_count());
  const auto n_pde = static_cast<double>(problem.collocation().size());
  const auto n_bnd = 3.0 * problem.boundary_points();
  LogPosteriorTerms t;
  t.data = n_data * log_norm_const(cfg.noise_std_data) + coeff.data * sums.data;
  t.pde = n_pde * log_norm_const(cfg.noise_std_pde) + coeff.pde * sums.pde;
  t.boundary = n_bnd * log_norm_const(cfg.noise_std_boundary) + coeff.ic * (sums.ic + sums.bc);

  const Eigen::VectorXd& theta = params.values();
  const double sw = cfg.prior_std_weights;
  t.prior_weights = static_cast<double>(theta.size()) * log_norm_const(sw) -
                    theta.squaredNorm() / (2.0 * sw * sw);
  g -= theta / (sw * sw);

  const double s = cfg.d_prior_log_std;
  const double z = std::log(d) - std::log(cfg.d_prior_median);
  t.prior_d = -std::log(d) + log_norm_const(s) - z * z / (2.0 * s * s);
  gd += -1.0 / d - z / (s * s * d);

  t.total = t.data + t.pde + t.boundary + t.prior_weights + t.prior_d;
  return t;
}

PinnProblem make_problem(const ReleaseCurve& curve, const CollocationSet& colloc,
                         const HmcConfig& cfg) {
  return PinnProblem(curve.times, curve.fractions, colloc, cfg.quadrature_points,
                     cfg.boundary_points);
}

}  // namespace

void HmcConfig::validate() const {
  require(n_samples >= 1, "n_samples must be >= 1");
  require(burn_in >= 0, "burn_in must be >= 0");
  require(leapfrog_steps >= 1, "leapfrog_steps must be >= 1");
  require(step_size > 0.0 && std::isfinite(step_size), "step_size must be positive");
  require(prior_std_weights > 0.0 && noise_std_data > 0.0 && noise_std_pde > 0.0 &&
              noise_std_boundary > 0.0,
          "prior and noise standard deviations must be positive");
  require(d_prior_median > 0.0 && d_prior_log_std > 0.0, "d prior parameters must be positive");
  require(quadrature_points >= 3 && quadrature_points % 2 == 1,
          "quadrature_points must be odd and >= 3");
  require(boundary_points >= 0, "boundary_points must be >= 0");
}

LogPosteriorTerms log_posterior_terms(const nn::MlpParams& params, double d,
                                      const ReleaseCurve& curve, const CollocationSet& colloc,
                                      const HmcConfig& cfg) {
  cfg.validate();
  return evaluate_posterior(make_problem(curve, colloc, cfg), params, d, cfg, nullptr, nullptr);
}

double log_posterior(const nn::MlpParams& params, double d, const ReleaseCurve& curve,
                     const CollocationSet& colloc, const HmcConfig& cfg) {
  return log_posterior_terms(params, d, curve, colloc, cfg).total;
}

LogPosteriorGradient log_posterior_gradient(const nn::MlpParams& params, double d,
                                            const ReleaseCurve& curve,
                                            const CollocationSet& colloc, const HmcConfig& cfg) {
  cfg.validate();
  LogPosteriorGradient out;
  out.params = Eigen::VectorXd::Zero(params.values().size());
  out.terms = evaluate_posterior(make_problem(curve, colloc, cfg), params, d, cfg, &out.params,
                                 &out.d);
  return out;
}

double hamiltonian(const PhasePoint& z) { return -z.log_density + 0.5 * z.p.squaredNorm(); }

PhasePoint make_phase_point(const LogDensityFn& target, Eigen::VectorXd q, Eigen::VectorXd p) {
  require(q.size() == p.size(), "position and momentum differ in length");
  PhasePoint z{std::move(q), std::move(p), 0.0, Eigen::VectorXd::Zero(0)};
  z.grad = Eigen::VectorXd::Zero(z.q.size());
  z.log_density = target(z.q, z.grad);
  return z;
}

void leapfrog(const LogDensityFn& target, PhasePoint& z, double step_size, int steps) {
  z.p += 0.5 * step_size * z.grad;
  for (int s = 0; s < steps; ++s) {
    z.q += step_size * z.p;
    z.grad.setZero();
    z.log_density = target(z.q, z.grad);
    if (s + 1 < steps) z.p += step_size * z.grad;
  }
  z.p += 0.5 * step_size * z.grad;
}

ChainResult hmc_chain(const LogDensityFn& target, Eigen::VectorXd init,
                      const ChainSettings& settings) {
  require(settings.n_samples >= 1 && settings.burn_in >= 0, "invalid chain length");
  require(settings.leapfrog_steps >= 1, "leapfrog_steps must be >= 1");
  require(settings.step_size > 0.0, "step_size must be positive");
  const Eigen::Index dim = init.size();
  Rng rng(settings.seed);
  PhasePoint current = make_phase_point(target, std::move(init), Eigen::VectorXd::Zero(dim));
  if (!std::isfinite(current.log_density)) {
    fail(ErrorKind::DivergentTrajectory, "initial point has non-finite log density");
  }

  const int total = settings.burn_in + settings.n_samples;
  ChainResult out;
  out.draws.reserve(static_cast<std::size_t>(settings.n_samples));
  int accepted = 0;
  Eigen::VectorXd momentum(dim);
  for (int it = 0; it < total; ++it) {
    for (Eigen::Index i = 0; i < dim; ++i) momentum[i] = rng.normal();
    current.p = momentum;
    const double h0 = hamiltonian(current);
    PhasePoint proposal = current;
    leapfrog(target, proposal, settings.step_size, settings.leapfrog_steps);
    const double h1 = hamiltonian(proposal);
    const double log_u = std::log(rng.uniform());
    bool accept = false;
    if (!std::isfinite(h1)) {
      ++out.divergences;
      if (2 * out.divergences > total) {
        fail(ErrorKind::DivergentTrajectory,
             "more than half of the HMC trajectories diverged (" +
                 std::to_string(out.divergences) + " of " + std::to_string(it + 1) +
                 " so far); reduce step_size");
      }
    } else {
      accept = log_u < h0 - h1;
    }
    if (accept) current = std::move(proposal);
    if (it >= settings.burn_in) {
      if (accept) ++accepted;
      out.draws.push_back(current.q);
    }
  }
  out.iterations = total;
  out.acceptance_rate = static_cast<double>(accepted) / settings.n_samples;
  return out;
}

nn::MlpParams PosteriorSamples::draw(std::size_t k) const {
  return nn::MlpParams(arch, params.col(static_cast<Eigen::Index>(k)));
}

void PosteriorSamples::validate() const {
  require(static_cast<std::size_t>(params.cols()) == d.size(), "draw count mismatch");
  require(params.rows() == arch.param_count(), "draw length does not match the architecture");
  require(acceptance_rate > 0.0 && acceptance_rate <= 1.0, "acceptance rate must lie in (0, 1]");
  for (double v : d) require(v > 0.0 && std::isfinite(v), "posterior d draws must be positive");
}

PosteriorSamples hmc_sample(const ReleaseCurve& curve, const CollocationSet& colloc,
                            const HmcConfig& cfg, const nn::MlpParams& init_params,
                            double init_d) {
  cfg.validate();
  require(init_d > 0.0, "initial diffusivity must be positive");
  const PinnProblem problem = make_problem(curve, colloc, cfg);
  const nn::MlpArchitecture arch = init_params.arch();
  const Eigen::Index n_theta = arch.param_count();

  // Position = [theta; rho] with d = exp(rho); the + rho term is the Jacobian.
  const LogDensityFn target = [&](const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
    if (!q.allFinite()) return std::numeric_limits<double>::quiet_NaN();
    const nn::MlpParams params(arch, q.head(n_theta));
    const double d = std::exp(q[n_theta]);
    if (!(d > 0.0) || !std::isfinite(d)) return std::numeric_limits<double>::quiet_NaN();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_theta);
    double gd = 0.0;
    const LogPosteriorTerms t = evaluate_posterior(problem, params, d, cfg, &g, &gd);
    grad.head(n_theta) = g;
    grad[n_theta] = gd * d + 1.0;
    return t.total + q[n_theta];
  };

  Eigen::VectorXd init(n_theta + 1);
  init.head(n_theta) = init_params.values();
  init[n_theta] = std::log(init_d);
  const ChainResult chain = hmc_chain(
      target, std::move(init),
      ChainSettings{cfg.n_samples, cfg.burn_in, cfg.leapfrog_steps, cfg.step_size, cfg.seed});
  if (chain.acceptance_rate <= 0.0) {
    fail(ErrorKind::DivergentTrajectory,
         "HMC accepted no proposals after burn-in; reduce step_size");
  }

  PosteriorSamples out;
  out.arch = arch;
  out.params.resize(n_theta, static_cast<Eigen::Index>(chain.draws.size()));
  out.d.reserve(chain.draws.size());
  for (std::size_t k = 0; k < chain.draws.size(); ++k) {
    out.params.col(static_cast<Eigen::Index>(k)) = chain.draws[k].head(n_theta);
    out.d.push_back(std::exp(chain.draws[k][n_theta]));
  }
  out.acceptance_rate = chain.acceptance_rate;
  out.divergences = chain.divergences;
  return out;
}

void write_samples(std::ostream& out, const PosteriorSamples& samples) {
  out.write(kSamplesMagic.data(), kSamplesMagic.size());
  detail::put_u64(out, samples.arch.digest());
  detail::put_u64(out, samples.size());
  detail::put_u64(out, static_cast<std::uint64_t>(samples.params.rows()));
  detail::put_f64(out, samples.acceptance_rate);
  detail::put_u64(out, static_cast<std::uint64_t>(samples.divergences));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto col = samples.params.col(static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < col.size(); ++i) detail::put_f64(out, col[i]);
    detail::put_f64(out, samples.d[k]);
  }
  if (!out) fail(ErrorKind::Io, "failed writing posterior samples");
}

PosteriorSamples read_samples(std::istream& in, const nn::MlpArchitecture& arch) {
  const std::string what = "posterior samples";
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kSamplesMagic) fail(ErrorKind::Parse, "not a posterior sample file");
  if (detail::get_u64(in, what) != arch.digest()) {
    fail(ErrorKind::Parse, "sample architecture does not match the requested network");
  }
  const std::uint64_t count = detail::get_u64(in, what);
  const std::uint64_t dim = detail::get_u64(in, what);
  if (dim != static_cast<std::uint64_t>(arch.param_count())) {
    fail(ErrorKind::Parse, "sample dimension does not match the architecture");
  }
  PosteriorSamples s;
  s.arch = arch;
  s.acceptance_rate = detail::get_f64(in, what);
  s.divergences = static_cast<int>(detail::get_u64(in, what));
  s.params.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(count));
  s.d.resize(count);
  for (std::uint64_t k = 0; k < count; ++k) {
    for (std::uint64_t i = 0; i < dim; ++i) {
      s.params(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = detail::get_f64(in, what);
    }
    s.d[k] = detail::get_f64(in, what);
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorKind::Parse, what + " has trailing data");
  return s;
}

void save_samples(const std::filesystem::path& path, const PosteriorSamples& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  write_samples(out, samples);
}

PosteriorSamples load_samples(const std::filesystem::path& path, const nn::MlpArchitecture& arch) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return read_samples(in, arch);
}

double d_quantile(const PosteriorSamples& samples, double q) {
  require(!samples.d.empty(), "no posterior draws");
  require(q >= 0.0 && q <= 1.0, "quantile must lie in [0, 1]");
  std::vector<double> v = samples.d;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

UncertaintyBand posterior_band(const PosteriorSamples& samples, std::span<const double> times,
                               int quadrature_points) {
  require(samples.size() >= 2, "a posterior band needs at least 2 draws");
  std::vector<std::vector<double>> curves;
  curves.reserve(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) {
    curves.push_back(release_fractions(samples.draw(k), times, quadrature_points));
  }
  return band_from_samples(std::vector<double>(times.begin(), times.end()), curves,
                           BandMethod::Hmc);
}

}  // namespace releaseflow
