#include "releaseflow/pinn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "releaseflow/adam.hpp"
#include "releaseflow/checkpoint.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/json_io.hpp"
#include "releaseflow/rng.hpp"

namespace releaseflow {

namespace {

// Stream tags for derive_seed so each random consumer has its own stream.
constexpr std::uint64_t kCollocationStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kDropoutStream = 3;

Eigen::VectorXd uniform_grid(int n) {
  if (n == 1) return Eigen::VectorXd::Constant(1, 0.0);
  return Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
}

double mean_square(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.squaredNorm() / static_cast<double>(v.size());
}

}  // namespace

void PinnConfig::validate() const {
  arch.validate();
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(epochs >= 0, "epochs must be >= 0");
  require(n_collocation >= 1, "n_collocation must be >= 1");
  require(d > 0.0 && std::isfinite(d), "diffusivity must be positive");
  require(weights.data > 0.0 && weights.pde > 0.0, "data and pde loss weights must be positive");
  require(weights.ic >= 0.0 && weights.bc >= 0.0, "loss weights must be non-negative");
  require(quadrature_points >= 3 && quadrature_points % 2 == 1,
          "quadrature_points must be odd and >= 3");
  require(boundary_points >= 0, "boundary_points must be >= 0");
  require(dropout_keep > 0.0 && dropout_keep <= 1.0, "dropout_keep must lie in (0, 1]");
}

PinnConfig PinnConfig::classical_comparison() {
  PinnConfig c;
  c.epochs = 2500;
  c.n_collocation = 10000;
  return c;
}

PinnConfig PinnConfig::ensemble_member() {
  PinnConfig c;
  c.epochs = 5000;
  c.n_collocation = 10000;
  return c;
}

PinnConfig PinnConfig::bayesian_dropout() {
  PinnConfig c;
  c.epochs = 10000;
  c.n_collocation = 10000;
  c.dropout_keep = 0.9;
  return c;
}

PinnConfig PinnConfig::limited_data() {
  PinnConfig c;
  c.epochs = 2000;
  c.n_collocation = 1000;
  return c;
}

CollocationSet sample_lhs(std::size_t n, std::uint64_t seed) {
  require(n >= 1, "collocation count must be >= 1");
  Rng rng(seed);
  const auto count = static_cast<Eigen::Index>(n);
  CollocationSet set{Eigen::VectorXd(count), Eigen::VectorXd(count)};
  std::vector<std::size_t> perm(n);
  for (Eigen::VectorXd* axis : {&set.xs, &set.ts}) {
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i = 0; i < n; ++i) {
      // Keep the jitter away from bin edges so floor(v * n) recovers the bin exactly.
      const double jitter = 1e-9 + rng.uniform() * (1.0 - 2e-9);
      (*axis)[static_cast<Eigen::Index>(i)] =
          (static_cast<double>(perm[i]) + jitter) / static_cast<double>(n);
    }
  }
  return set;
}

Eigen::VectorXd pde_residual(const nn::MlpParams& params, double d, const CollocationSet& pts) {
  require(d > 0.0, "diffusivity must be positive");
  const nn::FieldDerivatives f = nn::input_derivatives(params, pts.xs, pts.ts);
  return (f.u_t - d * f.u_xx).transpose();
}

Eigen::VectorXd simpson_weights(int points) {
  require(points >= 3 && points % 2 == 1, "Simpson quadrature needs an odd count >= 3");
  const double h = 1.0 / (points - 1);
  Eigen::VectorXd w(points);
  for (int i = 0; i < points; ++i) {
    w[i] = (i == 0 || i == points - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
  }
  return w * (h / 3.0);
}

std::vector<double> release_fractions(const nn::MlpParams& params, std::span<const double> times,
                                      int quadrature_points, const nn::DropoutMask* mask) {
  const Eigen::VectorXd w = simpson_weights(quadrature_points);
  const Eigen::VectorXd grid = uniform_grid(quadrature_points);
  Eigen::VectorXd ts(grid.size());
  std::vector<double> out(times.size());
  // One batch per time, exactly as PinnProblem evaluates its data residuals.
  for (std::size_t i = 0; i < times.size(); ++i) {
    ts.setConstant(times[i]);
    out[i] = 1.0 - nn::Tape(params, grid, ts, false, mask).u().dot(w.transpose());
  }
  return out;
}

double release_fraction(const nn::MlpParams& params, double t, int quadrature_points,
                        const nn::DropoutMask* mask) {
  const double times[] = {t};
  return release_fractions(params, times, quadrature_points, mask)[0];
}

PinnProblem::PinnProblem(const ReleaseCurve& curve, CollocationSet colloc, int quadrature_points,
                         int boundary_points)
    : PinnProblem(curve.times, curve.fractions, std::move(colloc), quadrature_points,
                  boundary_points) {}

PinnProblem::PinnProblem(std::span<const double> times, std::span<const double> fractions,
                         CollocationSet colloc, int quadrature_points, int boundary_points)
    : colloc_(std::move(colloc)),
      quadrature_points_(quadrature_points),
      boundary_points_(boundary_points),
      quad_weights_(simpson_weights(quadrature_points)) {
  require(times.size() == fractions.size(), "times and fractions differ in length");
  require(boundary_points >= 0, "boundary_points must be >= 0");
  require(colloc_.xs.size() == colloc_.ts.size(), "collocation axes differ in length");
  targets_ = Eigen::Map<const Eigen::VectorXd>(fractions.data(),
                                               static_cast<Eigen::Index>(fractions.size()));

  const auto n = static_cast<Eigen::Index>(times.size());
  const auto q = static_cast<Eigen::Index>(quadrature_points);
  const auto b = static_cast<Eigen::Index>(boundary_points);
  const Eigen::VectorXd qgrid = uniform_grid(quadrature_points);
  const Eigen::VectorXd bgrid = b > 0 ? uniform_grid(boundary_points) : Eigen::VectorXd();
  // Layout: [quadrature nodes per data time | IC (t=0) | BC x=0 | BC x=1]
  value_xs_.resize(n * q + 3 * b);
  value_ts_.resize(n * q + 3 * b);
  for (Eigen::Index i = 0; i < n; ++i) {
    value_xs_.segment(i * q, q) = qgrid;
    value_ts_.segment(i * q, q).setConstant(times[static_cast<std::size_t>(i)]);
  }
  const Eigen::Index off = n * q;
  if (b > 0) {
    value_xs_.segment(off, b) = bgrid;
    value_ts_.segment(off, b).setZero();
    value_xs_.segment(off + b, b).setZero();
    value_ts_.segment(off + b, b) = bgrid;
    value_xs_.segment(off + 2 * b, b).setOnes();
    value_ts_.segment(off + 2 * b, b) = bgrid;
  }
}

PinnProblem::Evaluation PinnProblem::evaluate(const nn::MlpParams& params, double d,
                                              const nn::DropoutMask* mask) const {
  nn::Tape value_tape(params, value_xs_, value_ts_, false, mask);
  nn::Tape deriv_tape(params, colloc_.xs, colloc_.ts, true, mask);
  const Eigen::RowVectorXd u = value_tape.u();
  const nn::FieldDerivatives f = deriv_tape.derivatives();

  const Eigen::Index n = targets_.size();
  const auto q = static_cast<Eigen::Index>(quadrature_points_);
  const auto b = static_cast<Eigen::Index>(boundary_points_);
  PinnResiduals r;
  r.data.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.data[i] = 1.0 - u.segment(i * q, q).dot(quad_weights_.transpose()) - targets_[i];
  }
  r.ic = u.segment(n * q, b).transpose().array() - 1.0;
  r.bc = u.segment(n * q + b, 2 * b).transpose();
  r.pde = (f.u_t - d * f.u_xx).transpose();
  r.u_xx = f.u_xx;
  return Evaluation{std::move(r), std::move(value_tape), std::move(deriv_tape), d};
}

void PinnProblem::backward(const Evaluation& eval, const ResidualAdjoints& adj,
                           Eigen::Ref<Eigen::VectorXd> grad_params, double& grad_d) const {
  const Eigen::Index n = targets_.size();
  const auto q = static_cast<Eigen::Index>(quadrature_points_);
  const auto b = static_cast<Eigen::Index>(boundary_points_);
  require(adj.data.size() == n && adj.ic.size() == b && adj.bc.size() == 2 * b &&
              adj.pde.size() == colloc_.size(),
          "residual adjoints do not match the problem layout");

  Eigen::RowVectorXd adj_u(value_xs_.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    adj_u.segment(i * q, q) = -adj.data[i] * quad_weights_.transpose();
  }
  adj_u.segment(n * q, b) = adj.ic.transpose();
  adj_u.segment(n * q + b, 2 * b) = adj.bc.transpose();
  eval.value_tape.backward(adj_u, grad_params);

  if (colloc_.size() > 0) {
    // r = u_t - d u_xx: the adjoint on u_xx is -d times the residual adjoint.
    const Eigen::RowVectorXd a = adj.pde.transpose();
    const Eigen::RowVectorXd zero = Eigen::RowVectorXd::Zero(a.size());
    eval.deriv_tape.backward(zero, a, -eval.d * a, grad_params);
    grad_d += -a.dot(eval.residuals.u_xx);
  }
}

PinnProblem::SquaredSums PinnProblem::quadratic_gradient(
    const nn::MlpParams& params, double d, const LossWeights& coeff,
    const nn::DropoutMask* mask, Eigen::Ref<Eigen::VectorXd> grad_params,
    double& grad_d) const {
  const Eigen::Index n = targets_.size();
  const auto q = static_cast<Eigen::Index>(quadrature_points_);
  const auto b = static_cast<Eigen::Index>(boundary_points_);
  SquaredSums sums;

  // Data: one chunk per observation time (its quadrature nodes).
  for (Eigen::Index i = 0; i < n; ++i) {
    const nn::Tape tape(params, value_xs_.segment(i * q, q), value_ts_.segment(i * q, q), false,
                        mask);
    const double r = 1.0 - tape.u().dot(quad_weights_.transpose()) - targets_[i];
    sums.data += r * r;
    tape.backward(-2.0 * coeff.data * r * quad_weights_.transpose(), grad_params);
  }

  if (b > 0) {
    const nn::Tape tape(params, value_xs_.tail(3 * b), value_ts_.tail(3 * b), false, mask);
    const Eigen::RowVectorXd u = tape.u();
    Eigen::RowVectorXd adj(3 * b);
    const Eigen::RowVectorXd ic = u.head(b).array() - 1.0;
    sums.ic = ic.squaredNorm();
    sums.bc = u.tail(2 * b).squaredNorm();
    adj.head(b) = 2.0 * coeff.ic * ic;
    adj.tail(2 * b) = 2.0 * coeff.bc * u.tail(2 * b);
    tape.backward(adj, grad_params);
  }

  constexpr Eigen::Index kChunk = 64;
  const Eigen::Index m = colloc_.size();
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    const nn::Tape tape(params, colloc_.xs.segment(start, len), colloc_.ts.segment(start, len),
                        true, mask);
    const nn::FieldDerivatives f = tape.derivatives();
    const Eigen::RowVectorXd r = f.u_t - d * f.u_xx;
    sums.pde += r.squaredNorm();
    const Eigen::RowVectorXd a = 2.0 * coeff.pde * r;
    tape.backward(Eigen::RowVectorXd::Zero(len), a, -d * a, grad_params);
    grad_d += -a.dot(f.u_xx);
  }
  return sums;
}

LossBreakdown PinnProblem::loss_gradient(const nn::MlpParams& params, double d,
                                         const LossWeights& w, const nn::DropoutMask* mask,
                                         Eigen::Ref<Eigen::VectorXd> grad_params,
                                         double& grad_d) const {
  auto per = [](double weight, Eigen::Index count) {
    return count > 0 ? weight / static_cast<double>(count) : 0.0;
  };
  const LossWeights coeff{per(w.data, targets_.size()), per(w.pde, colloc_.size()),
                          per(w.ic, boundary_points_), per(w.bc, boundary_points_)};
  const SquaredSums s = quadratic_gradient(params, d, coeff, mask, grad_params, grad_d);
  LossBreakdown l;
  l.data = s.data * per(1.0, targets_.size());
  l.pde = s.pde * per(1.0, colloc_.size());
  l.ic = s.ic * per(1.0, boundary_points_);
  l.bc = s.bc * per(1.0, boundary_points_);
  l.total = w.data * l.data + w.pde * l.pde + w.ic * l.ic + w.bc * l.bc;
  return l;
}

LossBreakdown PinnProblem::loss(const PinnResiduals& r, const LossWeights& w) const {
  LossBreakdown l;
  l.data = mean_square(r.data);
  l.pde = mean_square(r.pde);
  l.ic = mean_square(r.ic);
  // Mean over the time grid of u(0,t)^2 + u(1,t)^2.
  l.bc = boundary_points_ > 0 ? r.bc.squaredNorm() / boundary_points_ : 0.0;
  l.total = w.data * l.data + w.pde * l.pde + w.ic * l.ic + w.bc * l.bc;
  return l;
}

ResidualAdjoints PinnProblem::loss_adjoints(const PinnResiduals& r, const LossWeights& w) const {
  auto scaled = [](const Eigen::VectorXd& v, double weight, double count) {
    return count > 0 ? Eigen::VectorXd(2.0 * weight / count * v) : Eigen::VectorXd(v.size());
  };
  return ResidualAdjoints{scaled(r.data, w.data, static_cast<double>(r.data.size())),
                          scaled(r.pde, w.pde, static_cast<double>(r.pde.size())),
                          scaled(r.ic, w.ic, static_cast<double>(r.ic.size())),
                          scaled(r.bc, w.bc, static_cast<double>(boundary_points_))};
}

LossBreakdown total_loss(const nn::MlpParams& params, double d, const ReleaseCurve& curve,
                         const CollocationSet& colloc, const LossWeights& weights,
                         int quadrature_points, int boundary_points) {
  require(curve.size() > 0, "curve must be non-empty");
  const PinnProblem problem(curve, colloc, quadrature_points, boundary_points);
  return problem.loss(problem.evaluate(params, d).residuals, weights);
}

LossGradient total_loss_gradient(const nn::MlpParams& params, double d,
                                 const ReleaseCurve& curve, const CollocationSet& colloc,
                                 const LossWeights& weights, int quadrature_points,
                                 int boundary_points) {
  const PinnProblem problem(curve, colloc, quadrature_points, boundary_points);
  const auto eval = problem.evaluate(params, d);
  LossGradient out;
  out.loss = problem.loss(eval.residuals, weights);
  out.params = Eigen::VectorXd::Zero(params.arch().param_count());
  problem.backward(eval, problem.loss_adjoints(eval.residuals, weights), out.params, out.d);
  return out;
}

TrainedPinn train(const PinnConfig& config, const ReleaseCurve& curve,
                  const TrainOptions& options) {
  config.validate();
  validate_curve(curve);
  const PinnProblem problem(curve, sample_lhs(static_cast<std::size_t>(config.n_collocation),
                                              derive_seed(config.seed, kCollocationStream)),
                            config.quadrature_points, config.boundary_points);
  nn::MlpParams params = nn::init_params(config.arch, derive_seed(config.seed, kInitStream));
  const bool learn_d = config.d_mode == DiffusivityMode::Learnable;
  const Eigen::Index n_theta = params.values().size();

  // Optimized vector: network parameters, then log(d) when d is learnable.
  Eigen::VectorXd state(n_theta + (learn_d ? 1 : 0));
  state.head(n_theta) = params.values();
  if (learn_d) state[n_theta] = std::log(config.d);
  nn::AdamState adam = nn::AdamState::zeros(state.size(), config.learning_rate);
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  const bool dropout = config.dropout_keep < 1.0;

  TrainedPinn out{params, config.d, {}, config};
  out.loss_history.reserve(static_cast<std::size_t>(config.epochs));
  Eigen::VectorXd grad(state.size());
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    params.values() = state.head(n_theta);
    const double d = learn_d ? std::exp(state[n_theta]) : config.d;
    std::optional<nn::DropoutMask> mask;
    if (dropout) mask = nn::DropoutMask::sample(config.arch, config.dropout_keep, dropout_rng);

    grad.setZero();
    double grad_d = 0.0;
    const LossBreakdown loss = problem.loss_gradient(params, d, config.weights,
                                                     mask ? &*mask : nullptr, grad.head(n_theta),
                                                     grad_d);
    if (!std::isfinite(loss.total)) {
      throw NonFiniteLossError(epoch, "training loss became non-finite at epoch " +
                                          std::to_string(epoch) + " (seed " +
                                          std::to_string(config.seed) + ")");
    }
    out.loss_history.push_back(loss);
    if (options.on_epoch) options.on_epoch(epoch, loss);

    if (learn_d) grad[n_theta] = grad_d * d;  // chain rule through d = exp(rho)
    nn::adam_step(adam, state, grad);
  }
  params.values() = state.head(n_theta);
  out.params = params;
  out.d_value = learn_d ? std::exp(state[n_theta]) : config.d;
  return out;
}

void save_trained(const std::filesystem::path& dir, const TrainedPinn& model) {
  std::filesystem::create_directories(dir);
  nn::save_checkpoint(dir / "checkpoint.bin", model.params);
  {
    std::ofstream out(dir / "params.json");
    out << nn::params_to_json(model.params).dump(1) << '\n';
  }
  {
    json cfg = model.config;
    cfg["d_value"] = model.d_value;
    std::ofstream out(dir / "config.json");
    out << cfg.dump(2) << '\n';
  }
  std::ofstream hist(dir / "loss_history.csv");
  if (!hist) fail(ErrorKind::Io, "cannot write loss history in '" + dir.string() + "'");
  hist << "epoch,total,data,pde,ic,bc\n" << std::setprecision(17);
  for (std::size_t e = 0; e < model.loss_history.size(); ++e) {
    const auto& l = model.loss_history[e];
    hist << e << ',' << l.total << ',' << l.data << ',' << l.pde << ',' << l.ic << ',' << l.bc
         << '\n';
  }
}

TrainedPinn load_trained(const std::filesystem::path& dir) {
  std::ifstream cfg_in(dir / "config.json");
  if (!cfg_in) fail(ErrorKind::Io, "cannot open '" + (dir / "config.json").string() + "'");
  json cfg_json;
  try {
    cfg_json = json::parse(cfg_in);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("config.json: ") + e.what());
  }
  PinnConfig config = cfg_json.get<PinnConfig>();
  const double d_value = cfg_json.value("d_value", config.d);
  TrainedPinn model{nn::load_checkpoint(dir / "checkpoint.bin", config.arch), d_value, {}, config};

  std::ifstream hist(dir / "loss_history.csv");
  std::string line;
  if (hist && std::getline(hist, line)) {
    while (std::getline(hist, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
      if (v.size() != 6) fail(ErrorKind::Parse, "malformed loss history row '" + line + "'");
      model.loss_history.push_back({v[1], v[2], v[3], v[4], v[5]});
    }
  }
  return model;
}

}  // namespace releaseflow
