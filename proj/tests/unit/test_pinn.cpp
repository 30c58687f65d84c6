#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include "releaseflow/adam.hpp"
#include "releaseflow/dataset.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/metrics.hpp"
#include "releaseflow/pinn.hpp"

using namespace releaseflow;
using std::numbers::pi;

namespace {

nn::MlpParams linear_net(double wx, double wt, double b) {
  nn::MlpArchitecture a;
  a.hidden_layers = 0;
  Eigen::VectorXd v(3);
  v << wx, wt, b;
  return nn::MlpParams(a, v);
}

// Output-bias-only network: u == c everywhere.
nn::MlpParams constant_net(double c) {
  nn::MlpParams p{nn::MlpArchitecture{}};
  p.values()[p.values().size() - 1] = c;
  return p;
}

// Least-squares pretraining of the default network onto u(x,t) = sin(pi x) exp(-d pi^2 t):
// Adam warm start, then Levenberg-Marquardt in the dual (points x points) form.
nn::MlpParams pretrain_analytic(double d, double* final_mse) {
  const int g = 21;
  const Eigen::Index m = g * g;
  Eigen::VectorXd xs(m);
  Eigen::VectorXd ts(m);
  Eigen::RowVectorXd target(m);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const double x = i / (g - 1.0);
      const double t = j / (g - 1.0);
      xs[i * g + j] = x;
      ts[i * g + j] = t;
      target[i * g + j] = std::sin(pi * x) * std::exp(-d * pi * pi * t);
    }
  }
  nn::MlpParams p = nn::init_params(nn::MlpArchitecture{}, 3);
  const Eigen::Index n = p.values().size();
  auto residual = [&](const nn::MlpParams& q) {
    return Eigen::VectorXd((nn::forward(q, xs, ts) - target).transpose());
  };
  nn::AdamState s = nn::AdamState::zeros(n, 3e-3);
  for (int it = 0; it < 3000; ++it) {
    const nn::Tape tape(p, xs, ts, false);
    const Eigen::RowVectorXd r = tape.u() - target;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    tape.backward(2.0 / m * r, grad);
    nn::adam_step(s, p.values(), grad);
  }
  Eigen::VectorXd r = residual(p);
  double lambda = 1e-3;
  Eigen::MatrixXd jac(m, n);
  for (int it = 0; it < 100 && r.squaredNorm() / m > 1e-10; ++it) {
    for (Eigen::Index k = 0; k < m; ++k) {
      jac.row(k) = nn::grad_params(p, xs.segment(k, 1), ts.segment(k, 1),
                                   Eigen::RowVectorXd::Ones(1)).transpose();
    }
    const Eigen::MatrixXd jjt = jac * jac.transpose();
    while (lambda < 1e10) {
      const Eigen::MatrixXd damped = jjt + lambda * Eigen::MatrixXd::Identity(m, m);
      nn::MlpParams trial = p;
      trial.values() -= jac.transpose() * damped.ldlt().solve(r);
      const Eigen::VectorXd rt = residual(trial);
      if (rt.squaredNorm() < r.squaredNorm()) {
        p = trial;
        r = rt;
        lambda = std::max(lambda / 10.0, 1e-12);
        break;
      }
      lambda *= 10.0;
    }
  }
  *final_mse = r.squaredNorm() / m;
  return p;
}

PinnConfig small_config(int epochs, int colloc) {
  PinnConfig c;
  c.epochs = epochs;
  c.n_collocation = colloc;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("latin hypercube stratification") {
  for (std::size_t n : {std::size_t{1}, std::size_t{4}, std::size_t{37}, std::size_t{10000}}) {
    for (std::uint64_t seed : {0ull, 9ull}) {
      const CollocationSet c = sample_lhs(n, seed);
      REQUIRE(c.size() == static_cast<Eigen::Index>(n));
      for (const Eigen::VectorXd* axis : {&c.xs, &c.ts}) {
        std::set<long> bins;
        for (Eigen::Index i = 0; i < axis->size(); ++i) {
          const double v = (*axis)[i];
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
          bins.insert(static_cast<long>(std::floor(v * static_cast<double>(n))));
        }
        CHECK(bins.size() == n);
      }
    }
  }
  const CollocationSet a = sample_lhs(4, 3);
  const CollocationSet b = sample_lhs(4, 3);
  CHECK(a.xs == b.xs);
  CHECK(a.ts == b.ts);
  CHECK_THROWS_AS(sample_lhs(0, 1), Error);
}

TEST_CASE("pde residual examples") {
  const CollocationSet pts = sample_lhs(50, 1);
  CHECK(pde_residual(nn::MlpParams{nn::MlpArchitecture{}}, 0.01, pts).isZero(0.0));
  CHECK(pde_residual(linear_net(1.0, 0.0, 0.0), 0.01, pts).isZero(0.0));
  CHECK_THROWS_AS(pde_residual(linear_net(1.0, 0.0, 0.0), 0.0, pts), Error);
  // u = t: residual equals 1 everywhere.
  CHECK((pde_residual(linear_net(0.0, 1.0, 0.0), 0.3, pts).array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("release fraction examples") {
  CHECK(std::abs(release_fraction(constant_net(1.0), 0.4)) < 1e-15);
  CHECK(std::abs(release_fraction(constant_net(0.0), 0.4) - 1.0) < 1e-15);

  // Simpson weights integrate sin(pi x) to 2/pi.
  const Eigen::VectorXd w = simpson_weights(101);
  double integral = 0.0;
  for (int i = 0; i <= 100; ++i) integral += w[i] * std::sin(pi * i / 100.0);
  CHECK(std::abs((1.0 - integral) - (1.0 - 2.0 / pi)) < 1e-8);
  CHECK(std::abs(w.sum() - 1.0) < 1e-14);
  CHECK_THROWS_AS(simpson_weights(4), Error);
  CHECK_THROWS_AS(simpson_weights(1), Error);

  // u = x integrates to 1/2 exactly.
  CHECK(std::abs(release_fraction(linear_net(1.0, 0.0, 0.0), 0.7, 5) - 0.5) < 1e-15);
  const std::vector<double> ts = {0.0, 0.5, 1.0};
  const auto many = release_fractions(linear_net(0.0, -1.0, 1.0), ts);
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(std::abs(many[i] - ts[i]) < 1e-14);
}

TEST_CASE("total loss examples") {
  const ReleaseCurve curve = synthesize_fickian(0.01, 15, 1.0);
  const CollocationSet pts = sample_lhs(200, 2);
  const nn::MlpParams zero{nn::MlpArchitecture{}};

  LossBreakdown l = total_loss(zero, 0.01, curve, pts, {0.0, 1.0, 0.0, 0.0});
  CHECK(l.total == 0.0);
  l = total_loss(zero, 0.01, curve, pts, {0.0, 0.0, 1.0, 0.0});
  CHECK(l.ic == doctest::Approx(1.0));
  CHECK(l.total == doctest::Approx(1.0));
  CHECK(l.bc == 0.0);

  // A network u = 1 - t releases R(t) = t; a curve of y = t is a perfect fit.
  std::vector<double> times;
  for (int i = 0; i < 15; ++i) times.push_back(i / 14.0);
  const ReleaseCurve diag = make_curve(FilmType::Flat, times, times);
  l = total_loss(linear_net(0.0, -1.0, 1.0), 0.01, diag, pts, {1.0, 0.0, 0.0, 0.0});
  CHECK(l.total < 1e-28);

  // u = 1: IC satisfied, each boundary contributes 1.
  l = total_loss(constant_net(1.0), 0.01, curve, pts, {1.0, 1.0, 1.0, 1.0});
  CHECK(l.ic < 1e-30);
  CHECK(l.bc == doctest::Approx(2.0));
  CHECK(l.pde == 0.0);
  const double rmse = metrics(curve.fractions, std::vector<double>(15, 0.0)).rmse;
  CHECK(l.data == doctest::Approx(rmse * rmse));
}

TEST_CASE("loss components are non-negative and sum to the total (property)") {
  const ReleaseCurve curve = reference_curve(FilmType::Crumpled2D);
  const CollocationSet pts = sample_lhs(300, 4);
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const nn::MlpParams p = nn::init_params(nn::MlpArchitecture{}, trial);
    const LossWeights w{rng.uniform(0.1, 3.0), rng.uniform(0.1, 3.0), rng.uniform(0.0, 3.0),
                        rng.uniform(0.0, 3.0)};
    const LossBreakdown l = total_loss(p, rng.uniform(0.001, 0.2), curve, pts, w);
    CHECK(l.data >= 0.0);
    CHECK(l.pde >= 0.0);
    CHECK(l.ic >= 0.0);
    CHECK(l.bc >= 0.0);
    const double sum = w.data * l.data + w.pde * l.pde + w.ic * l.ic + w.bc * l.bc;
    CHECK(std::abs(l.total - sum) <= 1e-12 * std::max(1.0, sum));
  }
}

TEST_CASE("loss gradients: chunked path, tape path and finite differences agree") {
  const ReleaseCurve curve = reference_curve(FilmType::Wrinkled1D);
  const CollocationSet pts = sample_lhs(150, 6);
  const PinnProblem problem(curve, pts, 101, 11);
  nn::MlpParams p = nn::init_params(nn::MlpArchitecture{}, 2);
  const double d = 0.03;
  const LossWeights w{1.0, 2.0, 0.5, 0.7};

  const LossGradient ref = total_loss_gradient(p, d, curve, pts, w, 101, 11);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p.values().size());
  double gd = 0.0;
  const LossBreakdown l = problem.loss_gradient(p, d, w, nullptr, g, gd);
  CHECK(std::abs(l.total - ref.loss.total) < 1e-12 * ref.loss.total);
  CHECK((g - ref.params).norm() <= 1e-10 * ref.params.norm());
  CHECK(std::abs(gd - ref.d) <= 1e-10 * std::abs(ref.d));

  const double h = 1e-6;
  const double fd_d = (total_loss(p, d + h, curve, pts, w, 101, 11).total -
                       total_loss(p, d - h, curve, pts, w, 101, 11).total) / (2 * h);
  CHECK(std::abs(fd_d - gd) <= 1e-5 * std::abs(fd_d));
  for (Eigen::Index k = 0; k < p.values().size(); k += 97) {
    nn::MlpParams plus = p;
    nn::MlpParams minus = p;
    plus.values()[k] += h;
    minus.values()[k] -= h;
    const double fd = (total_loss(plus, d, curve, pts, w, 101, 11).total -
                       total_loss(minus, d, curve, pts, w, 101, 11).total) / (2 * h);
    CHECK(std::abs(fd - g[k]) <= 1e-8 + 1e-5 * std::abs(fd));
  }
}

TEST_CASE("gradient direction is invariant to a common weight scale") {
  const ReleaseCurve curve = reference_curve(FilmType::Flat);
  const CollocationSet pts = sample_lhs(200, 7);
  const nn::MlpParams p = nn::init_params(nn::MlpArchitecture{}, 11);
  const LossWeights w{1.0, 1.0, 1.0, 1.0};
  const Eigen::VectorXd g1 = total_loss_gradient(p, 0.01, curve, pts, w).params;
  for (double c : {1e-3, 0.5, 7.0, 1e4}) {
    const Eigen::VectorXd gc =
        total_loss_gradient(p, 0.01, curve, pts, {c, c, c, c}).params;
    CHECK(std::abs(g1.dot(gc) / (g1.norm() * gc.norm()) - 1.0) < 1e-9);
  }
}

TEST_CASE("pretrained analytic solution has a small residual and Crank release") {
  const double d = 0.05;
  double mse = 1.0;
  const nn::MlpParams p = pretrain_analytic(d, &mse);
  CHECK(mse < 1e-8);
  const Eigen::VectorXd r = pde_residual(p, d, sample_lhs(2000, 3));
  CHECK(r.cwiseAbs().mean() < 1e-2);
  // Only the first sine mode: R(t) = 1 - (2/pi) exp(-d pi^2 t).
  for (double t : {0.0, 0.5, 1.0}) {
    CHECK(std::abs(release_fraction(p, t) - (1.0 - 2.0 / pi * std::exp(-d * pi * pi * t))) < 1e-3);
  }
}

TEST_CASE("training with zero epochs returns the initial parameters") {
  PinnConfig c = small_config(0, 10);
  const TrainedPinn t = train(c, reference_curve(FilmType::Flat));
  CHECK(t.loss_history.empty());
  CHECK(t.d_value == c.d);
  CHECK(t.params.values() == nn::init_params(c.arch, derive_seed(c.seed, 2)).values());
}

TEST_CASE("config validation") {
  PinnConfig c;
  c.n_collocation = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PinnConfig{};
  c.weights.data = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PinnConfig{};
  c.weights.ic = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PinnConfig{};
  c.quadrature_points = 100;
  CHECK_THROWS_AS(c.validate(), Error);
  c = PinnConfig{};
  c.d = -0.01;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(PinnConfig::classical_comparison().epochs == 2500);
  CHECK(PinnConfig::ensemble_member().epochs == 5000);
  CHECK(PinnConfig::bayesian_dropout().epochs == 10000);
  CHECK(PinnConfig::limited_data().epochs == 2000);
}

TEST_CASE("training is deterministic, logs every epoch and round-trips through disk") {
  const ReleaseCurve curve = reference_curve(FilmType::Flat);
  PinnConfig c = small_config(60, 200);
  c.dropout_keep = 0.9;
  const TrainedPinn a = train(c, curve);
  const TrainedPinn b = train(c, curve);
  REQUIRE(a.loss_history.size() == 60);
  CHECK(a.params.values() == b.params.values());
  for (std::size_t e = 0; e < a.loss_history.size(); ++e) {
    CHECK(a.loss_history[e].total == b.loss_history[e].total);
    CHECK(a.loss_history[e].total >= 0.0);
  }
  CHECK(a.loss_history.back().total < a.loss_history.front().total);

  const auto dir = std::filesystem::temp_directory_path() / "releaseflow_test_pinn_model";
  std::filesystem::remove_all(dir);
  save_trained(dir, a);
  const TrainedPinn back = load_trained(dir);
  CHECK(back.params.values() == a.params.values());
  CHECK(back.d_value == a.d_value);
  CHECK(back.config.dropout_keep == 0.9);
  CHECK(back.config.seed == c.seed);
  REQUIRE(back.loss_history.size() == a.loss_history.size());
  CHECK(back.loss_history[17].pde == a.loss_history[17].pde);
  std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite loss aborts with the epoch") {
  PinnConfig c = small_config(50, 50);
  c.learning_rate = 1e300;
  try {
    train(c, reference_curve(FilmType::Flat));
    FAIL("expected divergence");
  } catch (const NonFiniteLossError& e) {
    CHECK(e.epoch() > 0);
    CHECK(e.kind() == ErrorKind::NonFiniteLoss);
  }
}

TEST_CASE("release error shrinks as training proceeds (logged strides)") {
  const ReleaseCurve curve = synthesize_fickian(0.01, 15, 1.0);
  std::vector<double> errors;
  for (int epochs = 500; epochs <= 2000; epochs += 500) {
    const TrainedPinn t = train(small_config(epochs, 500), curve);
    errors.push_back(metrics(curve.fractions, release_fractions(t.params, curve.times)).rmse);
  }
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] <= 1.1 * errors[i - 1]);
  CHECK(errors.back() < errors.front());
}

TEST_CASE("learnable diffusivity moves from 0.05 toward the truth 0.01") {
  const ReleaseCurve curve = synthesize_fickian(0.01, 15, 1.0);
  PinnConfig c = small_config(10000, 1000);
  c.d_mode = DiffusivityMode::Learnable;
  c.d = 0.05;
  const TrainedPinn t = train(c, curve);
  MESSAGE("recovered d = " << t.d_value);
  CHECK(std::abs(t.d_value - 0.01) <= 0.25 * 0.01);
}
