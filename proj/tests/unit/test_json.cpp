#include <doctest.h>

#include "releaseflow/error.hpp"
#include "releaseflow/json_io.hpp"

using namespace releaseflow;

namespace {

// Serialize, parse back from text, and re-serialize.
template <typename T>
T round_trip(const T& value) {
  const json j = value;
  return json::parse(j.dump()).get<T>();
}

}  // namespace

TEST_CASE("pinn config round trip") {
  PinnConfig c;
  c.arch.hidden_layers = 3;
  c.arch.neurons_per_layer = 7;
  c.learning_rate = 2.5e-4;
  c.epochs = 17;
  c.n_collocation = 33;
  c.d_mode = DiffusivityMode::Learnable;
  c.d = 0.123456789012345;
  c.weights = {1.0, 2.0, 0.0, 0.5};
  c.quadrature_points = 51;
  c.boundary_points = 0;
  c.dropout_keep = 0.85;
  c.seed = 18446744073709551615ull;
  const PinnConfig b = round_trip(c);
  CHECK(b.arch == c.arch);
  CHECK(b.learning_rate == c.learning_rate);
  CHECK(b.epochs == c.epochs);
  CHECK(b.n_collocation == c.n_collocation);
  CHECK(b.d_mode == c.d_mode);
  CHECK(b.d == c.d);
  CHECK(b.weights.pde == 2.0);
  CHECK(b.weights.bc == 0.5);
  CHECK(b.quadrature_points == 51);
  CHECK(b.boundary_points == 0);
  CHECK(b.dropout_keep == 0.85);
  CHECK(b.seed == c.seed);
}

TEST_CASE("hmc config round trip") {
  HmcConfig c;
  c.n_samples = 3;
  c.burn_in = 4;
  c.leapfrog_steps = 5;
  c.step_size = 1e-5;
  c.noise_std_boundary = 0.3;
  c.d_prior_median = 0.02;
  c.seed = 99;
  const HmcConfig b = round_trip(c);
  CHECK(b.n_samples == 3);
  CHECK(b.burn_in == 4);
  CHECK(b.leapfrog_steps == 5);
  CHECK(b.step_size == 1e-5);
  CHECK(b.noise_std_boundary == 0.3);
  CHECK(b.d_prior_median == 0.02);
  CHECK(b.seed == 99);
}

TEST_CASE("curves, models and bands round trip") {
  const ReleaseCurve c = reference_curve(FilmType::Wrinkled1D);
  const ReleaseCurve cb = round_trip(c);
  CHECK(cb.film == c.film);
  CHECK(cb.times == c.times);
  CHECK(cb.fractions == c.fractions);

  const FitResult f = fit(ModelKind::Peppas, c);
  const FitResult fb = round_trip(f);
  CHECK(fb.model.kind == ModelKind::Peppas);
  CHECK(fb.model.params == f.model.params);
  CHECK(fb.rmse == f.rmse);

  const UncertaintyBand band =
      band_from_samples({0.0, 0.5}, {{0.1, 0.2}, {0.3, 0.4}}, BandMethod::McDropout);
  const UncertaintyBand bb = round_trip(band);
  CHECK(bb.mean == band.mean);
  CHECK(bb.std == band.std);
  CHECK(bb.n_samples == 2);
  CHECK(bb.method == BandMethod::McDropout);
}

TEST_CASE("reports round trip losslessly") {
  ComparisonReport cr;
  cr.films.push_back({FilmType::Flat, {{"fick", 0.1, 0.2}, {"pinn", 1.0 / 3.0, 0.5}}, "fick", 0.01});
  const ComparisonReport crb = round_trip(cr);
  REQUIRE(crb.films.size() == 1);
  CHECK(crb.films[0].scores[1].mae == 1.0 / 3.0);
  CHECK(crb.films[0].winner == "fick");
  CHECK(crb.films[0].pinn_d == 0.01);
  CHECK(json(crb).dump() == json(cr).dump());

  LimitedDataReport lr;
  lr.threshold = 0.05;
  lr.rows = {{FilmType::Crumpled2D, "pinn", 5, 0.04}, {FilmType::Crumpled2D, "fick", 5, std::nullopt}};
  lr.minimal = {{FilmType::Crumpled2D, "pinn", 5}, {FilmType::Crumpled2D, "fick", std::nullopt}};
  const json lj = lr;
  CHECK(lj.dump().find("null") != std::string::npos);
  const LimitedDataReport lrb = round_trip(lr);
  CHECK(lrb.rows[1].rmse == std::nullopt);
  CHECK(lrb.minimal_n(FilmType::Crumpled2D, "pinn") == 5);
  CHECK(lrb.minimal_n(FilmType::Crumpled2D, "fick") == std::nullopt);
  CHECK(json(lrb).dump() == lj.dump());

  NoiseReport nr;
  NoiseFilmResult f;
  f.film = FilmType::Wrinkled1D;
  f.ensemble = band_from_samples({0.0, 1.0}, {{0.1, 0.9}, {0.2, 0.8}}, BandMethod::Ensemble);
  f.bpinn = band_from_samples({0.0, 1.0}, {{0.1, 0.9}, {0.1, 0.9}}, BandMethod::McDropout);
  f.ensemble_metrics = {0.01, 0.02};
  f.bpinn_metrics = {0.03, 0.04};
  f.classical = {{"fick", 0.5, 0.6}};
  nr.films.push_back(f);
  const NoiseReport nrb = round_trip(nr);
  CHECK(json(nrb).dump() == json(nr).dump());
  CHECK(nrb.films[0].bpinn.method == BandMethod::McDropout);
  CHECK(nrb.films[0].classical[0].rmse == 0.6);
}

TEST_CASE("malformed input raises json errors") {
  CHECK_THROWS(json::parse(R"({"film":"flat","times":[0],"fractions":"x"})").get<ReleaseCurve>());
  CHECK_THROWS(json::parse(R"({"kind":"weibull","params":[]})").get<ClassicalModel>());
}

TEST_CASE("posterior summary") {
  PosteriorSamples s;
  s.arch.hidden_layers = 0;
  s.params = Eigen::MatrixXd::Zero(s.arch.param_count(), 3);
  s.d = {0.01, 0.02, 0.03};
  s.acceptance_rate = 0.75;
  const json j = posterior_summary(s);
  CHECK(j["n_samples"] == 3);
  CHECK(j["d_mean"].get<double>() == doctest::Approx(0.02));
  CHECK(j["d_median"].get<double>() == doctest::Approx(0.02));
  CHECK(j["acceptance_rate"].get<double>() == 0.75);
}

TEST_CASE("parameter dump has one entry per layer") {
  const nn::MlpParams p = nn::init_params(nn::MlpArchitecture{}, 1);
  const json j = nn::params_to_json(p);
  CHECK(j["layers"].size() == 6);
  CHECK(j["layers"][0]["weights"].size() == 20);
  CHECK(j["param_count"] == 1761);
}
