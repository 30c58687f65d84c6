#include "releaseflow/json_io.hpp"

#include "releaseflow/error.hpp"

namespace releaseflow {

namespace nn {

void to_json(json& j, const MlpArchitecture& a) {
  j = json{{"input_dim", a.input_dim},
           {"hidden_layers", a.hidden_layers},
           {"neurons_per_layer", a.neurons_per_layer},
           {"output_dim", a.output_dim},
           {"activation", "tanh"}};
}

void from_json(const json& j, MlpArchitecture& a) {
  a.input_dim = j.value("input_dim", 2);
  a.hidden_layers = j.value("hidden_layers", 5);
  a.neurons_per_layer = j.value("neurons_per_layer", 20);
  a.output_dim = j.value("output_dim", 1);
  a.validate();
}

json params_to_json(const MlpParams& params) {
  json layers = json::array();
  const MlpArchitecture& arch = params.arch();
  for (int l = 0; l < arch.layer_count(); ++l) {
    const auto w = params.weight(l);
    json rows = json::array();
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      rows.push_back(std::vector<double>(w.row(i).begin(), w.row(i).end()));
    }
    const auto b = params.bias(l);
    layers.push_back({{"weights", rows}, {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  return json{{"architecture", arch}, {"param_count", arch.param_count()}, {"layers", layers}};
}

}  // namespace nn

void to_json(json& j, const ClassicalModel& m) {
  j = json{{"kind", to_string(m.kind)}, {"params", m.params}};
}

void from_json(const json& j, ClassicalModel& m) {
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.params = j.at("params").get<std::vector<double>>();
}

void to_json(json& j, const FitResult& r) {
  j = json{{"kind", to_string(r.model.kind)}, {"params", r.model.params},
           {"mae", r.mae},  {"rmse", r.rmse},
           {"converged", r.converged}, {"iterations", r.iterations}};
}

void from_json(const json& j, FitResult& r) {
  r.model.kind = parse_model_kind(j.at("kind").get<std::string>());
  r.model.params = j.at("params").get<std::vector<double>>();
  r.mae = j.at("mae").get<double>();
  r.rmse = j.at("rmse").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
}

void to_json(json& j, const LossWeights& w) {
  j = json{{"data", w.data}, {"pde", w.pde}, {"ic", w.ic}, {"bc", w.bc}};
}

void from_json(const json& j, LossWeights& w) {
  w.data = j.value("data", 1.0);
  w.pde = j.value("pde", 1.0);
  w.ic = j.value("ic", 1.0);
  w.bc = j.value("bc", 1.0);
}

void to_json(json& j, const PinnConfig& c) {
  j = json{{"arch", c.arch},
           {"learning_rate", c.learning_rate},
           {"epochs", c.epochs},
           {"n_collocation", c.n_collocation},
           {"d_mode", c.d_mode == DiffusivityMode::Fixed ? "fixed" : "learnable"},
           {"d", c.d},
           {"loss_weights", c.weights},
           {"quadrature_points", c.quadrature_points},
           {"boundary_points", c.boundary_points},
           {"dropout_keep", c.dropout_keep},
           {"seed", c.seed}};
}

void from_json(const json& j, PinnConfig& c) {
  c = PinnConfig{};
  if (j.contains("arch")) c.arch = j.at("arch").get<nn::MlpArchitecture>();
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.n_collocation = j.value("n_collocation", c.n_collocation);
  const std::string mode = j.value("d_mode", std::string("fixed"));
  if (mode == "fixed") {
    c.d_mode = DiffusivityMode::Fixed;
  } else if (mode == "learnable") {
    c.d_mode = DiffusivityMode::Learnable;
  } else {
    fail(ErrorKind::Parse, "unknown d_mode '" + mode + "'");
  }
  c.d = j.value("d", c.d);
  if (j.contains("loss_weights")) c.weights = j.at("loss_weights").get<LossWeights>();
  c.quadrature_points = j.value("quadrature_points", c.quadrature_points);
  c.boundary_points = j.value("boundary_points", c.boundary_points);
  c.dropout_keep = j.value("dropout_keep", c.dropout_keep);
  c.seed = j.value("seed", c.seed);
}

void to_json(json& j, const LossBreakdown& l) {
  j = json{{"total", l.total}, {"data", l.data}, {"pde", l.pde}, {"ic", l.ic}, {"bc", l.bc}};
}

void to_json(json& j, const ReleaseCurve& c) {
  j = json{{"film", to_string(c.film)}, {"times", c.times}, {"fractions", c.fractions}};
  if (c.noise_sigma) j["noise_sigma"] = *c.noise_sigma;
}

void from_json(const json& j, ReleaseCurve& c) {
  std::optional<double> sigma;
  if (j.contains("noise_sigma")) sigma = j.at("noise_sigma").get<double>();
  c = make_curve(parse_film(j.at("film").get<std::string>()),
                 j.at("times").get<std::vector<double>>(),
                 j.at("fractions").get<std::vector<double>>(), sigma);
}

void to_json(json& j, const ErrorMetrics& m) { j = json{{"mae", m.mae}, {"rmse", m.rmse}}; }

void from_json(const json& j, ErrorMetrics& m) {
  m.mae = j.at("mae").get<double>();
  m.rmse = j.at("rmse").get<double>();
}

namespace {

BandMethod parse_band_method(const std::string& s) {
  for (BandMethod m : {BandMethod::Ensemble, BandMethod::McDropout, BandMethod::Hmc}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorKind::Parse, "unknown band method '" + s + "'");
}

}  // namespace

void to_json(json& j, const UncertaintyBand& b) {
  j = json{{"method", to_string(b.method)}, {"n_samples", b.n_samples}, {"times", b.times},
           {"mean", b.mean}, {"std", b.std}};
}

void from_json(const json& j, UncertaintyBand& b) {
  b.method = parse_band_method(j.at("method").get<std::string>());
  b.n_samples = j.at("n_samples").get<int>();
  b.times = j.at("times").get<std::vector<double>>();
  b.mean = j.at("mean").get<std::vector<double>>();
  b.std = j.at("std").get<std::vector<double>>();
}

void to_json(json& j, const HmcConfig& c) {
  j = json{{"n_samples", c.n_samples},
           {"burn_in", c.burn_in},
           {"leapfrog_steps", c.leapfrog_steps},
           {"step_size", c.step_size},
           {"prior_std_weights", c.prior_std_weights},
           {"noise_std_data", c.noise_std_data},
           {"noise_std_pde", c.noise_std_pde},
           {"noise_std_boundary", c.noise_std_boundary},
           {"d_prior_median", c.d_prior_median},
           {"d_prior_log_std", c.d_prior_log_std},
           {"quadrature_points", c.quadrature_points},
           {"boundary_points", c.boundary_points},
           {"seed", c.seed}};
}

void from_json(const json& j, HmcConfig& c) {
  c = HmcConfig{};
  c.n_samples = j.value("n_samples", c.n_samples);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.leapfrog_steps = j.value("leapfrog_steps", c.leapfrog_steps);
  c.step_size = j.value("step_size", c.step_size);
  c.prior_std_weights = j.value("prior_std_weights", c.prior_std_weights);
  c.noise_std_data = j.value("noise_std_data", c.noise_std_data);
  c.noise_std_pde = j.value("noise_std_pde", c.noise_std_pde);
  c.noise_std_boundary = j.value("noise_std_boundary", c.noise_std_boundary);
  c.d_prior_median = j.value("d_prior_median", c.d_prior_median);
  c.d_prior_log_std = j.value("d_prior_log_std", c.d_prior_log_std);
  c.quadrature_points = j.value("quadrature_points", c.quadrature_points);
  c.boundary_points = j.value("boundary_points", c.boundary_points);
  c.seed = j.value("seed", c.seed);
}

json posterior_summary(const PosteriorSamples& samples) {
  double mean = 0.0;
  for (double d : samples.d) mean += d;
  mean /= static_cast<double>(std::max<std::size_t>(samples.size(), 1));
  return json{{"n_samples", samples.size()},
              {"acceptance_rate", samples.acceptance_rate},
              {"divergences", samples.divergences},
              {"d_mean", mean},
              {"d_q025", d_quantile(samples, 0.025)},
              {"d_median", d_quantile(samples, 0.5)},
              {"d_q975", d_quantile(samples, 0.975)}};
}

void to_json(json& j, const ModelScore& s) {
  j = json{{"model", s.model}, {"mae", s.mae}, {"rmse", s.rmse}};
}

void from_json(const json& j, ModelScore& s) {
  s.model = j.at("model").get<std::string>();
  s.mae = j.at("mae").get<double>();
  s.rmse = j.at("rmse").get<double>();
}

void to_json(json& j, const ComparisonReport& r) {
  json films = json::array();
  for (const auto& f : r.films) {
    films.push_back({{"film", to_string(f.film)}, {"scores", f.scores}, {"winner", f.winner},
                     {"pinn_d", f.pinn_d}});
  }
  j = json{{"films", films}};
}

void from_json(const json& j, ComparisonReport& r) {
  r.films.clear();
  for (const auto& f : j.at("films")) {
    r.films.push_back({parse_film(f.at("film").get<std::string>()),
                       f.at("scores").get<std::vector<ModelScore>>(),
                       f.at("winner").get<std::string>(), f.at("pinn_d").get<double>()});
  }
}

void to_json(json& j, const NoiseReport& r) {
  json films = json::array();
  for (const auto& f : r.films) {
    films.push_back({{"film", to_string(f.film)},
                     {"ensemble", f.ensemble},
                     {"bpinn", f.bpinn},
                     {"ensemble_metrics", f.ensemble_metrics},
                     {"bpinn_metrics", f.bpinn_metrics},
                     {"classical", f.classical}});
  }
  j = json{{"films", films}};
}

void from_json(const json& j, NoiseReport& r) {
  r.films.clear();
  for (const auto& f : j.at("films")) {
    NoiseFilmResult x;
    x.film = parse_film(f.at("film").get<std::string>());
    x.ensemble = f.at("ensemble").get<UncertaintyBand>();
    x.bpinn = f.at("bpinn").get<UncertaintyBand>();
    x.ensemble_metrics = f.at("ensemble_metrics").get<ErrorMetrics>();
    x.bpinn_metrics = f.at("bpinn_metrics").get<ErrorMetrics>();
    x.classical = f.at("classical").get<std::vector<ModelScore>>();
    r.films.push_back(std::move(x));
  }
}

void to_json(json& j, const LimitedDataReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"film", to_string(row.film)},
                    {"model", row.model},
                    {"n", row.n},
                    {"rmse", row.rmse ? json(*row.rmse) : json(nullptr)}});
  }
  json minimal = json::array();
  for (const auto& m : r.minimal) {
    minimal.push_back({{"film", to_string(m.film)},
                       {"model", m.model},
                       {"minimal_n", m.n ? json(*m.n) : json(nullptr)}});
  }
  j = json{{"threshold", r.threshold}, {"rows", rows}, {"minimal", minimal}};
}

void from_json(const json& j, LimitedDataReport& r) {
  r.threshold = j.at("threshold").get<double>();
  r.rows.clear();
  r.minimal.clear();
  for (const auto& row : j.at("rows")) {
    LimitedRow x;
    x.film = parse_film(row.at("film").get<std::string>());
    x.model = row.at("model").get<std::string>();
    x.n = row.at("n").get<int>();
    if (!row.at("rmse").is_null()) x.rmse = row.at("rmse").get<double>();
    r.rows.push_back(std::move(x));
  }
  for (const auto& m : j.at("minimal")) {
    MinimalN x;
    x.film = parse_film(m.at("film").get<std::string>());
    x.model = m.at("model").get<std::string>();
    if (!m.at("minimal_n").is_null()) x.n = m.at("minimal_n").get<int>();
    r.minimal.push_back(std::move(x));
  }
}

}  // namespace releaseflow
