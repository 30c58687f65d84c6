#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "releaseflow/bench.hpp"
#include "releaseflow/classical.hpp"
#include "releaseflow/dataset.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/hmc.hpp"
#include "releaseflow/json_io.hpp"
#include "releaseflow/metrics.hpp"
#include "releaseflow/nn.hpp"
#include "releaseflow/pde_oracle.hpp"
#include "releaseflow/pinn.hpp"
#include "releaseflow/uq.hpp"
#include "releaseflow/version.hpp"

namespace py = pybind11;
using namespace releaseflow;

namespace {

// Reports cross the boundary as JSON text; the Python side decodes them.
template <class T>
std::string dump(const T& value) {
  return json(value).dump();
}

template <class T>
T parse(const std::string& text) {
  return json::parse(text).get<T>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = kVersion;

  static py::exception<Error> base_error(m, "ReleaseFlowError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(base_error)(e.what());
      exc.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(base_error.ptr(), exc.ptr());
    }
  });

  // dataset
  py::enum_<FilmType>(m, "FilmType")
      .value("FLAT", FilmType::Flat)
      .value("WRINKLED", FilmType::Wrinkled1D)
      .value("CRUMPLED", FilmType::Crumpled2D)
      .def("__str__", [](FilmType f) { return std::string(to_string(f)); });
  m.def("parse_film", [](const std::string& s) { return parse_film(s); });

  py::class_<ReleaseCurve>(m, "ReleaseCurve")
      .def(py::init([](FilmType film, std::vector<double> times, std::vector<double> fractions,
                       std::optional<double> noise_sigma) {
             return make_curve(film, std::move(times), std::move(fractions), noise_sigma);
           }),
           py::arg("film"), py::arg("times"), py::arg("fractions"),
           py::arg("noise_sigma") = py::none())
      .def_readonly("film", &ReleaseCurve::film)
      .def_readonly("times", &ReleaseCurve::times)
      .def_readonly("fractions", &ReleaseCurve::fractions)
      .def_readonly("noise_sigma", &ReleaseCurve::noise_sigma)
      .def("__len__", &ReleaseCurve::size)
      .def("to_json", [](const ReleaseCurve& c) { return dump(c); });

  m.def("load_curve", &load_curve, py::arg("path"), py::arg("film") = py::none());
  m.def("save_curve", &save_curve, py::arg("path"), py::arg("curve"));
  m.def("reference_curve", &reference_curve, py::arg("film"));
  m.def("canonical_times", &canonical_times);
  m.def("fick_series_release", &fick_series_release, py::arg("d"), py::arg("t"));
  m.def("synthesize_fickian", &synthesize_fickian, py::arg("d"), py::arg("n_points"),
        py::arg("t_max") = 1.0);
  m.def(
      "synthesize_fickian_at",
      [](double d, std::vector<double> times, FilmType film) {
        return synthesize_fickian_at(d, times, film);
      },
      py::arg("d"), py::arg("times"), py::arg("film") = FilmType::Flat);
  m.def("add_gaussian_noise", &add_gaussian_noise, py::arg("curve"), py::arg("sigma"),
        py::arg("seed"));
  m.def(
      "split_first_n",
      [](const ReleaseCurve& c, std::size_t n) {
        SplitCurve s = split_first_n(c, n);
        return py::make_tuple(s.train, s.test);
      },
      py::arg("curve"), py::arg("n"));

  // classical
  py::enum_<ModelKind>(m, "ModelKind")
      .value("FICK", ModelKind::FickSeries)
      .value("HIGUCHI", ModelKind::Higuchi)
      .value("PEPPAS", ModelKind::Peppas)
      .def("__str__", [](ModelKind k) { return std::string(to_string(k)); });

  py::class_<ClassicalModel>(m, "ClassicalModel")
      .def(py::init([](ModelKind kind, std::vector<double> params) {
             ClassicalModel model{kind, std::move(params)};
             validate_model(model);
             return model;
           }),
           py::arg("kind"), py::arg("params"))
      .def_readonly("kind", &ClassicalModel::kind)
      .def_readonly("params", &ClassicalModel::params)
      .def("__call__", [](const ClassicalModel& model, double t) { return predict(model, t); });

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("model", &FitResult::model)
      .def_readonly("mae", &FitResult::mae)
      .def_readonly("rmse", &FitResult::rmse)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("iterations", &FitResult::iterations);

  m.def(
      "fit", [](ModelKind kind, const ReleaseCurve& curve) { return fit(kind, curve); },
      py::arg("kind"), py::arg("curve"));
  m.def(
      "metrics",
      [](const std::vector<double>& y, const std::vector<double>& yhat) {
        const ErrorMetrics e = metrics(y, yhat);
        return py::make_tuple(e.mae, e.rmse);
      },
      py::arg("y_true"), py::arg("y_pred"));

  // pinn
  py::class_<LossWeights>(m, "LossWeights")
      .def(py::init<>())
      .def_readwrite("data", &LossWeights::data)
      .def_readwrite("pde", &LossWeights::pde)
      .def_readwrite("ic", &LossWeights::ic)
      .def_readwrite("bc", &LossWeights::bc);

  py::class_<PinnConfig>(m, "PinnConfig")
      .def(py::init<>())
      .def_readwrite("learning_rate", &PinnConfig::learning_rate)
      .def_readwrite("epochs", &PinnConfig::epochs)
      .def_readwrite("n_collocation", &PinnConfig::n_collocation)
      .def_readwrite("d", &PinnConfig::d)
      .def_property(
          "learn_d", [](const PinnConfig& c) { return c.d_mode == DiffusivityMode::Learnable; },
          [](PinnConfig& c, bool on) {
            c.d_mode = on ? DiffusivityMode::Learnable : DiffusivityMode::Fixed;
          })
      .def_readwrite("weights", &PinnConfig::weights)
      .def_readwrite("quadrature_points", &PinnConfig::quadrature_points)
      .def_readwrite("boundary_points", &PinnConfig::boundary_points)
      .def_readwrite("dropout_keep", &PinnConfig::dropout_keep)
      .def_readwrite("seed", &PinnConfig::seed)
      .def_property(
          "hidden_layers", [](const PinnConfig& c) { return c.arch.hidden_layers; },
          [](PinnConfig& c, int v) { c.arch.hidden_layers = v; })
      .def_property(
          "neurons_per_layer", [](const PinnConfig& c) { return c.arch.neurons_per_layer; },
          [](PinnConfig& c, int v) { c.arch.neurons_per_layer = v; })
      .def("validate", &PinnConfig::validate)
      .def("to_json", [](const PinnConfig& c) { return dump(c); })
      .def_static("from_json", [](const std::string& s) { return parse<PinnConfig>(s); })
      .def_static("classical_comparison", &PinnConfig::classical_comparison)
      .def_static("ensemble_member", &PinnConfig::ensemble_member)
      .def_static("bayesian_dropout", &PinnConfig::bayesian_dropout)
      .def_static("limited_data", &PinnConfig::limited_data);

  py::class_<TrainedPinn>(m, "TrainedPinn")
      .def_readonly("d", &TrainedPinn::d_value)
      .def_readonly("config", &TrainedPinn::config)
      .def_property_readonly("params", [](const TrainedPinn& t) { return t.params.flatten(); })
      .def_property_readonly("loss_history",
                             [](const TrainedPinn& t) {
                               py::list out;
                               for (const LossBreakdown& l : t.loss_history) {
                                 py::dict row;
                                 row["total"] = l.total;
                                 row["data"] = l.data;
                                 row["pde"] = l.pde;
                                 row["ic"] = l.ic;
                                 row["bc"] = l.bc;
                                 out.append(row);
                               }
                               return out;
                             })
      .def(
          "field",
          [](const TrainedPinn& t, double x, double time) { return nn::forward(t.params, x, time); },
          py::arg("x"), py::arg("t"))
      .def(
          "release",
          [](const TrainedPinn& t, const std::vector<double>& times) {
            return release_fractions(t.params, times, t.config.quadrature_points);
          },
          py::arg("times"))
      .def("save", [](const TrainedPinn& t, const std::filesystem::path& dir) {
        save_trained(dir, t);
      });

  m.def(
      "train",
      [](const PinnConfig& cfg, const ReleaseCurve& curve,
         std::function<void(int, double)> on_epoch) {
        TrainOptions opts;
        if (on_epoch) {
          opts.on_epoch = [&](int epoch, const LossBreakdown& l) {
            py::gil_scoped_acquire gil;
            on_epoch(epoch, l.total);
          };
        }
        py::gil_scoped_release release;
        return train(cfg, curve, opts);
      },
      py::arg("config"), py::arg("curve"), py::arg("on_epoch") = nullptr);
  m.def("load_trained", &load_trained, py::arg("dir"));

  // uq
  py::enum_<BandMethod>(m, "BandMethod")
      .value("ENSEMBLE", BandMethod::Ensemble)
      .value("MC_DROPOUT", BandMethod::McDropout)
      .value("HMC", BandMethod::Hmc);

  py::class_<UncertaintyBand>(m, "UncertaintyBand")
      .def_readonly("times", &UncertaintyBand::times)
      .def_readonly("mean", &UncertaintyBand::mean)
      .def_readonly("std", &UncertaintyBand::std)
      .def_readonly("n_samples", &UncertaintyBand::n_samples)
      .def_readonly("method", &UncertaintyBand::method)
      .def("mean_std", &UncertaintyBand::mean_std);

  m.def(
      "band_from_samples",
      [](std::vector<double> times, const std::vector<std::vector<double>>& samples,
         BandMethod method) { return band_from_samples(std::move(times), samples, method); },
      py::arg("times"), py::arg("samples"), py::arg("method") = BandMethod::Ensemble);
  m.def(
      "train_ensemble",
      [](const PinnConfig& base, const ReleaseCurve& curve, int members, double sigma, int jobs) {
        EnsembleOptions opts;
        opts.jobs = jobs;
        py::gil_scoped_release release;
        return train_ensemble(base, curve, members, sigma, opts);
      },
      py::arg("config"), py::arg("curve"), py::arg("members"), py::arg("sigma"),
      py::arg("jobs") = 1);
  m.def(
      "mc_dropout_band",
      [](const TrainedPinn& trained, int passes, std::uint64_t seed) {
        return mc_dropout_band(trained, passes, seed);
      },
      py::arg("trained"), py::arg("passes"), py::arg("seed") = 0);

  // hmc
  py::class_<HmcConfig>(m, "HmcConfig")
      .def(py::init<>())
      .def_readwrite("n_samples", &HmcConfig::n_samples)
      .def_readwrite("burn_in", &HmcConfig::burn_in)
      .def_readwrite("leapfrog_steps", &HmcConfig::leapfrog_steps)
      .def_readwrite("step_size", &HmcConfig::step_size)
      .def_readwrite("prior_std_weights", &HmcConfig::prior_std_weights)
      .def_readwrite("noise_std_data", &HmcConfig::noise_std_data)
      .def_readwrite("noise_std_pde", &HmcConfig::noise_std_pde)
      .def_readwrite("noise_std_boundary", &HmcConfig::noise_std_boundary)
      .def_readwrite("d_prior_median", &HmcConfig::d_prior_median)
      .def_readwrite("d_prior_log_std", &HmcConfig::d_prior_log_std)
      .def_readwrite("quadrature_points", &HmcConfig::quadrature_points)
      .def_readwrite("boundary_points", &HmcConfig::boundary_points)
      .def_readwrite("seed", &HmcConfig::seed)
      .def("validate", &HmcConfig::validate);

  py::class_<PosteriorSamples>(m, "PosteriorSamples")
      .def_readonly("d", &PosteriorSamples::d)
      .def_readonly("acceptance_rate", &PosteriorSamples::acceptance_rate)
      .def_readonly("divergences", &PosteriorSamples::divergences)
      .def("__len__", &PosteriorSamples::size)
      .def("d_quantile", [](const PosteriorSamples& s, double q) { return d_quantile(s, q); })
      .def(
          "band",
          [](const PosteriorSamples& s, const std::vector<double>& times) {
            return posterior_band(s, times);
          },
          py::arg("times"))
      .def("summary", [](const PosteriorSamples& s) { return posterior_summary(s).dump(); });

  m.def(
      "hmc_sample",
      [](const ReleaseCurve& curve, const TrainedPinn& start, const HmcConfig& cfg,
         int n_collocation) {
        py::gil_scoped_release release;
        const CollocationSet colloc = sample_lhs(static_cast<std::size_t>(n_collocation), cfg.seed);
        return hmc_sample(curve, colloc, cfg, start.params, start.d_value);
      },
      py::arg("curve"), py::arg("start"), py::arg("config"), py::arg("n_collocation") = 1000);

  // bench
  m.def(
      "oracle_release",
      [](double d, const std::vector<double>& times, int nx, int nt) {
        const PdeOracleSolution s = solve_pde_oracle(d, nx, nt);
        std::vector<double> out;
        out.reserve(times.size());
        for (double t : times) out.push_back(s.release_fraction(t));
        return out;
      },
      py::arg("d"), py::arg("times"), py::arg("nx") = 201, py::arg("nt") = 2001);
  m.def("shipped_curves", &shipped_curves);
  m.def(
      "run_comparison_json",
      [](const std::vector<ReleaseCurve>& curves, const PinnConfig& cfg, int jobs) {
        BenchOptions opts;
        opts.jobs = jobs;
        py::gil_scoped_release release;
        return dump(run_comparison(curves, cfg, opts));
      },
      py::arg("curves"), py::arg("config"), py::arg("jobs") = 1);
  m.def(
      "run_limited_data_json",
      [](const std::vector<ReleaseCurve>& curves, const PinnConfig& cfg, std::vector<int> ns,
         double threshold, int jobs) {
        LimitedDataConfig lcfg;
        lcfg.pinn = cfg;
        if (!ns.empty()) lcfg.ns = std::move(ns);
        lcfg.threshold = threshold;
        lcfg.films.clear();
        for (const ReleaseCurve& c : curves) lcfg.films.push_back(c.film);
        BenchOptions opts;
        opts.jobs = jobs;
        py::gil_scoped_release release;
        return dump(run_limited_data(curves, lcfg, opts));
      },
      py::arg("curves"), py::arg("config"), py::arg("ns") = std::vector<int>{},
      py::arg("threshold") = 0.05, py::arg("jobs") = 1);
}
