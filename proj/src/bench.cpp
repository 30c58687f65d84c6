#include "releaseflow/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>

#include "format.hpp"
#include "parallel.hpp"
#include "releaseflow/error.hpp"

namespace releaseflow {

namespace {

using detail::format_value;

std::string film_label(FilmType f) { return std::string(to_string(f)); }

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

void report(const BenchOptions& options, std::mutex& mu, const std::string& message) {
  if (!options.progress) return;
  std::lock_guard lock(mu);
  options.progress(message);
}

ModelScore score(const std::string& model, const std::vector<double>& truth,
                 const std::vector<double>& pred) {
  const ErrorMetrics m = metrics(truth, pred);
  return {model, m.mae, m.rmse};
}

std::vector<double> predict_all(const ClassicalModel& model, const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(predict(model, t));
  return out;
}

// Sorted union of two time grids (exact duplicates merged).
std::vector<double> merge_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

std::vector<double> band_at(const UncertaintyBand& band, const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) {
    const auto it = std::lower_bound(band.times.begin(), band.times.end(), t);
    require(it != band.times.end() && *it == t, "band grid does not contain a curve time");
    out.push_back(band.mean[static_cast<std::size_t>(it - band.times.begin())]);
  }
  return out;
}

template <typename Fn>
auto with_film_context(FilmType film, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NonFiniteLossError& e) {
    throw NonFiniteLossError(e.epoch(), film_label(film) + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), film_label(film) + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> report_models() {
  std::vector<std::string> out;
  for (ModelKind k : kAllModelKinds) out.emplace_back(to_string(k));
  out.emplace_back(kPinnLabel);
  return out;
}

std::vector<ReleaseCurve> order_by_film(const std::vector<ReleaseCurve>& curves) {
  std::vector<ReleaseCurve> out;
  for (FilmType f : kAllFilms) {
    const auto it = std::find_if(curves.begin(), curves.end(),
                                 [f](const ReleaseCurve& c) { return c.film == f; });
    if (it == curves.end()) fail(ErrorKind::MissingFilm, "no curve for film '" + film_label(f) + "'");
    out.push_back(*it);
  }
  return out;
}

std::vector<ReleaseCurve> shipped_curves() {
  std::vector<ReleaseCurve> out;
  for (FilmType f : kAllFilms) out.push_back(reference_curve(f));
  return out;
}

std::vector<ReleaseCurve> load_curve_dir(const std::filesystem::path& dir) {
  std::vector<ReleaseCurve> out;
  for (FilmType f : kAllFilms) {
    const auto path = dir / (film_label(f) + ".csv");
    if (!std::filesystem::exists(path)) {
      fail(ErrorKind::MissingFilm,
           "missing data for film '" + film_label(f) + "' (expected " + path.string() + ")");
    }
    out.push_back(load_curve(path, f));
  }
  return out;
}

const FilmComparison& ComparisonReport::film(FilmType f) const {
  for (const auto& fc : films) {
    if (fc.film == f) return fc;
  }
  fail(ErrorKind::MissingFilm, "report has no film '" + film_label(f) + "'");
}

std::string pick_winner(const std::vector<ModelScore>& scores) {
  require(!scores.empty(), "no scores to rank");
  const ModelScore* best = nullptr;
  for (const auto& s : scores) {
    if (best == nullptr) {
      best = &s;
      continue;
    }
    const bool s_pinn = s.model == kPinnLabel;
    const bool best_pinn = best->model == kPinnLabel;
    if (s.rmse < best->rmse || (s.rmse == best->rmse && best_pinn && !s_pinn)) best = &s;
  }
  return best->model;
}

ComparisonReport run_comparison(const std::vector<ReleaseCurve>& curves,
                                const PinnConfig& pinn_cfg, const BenchOptions& options) {
  const std::vector<ReleaseCurve> ordered = order_by_film(curves);
  pinn_cfg.validate();
  ComparisonReport out;
  out.films.resize(ordered.size());
  std::mutex mu;
  detail::parallel_for(static_cast<int>(ordered.size()), options.jobs, [&](int i) {
    const ReleaseCurve& curve = ordered[static_cast<std::size_t>(i)];
    FilmComparison& fc = out.films[static_cast<std::size_t>(i)];
    fc.film = curve.film;
    with_film_context(curve.film, [&] {
      for (ModelKind k : kAllModelKinds) {
        const FitResult r = fit(k, curve);
        fc.scores.push_back({std::string(to_string(k)), r.mae, r.rmse});
      }
      const TrainedPinn pinn = train(pinn_cfg, curve);
      fc.scores.push_back(
          score(kPinnLabel, curve.fractions,
                release_fractions(pinn.params, curve.times, pinn_cfg.quadrature_points)));
      fc.pinn_d = pinn.d_value;
      return 0;
    });
    fc.winner = pick_winner(fc.scores);
    report(options, mu, "comparison: " + film_label(curve.film) + " done");
  });
  return out;
}

ReleaseCurve noise_realization(const ReleaseCurve& curve, const NoiseBenchConfig& cfg) {
  return add_gaussian_noise(curve, cfg.sigma, cfg.ensemble.seed);
}

NoiseReport run_noise_benchmark(const std::vector<ReleaseCurve>& curves,
                                const NoiseBenchConfig& cfg, const BenchOptions& options) {
  const std::vector<ReleaseCurve> ordered = order_by_film(curves);
  require(cfg.members >= 2, "the ensemble needs at least 2 members");
  require(cfg.passes >= 2, "MC dropout needs at least 2 passes");
  require(cfg.sigma >= 0.0, "sigma must be >= 0");
  cfg.ensemble.validate();
  cfg.bpinn.validate();
  if (cfg.use_hmc) cfg.hmc.validate();
  else require(cfg.bpinn.dropout_keep < 1.0, "the dropout BPINN needs dropout_keep < 1");

  NoiseReport out;
  std::mutex mu;
  for (const ReleaseCurve& curve : ordered) {
    NoiseFilmResult r;
    r.film = curve.film;
    with_film_context(curve.film, [&] {
      const std::vector<double> grid = merge_times(band_time_grid(), curve.times);
      const ReleaseCurve noisy = noise_realization(curve, cfg);

      for (ModelKind k : kAllModelKinds) {
        const FitResult f = fit(k, noisy);
        r.classical.push_back(
            score(std::string(to_string(k)), curve.fractions, predict_all(f.model, curve.times)));
      }

      EnsembleOptions eo;
      eo.jobs = options.jobs;
      eo.times = grid;
      eo.on_member_done = [&](int k) {
        report(options, mu,
               "noise: " + film_label(curve.film) + " member " + std::to_string(k) + " done");
      };
      r.ensemble = train_ensemble(cfg.ensemble, curve, cfg.members, cfg.sigma, eo);

      PinnConfig bcfg = cfg.bpinn;
      bcfg.seed = cfg.ensemble.seed;
      if (!cfg.use_hmc) {
        const TrainedPinn model = train(bcfg, noisy);
        DropoutBandOptions dopt;
        dopt.times = grid;
        r.bpinn = mc_dropout_band(model, cfg.passes, derive_seed(bcfg.seed, 101), dopt);
      } else {
        bcfg.dropout_keep = 1.0;
        bcfg.d_mode = DiffusivityMode::Learnable;
        const TrainedPinn start = train(bcfg, noisy);
        HmcConfig hcfg = cfg.hmc;
        hcfg.d_prior_median = bcfg.d;
        const CollocationSet colloc = sample_lhs(
            static_cast<std::size_t>(cfg.hmc_collocation), derive_seed(bcfg.seed, 102));
        const PosteriorSamples samples = hmc_sample(noisy, colloc, hcfg, start.params, start.d_value);
        r.bpinn = posterior_band(samples, grid, hcfg.quadrature_points);
      }
      report(options, mu, "noise: " + film_label(curve.film) + " bpinn band done");

      const ErrorMetrics em = metrics(curve.fractions, band_at(r.ensemble, curve.times));
      const ErrorMetrics bm = metrics(curve.fractions, band_at(r.bpinn, curve.times));
      r.ensemble_metrics = em;
      r.bpinn_metrics = bm;
      return 0;
    });
    out.films.push_back(std::move(r));
  }
  return out;
}

std::vector<int> LimitedDataConfig::default_ns() {
  std::vector<int> ns;
  for (int n = 2; n <= 14; ++n) ns.push_back(n);
  return ns;
}

std::optional<int> LimitedDataReport::minimal_n(FilmType film, const std::string& model) const {
  for (const auto& m : minimal) {
    if (m.film == film && m.model == model) return m.n;
  }
  fail(ErrorKind::InvalidArgument, "no entry for " + film_label(film) + "/" + model);
}

LimitedDataReport run_limited_data(const std::vector<ReleaseCurve>& curves,
                                   const LimitedDataConfig& cfg, const BenchOptions& options) {
  require(cfg.threshold > 0.0, "threshold must be positive");
  require(!cfg.ns.empty() && !cfg.films.empty(), "nothing to run");
  for (int n : cfg.ns) require(n >= 2 && n <= 14, "n must lie in 2..14");
  cfg.pinn.validate();
  for (const ReleaseCurve& c : curves) {
    if (c.size() != 15) {
      fail(ErrorKind::WrongCurveLength, film_label(c.film) + " curve has " +
                                            std::to_string(c.size()) +
                                            " points; the protocol needs exactly 15");
    }
  }
  std::vector<ReleaseCurve> selected;
  const std::vector<ReleaseCurve> ordered = order_by_film(curves);
  for (FilmType f : cfg.films) selected.push_back(ordered[static_cast<std::size_t>(f)]);

  const std::vector<std::string> models = report_models();
  const std::size_t per_job = models.size();
  const std::size_t jobs = selected.size() * cfg.ns.size();
  std::vector<LimitedRow> rows(jobs * per_job);
  std::mutex mu;
  detail::parallel_for(static_cast<int>(jobs), options.jobs, [&](int job) {
    const ReleaseCurve& curve = selected[static_cast<std::size_t>(job) / cfg.ns.size()];
    const int n = cfg.ns[static_cast<std::size_t>(job) % cfg.ns.size()];
    const SplitCurve split = split_first_n(curve, static_cast<std::size_t>(n));
    LimitedRow* out = &rows[static_cast<std::size_t>(job) * per_job];
    for (std::size_t m = 0; m < per_job; ++m) {
      out[m].film = curve.film;
      out[m].model = models[m];
      out[m].n = n;
    }
    for (std::size_t m = 0; m + 1 < per_job; ++m) {
      try {
        const FitResult f = fit(kAllModelKinds[m], split.train);
        out[m].rmse = metrics(split.test.fractions, predict_all(f.model, split.test.times)).rmse;
      } catch (const Error&) {
        // Too few distinct points for this model; recorded as not fitted.
      }
    }
    with_film_context(curve.film, [&] {
      const TrainedPinn pinn = train(cfg.pinn, split.train);
      out[per_job - 1].rmse =
          metrics(split.test.fractions,
                  release_fractions(pinn.params, split.test.times, cfg.pinn.quadrature_points))
              .rmse;
      return 0;
    });
    report(options, mu, "limited: " + film_label(curve.film) + " n=" + std::to_string(n) + " done");
  });

  LimitedDataReport rep;
  rep.threshold = cfg.threshold;
  rep.rows = std::move(rows);
  for (FilmType f : cfg.films) {
    for (const std::string& model : models) {
      MinimalN m{f, model, std::nullopt};
      for (int n : cfg.ns) {
        for (const auto& row : rep.rows) {
          if (row.film == f && row.model == model && row.n == n && row.rmse &&
              *row.rmse < cfg.threshold && (!m.n || n < *m.n)) {
            m.n = n;
          }
        }
      }
      rep.minimal.push_back(m);
    }
  }
  return rep;
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report) {
  std::ofstream out = open_out(path);
  out << "film,model,mae,rmse,winner\n";
  for (const auto& fc : report.films) {
    for (const auto& s : fc.scores) {
      out << to_string(fc.film) << ',' << s.model << ',' << format_value(s.mae) << ','
          << format_value(s.rmse) << ',' << (s.model == fc.winner ? 1 : 0) << '\n';
    }
  }
}

void write_noise_csvs(const std::filesystem::path& dir, const NoiseReport& report) {
  for (const auto& r : report.films) {
    std::ofstream out = open_out(dir / ("noise_bands_" + film_label(r.film) + ".csv"));
    out << "t,ensemble_mean,ensemble_std,bpinn_mean,bpinn_std\n";
    for (std::size_t i = 0; i < r.ensemble.times.size(); ++i) {
      out << format_value(r.ensemble.times[i]) << ',' << format_value(r.ensemble.mean[i]) << ','
          << format_value(r.ensemble.std[i]) << ',' << format_value(r.bpinn.mean[i]) << ','
          << format_value(r.bpinn.std[i]) << '\n';
    }
  }
  std::ofstream out = open_out(dir / "noise_metrics.csv");
  out << "film,method,mae,rmse,mean_std\n";
  for (const auto& r : report.films) {
    out << to_string(r.film) << ",ensemble," << format_value(r.ensemble_metrics.mae) << ','
        << format_value(r.ensemble_metrics.rmse) << ',' << format_value(r.ensemble.mean_std())
        << '\n';
    out << to_string(r.film) << ',' << to_string(r.bpinn.method) << ','
        << format_value(r.bpinn_metrics.mae) << ',' << format_value(r.bpinn_metrics.rmse) << ','
        << format_value(r.bpinn.mean_std()) << '\n';
    for (const auto& s : r.classical) {
      out << to_string(r.film) << ',' << s.model << ',' << format_value(s.mae) << ','
          << format_value(s.rmse) << ",\n";
    }
  }
}

void write_limited_csv(const std::filesystem::path& path, const LimitedDataReport& report) {
  std::ofstream out = open_out(path);
  out << "film,model,n,rmse\n";
  for (const auto& r : report.rows) {
    out << to_string(r.film) << ',' << r.model << ',' << r.n << ','
        << (r.rmse ? format_value(*r.rmse) : std::string()) << '\n';
  }
}

}  // namespace releaseflow
