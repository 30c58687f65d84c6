#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "releaseflow/classical.hpp"
#include "releaseflow/dataset.hpp"
#include "releaseflow/hmc.hpp"
#include "releaseflow/metrics.hpp"
#include "releaseflow/pde_oracle.hpp"
#include "releaseflow/pinn.hpp"
#include "releaseflow/uq.hpp"

namespace releaseflow {

/// Model labels used in reports: the classical kinds plus "pinn".
inline constexpr const char* kPinnLabel = "pinn";
std::vector<std::string> report_models();

/// One curve per film, in kAllFilms order. Missing films throw MissingFilm.
std::vector<ReleaseCurve> order_by_film(const std::vector<ReleaseCurve>& curves);

/// The three shipped synthetic reference curves.
std::vector<ReleaseCurve> shipped_curves();

/// Reads <dir>/<film>.csv for every film; a missing file throws MissingFilm.
std::vector<ReleaseCurve> load_curve_dir(const std::filesystem::path& dir);

struct BenchOptions {
  /// Worker threads for independent training jobs.
  int jobs = 1;
  std::function<void(const std::string& message)> progress;
};

struct ModelScore {
  std::string model;
  double mae = 0.0;
  double rmse = 0.0;
};

struct FilmComparison {
  FilmType film = FilmType::Flat;
  std::vector<ModelScore> scores;
  std::string winner;
  /// Diffusivity the PINN ended with (the fixed value unless learnable).
  double pinn_d = 0.0;
};

struct ComparisonReport {
  std::vector<FilmComparison> films;

  const FilmComparison& film(FilmType f) const;
};

/// Lowest rmse wins; a PINN must be strictly better to beat a classical model.
std::string pick_winner(const std::vector<ModelScore>& scores);

ComparisonReport run_comparison(const std::vector<ReleaseCurve>& curves,
                                const PinnConfig& pinn_cfg, const BenchOptions& options = {});

struct NoiseBenchConfig {
  PinnConfig ensemble = PinnConfig::ensemble_member();
  int members = 50;
  double sigma = 0.1;
  PinnConfig bpinn = PinnConfig::bayesian_dropout();
  int passes = 100;
  /// Replace MC dropout by HMC for the BPINN band.
  bool use_hmc = false;
  HmcConfig hmc;
  /// Collocation points for the HMC likelihood.
  int hmc_collocation = 1000;
};

struct NoiseFilmResult {
  FilmType film = FilmType::Flat;
  UncertaintyBand ensemble;
  UncertaintyBand bpinn;
  ErrorMetrics ensemble_metrics;
  ErrorMetrics bpinn_metrics;
  /// Classical models fitted to the noisy realization, scored on the noiseless curve.
  std::vector<ModelScore> classical;
};

struct NoiseReport {
  std::vector<NoiseFilmResult> films;
};

/// Noisy realization for the noise benchmark (seed = ensemble base seed).
ReleaseCurve noise_realization(const ReleaseCurve& curve, const NoiseBenchConfig& cfg);

NoiseReport run_noise_benchmark(const std::vector<ReleaseCurve>& curves,
                                const NoiseBenchConfig& cfg, const BenchOptions& options = {});

struct LimitedDataConfig {
  PinnConfig pinn = PinnConfig::limited_data();
  double threshold = 0.05;
  /// Training prefix lengths; the full protocol uses 2..14.
  std::vector<int> ns = default_ns();
  std::vector<FilmType> films = {kAllFilms[0], kAllFilms[1], kAllFilms[2]};

  static std::vector<int> default_ns();
};

struct LimitedRow {
  FilmType film = FilmType::Flat;
  std::string model;
  int n = 0;
  /// Held-out rmse; empty when the model could not be fitted on n points.
  std::optional<double> rmse;
};

struct MinimalN {
  FilmType film = FilmType::Flat;
  std::string model;
  /// Smallest n with held-out rmse < threshold; empty if none passes.
  std::optional<int> n;
};

struct LimitedDataReport {
  double threshold = 0.05;
  std::vector<LimitedRow> rows;
  std::vector<MinimalN> minimal;

  std::optional<int> minimal_n(FilmType film, const std::string& model) const;
};

/// Every curve must have exactly 15 points (WrongCurveLength otherwise).
LimitedDataReport run_limited_data(const std::vector<ReleaseCurve>& curves,
                                   const LimitedDataConfig& cfg,
                                   const BenchOptions& options = {});

// Plot-ready CSV writers (one file per figure analogue).
void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report);
void write_noise_csvs(const std::filesystem::path& dir, const NoiseReport& report);
void write_limited_csv(const std::filesystem::path& path, const LimitedDataReport& report);

}  // namespace releaseflow
