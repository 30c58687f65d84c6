#include "releaseflow/uq.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>

#include "format.hpp"
#include "parallel.hpp"
#include "releaseflow/error.hpp"

namespace releaseflow {

std::string_view to_string(BandMethod method) noexcept {
  switch (method) {
    case BandMethod::Ensemble:
      return "ensemble";
    case BandMethod::McDropout:
      return "mc_dropout";
    case BandMethod::Hmc:
      return "hmc";
  }
  return "unknown";
}

void UncertaintyBand::validate() const {
  require(n_samples >= 2, "a band needs at least 2 samples");
  require(mean.size() == times.size() && std.size() == times.size(),
          "band times, mean and std differ in length");
  for (double s : std) require(s >= 0.0 && std::isfinite(s), "band std must be finite and >= 0");
  for (double m : mean) require(std::isfinite(m), "band mean must be finite");
}

double UncertaintyBand::mean_std() const {
  if (std.empty()) return 0.0;
  double sum = 0.0;
  for (double s : std) sum += s;
  return sum / static_cast<double>(std.size());
}

std::vector<double> band_time_grid(int points) {
  require(points >= 2, "time grid needs at least 2 points");
  std::vector<double> t(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) t[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  return t;
}

UncertaintyBand band_from_samples(std::vector<double> times,
                                  const std::vector<std::vector<double>>& samples,
                                  BandMethod method) {
  require(samples.size() >= 2, "a band needs at least 2 samples");
  const std::size_t m = times.size();
  for (const auto& s : samples) require(s.size() == m, "sample length does not match the time grid");
  const auto n = static_cast<double>(samples.size());

  UncertaintyBand band;
  band.times = std::move(times);
  band.mean.resize(m);
  band.std.resize(m);
  band.n_samples = static_cast<int>(samples.size());
  band.method = method;
  for (std::size_t i = 0; i < m; ++i) {
    // Shift by the first sample so identical samples give exactly zero spread.
    const double shift = samples[0][i];
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& s : samples) {
      const double dv = s[i] - shift;
      s1 += dv;
      s2 += dv * dv;
    }
    const double mean_shift = s1 / n;
    band.mean[i] = shift + mean_shift;
    band.std[i] = std::sqrt(std::max(0.0, s2 / n - mean_shift * mean_shift));
  }
  return band;
}

void write_band(std::ostream& out, const UncertaintyBand& band) {
  out << "t,mean,std\n";
  for (std::size_t i = 0; i < band.times.size(); ++i) {
    out << detail::format_value(band.times[i]) << ',' << detail::format_value(band.mean[i]) << ','
        << detail::format_value(band.std[i]) << '\n';
  }
}


UncertaintyBand train_ensemble(const PinnConfig& base, const ReleaseCurve& curve, int n_members,
                               double noise_sigma, const EnsembleOptions& options) {
  require(n_members >= 2, "an ensemble needs at least 2 members");
  require(noise_sigma >= 0.0, "noise_sigma must be >= 0");
  base.validate();
  validate_curve(curve);

  std::vector<std::vector<double>> samples(static_cast<std::size_t>(n_members));
  std::mutex progress_mu;
  detail::parallel_for(n_members, options.jobs, [&](int k) {
    const std::uint64_t seed = base.seed + static_cast<std::uint64_t>(k) * options.seed_stride;
    PinnConfig cfg = base;
    cfg.seed = seed;
    const ReleaseCurve noisy = add_gaussian_noise(curve, noise_sigma, seed);
    try {
      const TrainedPinn member = train(cfg, noisy);
      samples[static_cast<std::size_t>(k)] =
          release_fractions(member.params, options.times, cfg.quadrature_points);
    } catch (const NonFiniteLossError& e) {
      throw NonFiniteLossError(e.epoch(), "ensemble member " + std::to_string(k) + " (seed " +
                                              std::to_string(seed) + ") diverged: " + e.what());
    }
    if (options.on_member_done) {
      std::lock_guard lock(progress_mu);
      options.on_member_done(k);
    }
  });
  return band_from_samples(options.times, samples, BandMethod::Ensemble);
}

UncertaintyBand mc_dropout_band(const TrainedPinn& trained, int n_passes, std::uint64_t seed,
                                const DropoutBandOptions& options) {
  require(n_passes >= 2, "MC dropout needs at least 2 passes");
  const double p_keep = trained.config.dropout_keep;
  if (p_keep >= 1.0 && !options.allow_disabled) {
    fail(ErrorKind::DropoutDisabled, "model was trained without dropout (p_keep = 1)");
  }
  const nn::MlpArchitecture& arch = trained.params.arch();
  std::vector<std::vector<double>> samples;
  samples.reserve(static_cast<std::size_t>(n_passes));
  for (int k = 0; k < n_passes; ++k) {
    const nn::DropoutMask mask =
        nn::DropoutMask::sample(arch, p_keep, derive_seed(seed, static_cast<std::uint64_t>(k)));
    samples.push_back(release_fractions(trained.params, options.times,
                                        trained.config.quadrature_points, &mask));
  }
  return band_from_samples(options.times, samples, BandMethod::McDropout);
}

}  // namespace releaseflow
