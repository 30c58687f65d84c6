#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "releaseflow/dataset.hpp"
#include "releaseflow/pinn.hpp"

namespace releaseflow {

enum class BandMethod { Ensemble, McDropout, Hmc };

std::string_view to_string(BandMethod method) noexcept;

/// Pointwise mean and population standard deviation of sampled release curves.
struct UncertaintyBand {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> std;
  int n_samples = 0;
  BandMethod method = BandMethod::Ensemble;

  void validate() const;
  double mean_std() const;
};

/// 101 evenly spaced times on [0, 1].
std::vector<double> band_time_grid(int points = 101);

/// Band from samples[k][i] = curve k at times[i]. Identical samples give
/// std exactly 0.
UncertaintyBand band_from_samples(std::vector<double> times,
                                  const std::vector<std::vector<double>>& samples,
                                  BandMethod method);

/// CSV with header `t,mean,std`.
void write_band(std::ostream& out, const UncertaintyBand& band);

struct EnsembleOptions {
  /// Worker threads; members are independent so results do not depend on it.
  int jobs = 1;
  /// Member k uses seed base.seed + k * seed_stride. A stride of 0 makes all
  /// members identical, which tests use to pin the std = 0 case.
  std::uint64_t seed_stride = 1;
  std::vector<double> times = band_time_grid();
  std::function<void(int member)> on_member_done;
};

/// Trains n_members PINNs, member k on add_gaussian_noise(curve, sigma,
/// base.seed + k) with init seed base.seed + k.
UncertaintyBand train_ensemble(const PinnConfig& base, const ReleaseCurve& curve, int n_members,
                               double noise_sigma, const EnsembleOptions& options = {});

struct DropoutBandOptions {
  std::vector<double> times = band_time_grid();
  /// Test hook: accept a model trained without dropout (every pass is then
  /// the deterministic forward).
  bool allow_disabled = false;
};

/// n_passes stochastic forwards, pass k with a fresh mask drawn from
/// derive_seed(seed, k).
UncertaintyBand mc_dropout_band(const TrainedPinn& trained, int n_passes, std::uint64_t seed,
                                const DropoutBandOptions& options = {});

}  // namespace releaseflow
