#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace releaseflow {

enum class FilmType { Flat, Wrinkled1D, Crumpled2D };

inline constexpr FilmType kAllFilms[] = {FilmType::Flat, FilmType::Wrinkled1D,
                                         FilmType::Crumpled2D};

// Canonical short labels: "flat", "wrinkled", "crumpled". Parsing also accepts
// "1d", "2d", "wrinkled1d", "crumpled2d" case-insensitively.
std::string_view to_string(FilmType film) noexcept;
FilmType parse_film(std::string_view label);

/// Cumulative release curve for one film. Times are normalized so 1.0 is the
/// end of the experiment (48 h for the reference protocol).
struct ReleaseCurve {
  FilmType film = FilmType::Flat;
  std::vector<double> times;
  std::vector<double> fractions;
  std::optional<double> noise_sigma;

  std::size_t size() const noexcept { return times.size(); }
  bool noisy() const noexcept { return noise_sigma.has_value(); }
};

/// Checks the curve invariants. Hard violations throw; soft violations (only
/// possible on noisy curves) are returned as human-readable warnings.
std::vector<std::string> validate_curve(const ReleaseCurve& curve);

/// Builds and validates a curve.
ReleaseCurve make_curve(FilmType film, std::vector<double> times,
                        std::vector<double> fractions,
                        std::optional<double> noise_sigma = std::nullopt);

struct SplitCurve {
  ReleaseCurve train;
  ReleaseCurve test;
  std::size_t n = 0;
};

// CSV I/O. Header lines start with '#' and carry key=value pairs (film,
// time_unit, noise_sigma); data rows are "time,fraction".
// Without a requested film the header's film is used (flat if absent); a
// header that contradicts a requested film is a Parse error.
ReleaseCurve read_curve(std::istream& in, std::optional<FilmType> film = std::nullopt);
ReleaseCurve load_curve(const std::filesystem::path& path,
                        std::optional<FilmType> film = std::nullopt);
void write_curve(std::ostream& out, const ReleaseCurve& curve);
void save_curve(const std::filesystem::path& path, const ReleaseCurve& curve);

/// Plane-sheet release M_t/M_inf for unit initial concentration and perfect
/// sinks on both faces of a unit-thickness slab.
double fick_series_release(double d_hat, double t);

/// The 15 reference sampling instants (minutes 0..2880 normalized by 2880).
std::vector<double> canonical_times();

/// Fickian curve on a uniform grid of n_points over [0, t_max].
ReleaseCurve synthesize_fickian(double d_hat, std::size_t n_points, double t_max);
/// Fickian curve on the given times.
ReleaseCurve synthesize_fickian_at(double d_hat, std::span<const double> times,
                                   FilmType film = FilmType::Flat);

// Non-Fickian generators used for the wrinkled and crumpled reference curves.
ReleaseCurve synthesize_peppas_burst(double k, double n, double burst,
                                     double burst_rate, std::span<const double> times,
                                     FilmType film = FilmType::Wrinkled1D);
ReleaseCurve synthesize_biexponential(double fast_fraction, double fast_rate,
                                      double slow_rate, std::span<const double> times,
                                      FilmType film = FilmType::Crumpled2D);

/// Shipped reference curve for a film type on the canonical grid.
ReleaseCurve reference_curve(FilmType film);

ReleaseCurve add_gaussian_noise(const ReleaseCurve& curve, double sigma,
                                std::uint64_t seed);

SplitCurve split_first_n(const ReleaseCurve& curve, std::size_t n);

}  // namespace releaseflow
