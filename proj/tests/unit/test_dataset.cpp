#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include "releaseflow/dataset.hpp"
#include "releaseflow/error.hpp"
#include "releaseflow/pde_oracle.hpp"
#include "releaseflow/rng.hpp"

using namespace releaseflow;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::InvalidArgument;
}

ReleaseCurve parse(const std::string& text) {
  std::istringstream in(text);
  return read_curve(in, FilmType::Flat);
}

}  // namespace

TEST_CASE("film labels") {
  CHECK(parse_film("flat") == FilmType::Flat);
  CHECK(parse_film("Planar") == FilmType::Flat);
  CHECK(parse_film("1D") == FilmType::Wrinkled1D);
  CHECK(parse_film("wrinkled") == FilmType::Wrinkled1D);
  CHECK(parse_film("crumpled2d") == FilmType::Crumpled2D);
  CHECK(kind_of([] { parse_film("porous"); }) == ErrorKind::Parse);
  for (FilmType f : kAllFilms) CHECK(parse_film(to_string(f)) == f);
}

TEST_CASE("read_curve passes rows through") {
  const ReleaseCurve c = parse("0,0\n0.5,0.7\n1,1\n");
  REQUIRE(c.size() == 3);
  CHECK(c.fractions == std::vector<double>{0.0, 0.7, 1.0});
  CHECK(c.times == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("time_unit=hours is rescaled by the maximum time") {
  const ReleaseCurve c = parse("#time_unit=hours\n0,0\n12,0.3\n24,0.5\n48,0.8\n");
  CHECK(c.times == std::vector<double>{0.0, 0.25, 0.5, 1.0});
  const ReleaseCurve m = parse("# time_unit = minutes\n0,0\n1440,0.5\n2880,0.9\n");
  CHECK(m.times == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("curve validation errors") {
  CHECK(kind_of([] { parse("0.2,0.1\n0.1,0.2\n"); }) == ErrorKind::NonMonotoneTime);
  CHECK(kind_of([] { parse("0,0\n0.1\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("0,0\nabc,0.2\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("0,0\n0.5,1.7\n"); }) == ErrorKind::FractionOutOfRange);
  CHECK(kind_of([] { make_curve(FilmType::Flat, {0, 0.5}, {0.1}); }) ==
        ErrorKind::LengthMismatch);
  // Noisy curves: out-of-[0,1] and decreasing fractions are warnings only.
  const auto warnings = validate_curve(make_curve(FilmType::Flat, {0, 0.5, 1}, {-0.1, 0.6, 0.5}, 0.1));
  CHECK(warnings.size() >= 2);
  CHECK(kind_of([] { make_curve(FilmType::Flat, {0, 0.5, 1}, {0.0, 0.6, 0.5}); }) ==
        ErrorKind::InvalidArgument);
  // The hard bound applies to noisy data as well.
  CHECK(kind_of([] { make_curve(FilmType::Flat, {0, 1}, {0.0, 1.6}, 0.1); }) ==
        ErrorKind::FractionOutOfRange);
  CHECK(kind_of([] { parse("#film=crumpled\n0,0\n1,1\n"); }) == ErrorKind::Parse);
}

TEST_CASE("header film is used when no film is requested") {
  std::istringstream in("#film=crumpled\n0,0\n1,1\n");
  CHECK(read_curve(in).film == FilmType::Crumpled2D);
}

TEST_CASE("save/load round trip is exact") {
  Rng rng(3);
  std::vector<double> t{0.0};
  std::vector<double> f{0.0};
  for (int i = 1; i < 40; ++i) {
    t.push_back(t.back() + 0.01 + 0.01 * rng.uniform());
    f.push_back(std::min(1.0, f.back() + 0.02 * rng.uniform()));
  }
  for (double& x : t) x /= t.back();
  const ReleaseCurve c = make_curve(FilmType::Wrinkled1D, t, f);
  const auto path = std::filesystem::temp_directory_path() / "rf_roundtrip.csv";
  save_curve(path, c);
  const ReleaseCurve back = load_curve(path, FilmType::Wrinkled1D);
  CHECK(back.times == c.times);
  CHECK(back.fractions == c.fractions);
  CHECK(back.film == c.film);
  std::filesystem::remove(path);

  // Short decimals are written with six places.
  std::ostringstream out;
  write_curve(out, make_curve(FilmType::Flat, {0, 0.5}, {0, 0.25}));
  CHECK(out.str() == "#film=flat\n#time_unit=normalized\n0.000000,0.000000\n0.500000,0.250000\n");
}

TEST_CASE("missing file names the path") {
  try {
    load_curve("/nonexistent/curve.csv", FilmType::Flat);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
    CHECK(std::string(e.what()).find("/nonexistent/curve.csv") != std::string::npos);
  }
}

TEST_CASE("Fick series limits and oracle agreement") {
  CHECK(fick_series_release(0.01, 0.0) == 0.0);
  CHECK(fick_series_release(100.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(fick_series_release(100.0, 1.0) - 1.0) < 1e-6);
  const PdeOracleSolution sol = solve_pde_oracle(0.01, 201, 2001);
  CHECK(std::abs(fick_series_release(0.01, 1.0) - sol.release_fraction(1.0)) < 1e-4);
}

TEST_CASE("synthesize_fickian is monotone in t and d") {
  const ReleaseCurve c = synthesize_fickian(0.01, 50, 1.0);
  CHECK(c.fractions.front() == 0.0);
  CHECK(c.times.back() == 1.0);
  for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.fractions[i] >= c.fractions[i - 1]);
  const double ds[] = {0.001, 0.005, 0.01, 0.05, 0.2, 1.0};
  for (double t : {0.01, 0.1, 0.5, 1.0}) {
    for (std::size_t k = 1; k < std::size(ds); ++k) {
      CHECK(fick_series_release(ds[k], t) >= fick_series_release(ds[k - 1], t));
    }
  }
}

TEST_CASE("reference curves are valid 15-point curves") {
  for (FilmType f : kAllFilms) {
    const ReleaseCurve c = reference_curve(f);
    CHECK(c.film == f);
    CHECK(c.size() == 15);
    CHECK(validate_curve(c).empty());
  }
  CHECK(canonical_times()[6] == doctest::Approx(120.0 / 2880.0));
}

TEST_CASE("gaussian noise") {
  const ReleaseCurve base = synthesize_fickian(0.01, 10000, 1.0);
  CHECK(add_gaussian_noise(base, 0.0, 1).fractions == base.fractions);
  CHECK_FALSE(add_gaussian_noise(base, 0.0, 1).noisy());

  const ReleaseCurve noisy = add_gaussian_noise(base, 0.1, 42);
  REQUIRE(noisy.noise_sigma.has_value());
  CHECK(*noisy.noise_sigma == 0.1);
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double e = noisy.fractions[i] - base.fractions[i];
    sum += e;
    sum2 += e * e;
  }
  const double n = static_cast<double>(base.size());
  const double sd = std::sqrt(sum2 / n - (sum / n) * (sum / n));
  CHECK(std::abs(sd - 0.1) < 0.005);

  CHECK(add_gaussian_noise(base, 0.1, 42).fractions == noisy.fractions);
  CHECK(add_gaussian_noise(base, 0.1, 1).fractions != add_gaussian_noise(base, 0.1, 2).fractions);
}

TEST_CASE("split_first_n") {
  const ReleaseCurve c = reference_curve(FilmType::Flat);
  const SplitCurve s = split_first_n(c, 9);
  CHECK(s.n == 9);
  CHECK(s.train.size() == 9);
  CHECK(s.test.size() == 6);
  CHECK(s.train.times.back() < s.test.times.front());
  std::vector<double> joined = s.train.fractions;
  joined.insert(joined.end(), s.test.fractions.begin(), s.test.fractions.end());
  CHECK(joined == c.fractions);
  CHECK(split_first_n(c, 2).train.size() == 2);
  CHECK(kind_of([&] { split_first_n(c, 15); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { split_first_n(c, 1); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("rng streams are reproducible and roughly uniform") {
  Rng a(9);
  Rng b(9);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(5);
  double s = 0.0;
  for (int i = 0; i < 100000; ++i) s += r.uniform();
  CHECK(std::abs(s / 100000 - 0.5) < 0.01);
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
}
