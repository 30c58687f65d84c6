#include "releaseflow/classical.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "levenberg_marquardt.hpp"
#include "releaseflow/error.hpp"

namespace releaseflow {

namespace {

constexpr double kPeppasExponentMax = 1.5;

double logit(double y) { return std::log(y / (1.0 - y)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Maps between constrained model parameters and the unconstrained vector the
// optimizer moves: log for positive scales, scaled logit for the Peppas exponent.
Eigen::VectorXd to_free(ModelKind kind, const std::vector<double>& p) {
  switch (kind) {
    case ModelKind::FickSeries:
    case ModelKind::Higuchi: return Eigen::VectorXd::Constant(1, std::log(p[0]));
    case ModelKind::Peppas: {
      Eigen::VectorXd z(2);
      z << std::log(p[0]), logit(p[1] / kPeppasExponentMax);
      return z;
    }
  }
  return {};
}

ClassicalModel from_free(ModelKind kind, const Eigen::VectorXd& z) {
  if (kind == ModelKind::Peppas) {
    return {kind, {std::exp(z[0]), kPeppasExponentMax * sigmoid(z[1])}};
  }
  return {kind, {std::exp(z[0])}};
}

bool is_degenerate(const ReleaseCurve& c) {
  const bool any_positive_time =
      std::any_of(c.times.begin(), c.times.end(), [](double t) { return t > 0.0; });
  const bool all_equal = std::all_of(c.fractions.begin(), c.fractions.end(),
                                     [&](double f) { return f == c.fractions.front(); });
  return !any_positive_time || all_equal;
}

double initial_fick(const ReleaseCurve& c) {
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const double f0 = c.fractions[i - 1];
    const double f1 = c.fractions[i];
    if (f0 < 0.5 && f1 >= 0.5) {
      const double t_half = c.times[i - 1] + (0.5 - f0) / (f1 - f0) * (c.times[i] - c.times[i - 1]);
      if (t_half > 0.0) return std::log(16.0 / pi2) / (pi2 * t_half);
    }
  }
  // Half release never observed: fall back to the short-time law R = 4 sqrt(d t / pi)
  // on the largest observed fraction.
  double best_f = 0.0;
  double best_t = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.times[i] > 0.0 && c.fractions[i] > best_f) {
      best_f = c.fractions[i];
      best_t = c.times[i];
    }
  }
  if (best_f <= 0.0) return 0.01;
  const double q = std::min(best_f, 0.5) / 4.0;
  return std::numbers::pi * q * q / best_t;
}

double initial_higuchi(const ReleaseCurve& c) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    num += c.fractions[i] * std::sqrt(c.times[i]);
    den += c.times[i];
  }
  const double k = den > 0.0 ? num / den : 0.0;
  return k > 1e-8 ? k : 1e-3;
}

std::vector<double> initial_peppas(const ReleaseCurve& c) {
  auto regress = [&](double f_max) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double t = c.times[i];
      const double f = c.fractions[i];
      if (t > 0.0 && f > 0.0 && f < f_max) {
        const double x = std::log(t);
        const double y = std::log(f);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
      }
    }
    struct Line {
      int n;
      double slope, intercept;
    };
    const double denom = n * sxx - sx * sx;
    if (n < 2 || std::abs(denom) < 1e-300) return Line{n, 0.0, 0.0};
    const double slope = (n * sxy - sx * sy) / denom;
    return Line{n, slope, (sy - slope * sx) / n};
  };
  auto line = regress(0.6);
  if (line.n < 2) line = regress(std::numeric_limits<double>::infinity());
  if (line.n < 2) return {initial_higuchi(c), 0.5};
  const double n = std::clamp(line.slope, 0.05, kPeppasExponentMax - 0.05);
  return {std::max(std::exp(line.intercept), 1e-8), n};
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::FickSeries: return "fick";
    case ModelKind::Higuchi: return "higuchi";
    case ModelKind::Peppas: return "peppas";
  }
  return "fick";
}

ModelKind parse_model_kind(std::string_view label) {
  std::string s(label);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "fick" || s == "fickseries" || s == "fick_series") return ModelKind::FickSeries;
  if (s == "higuchi") return ModelKind::Higuchi;
  if (s == "peppas" || s == "korsmeyer-peppas") return ModelKind::Peppas;
  fail(ErrorKind::UnknownModel, "unknown model '" + std::string(label) + "'");
}

void validate_model(const ClassicalModel& m) {
  const std::size_t expected = m.kind == ModelKind::Peppas ? 2 : 1;
  require(m.params.size() == expected, "wrong parameter count for " +
                                           std::string(to_string(m.kind)) + " model");
  require(m.params[0] > 0.0, "model scale parameter must be positive");
  if (m.kind == ModelKind::Peppas) {
    require(m.params[1] > 0.0 && m.params[1] < kPeppasExponentMax,
            "Peppas exponent must lie in (0, 1.5)");
  }
}

double predict_unclamped(const ClassicalModel& m, double t) {
  require(t >= 0.0, "t must be non-negative");
  switch (m.kind) {
    case ModelKind::FickSeries: return fick_series_release(m.params[0], t);
    case ModelKind::Higuchi: return m.params[0] * std::sqrt(t);
    case ModelKind::Peppas: return m.params[0] * std::pow(t, m.params[1]);
  }
  return 0.0;
}

double predict(const ClassicalModel& m, double t) {
  return std::clamp(predict_unclamped(m, t), 0.0, 1.0);
}

ErrorMetrics evaluate(const ClassicalModel& model, const ReleaseCurve& curve) {
  std::vector<double> pred;
  pred.reserve(curve.size());
  for (double t : curve.times) pred.push_back(predict(model, t));
  return metrics(curve.fractions, pred);
}

FitResult fit(ModelKind kind, const ReleaseCurve& curve, const FitOptions& options) {
  require(curve.size() >= 2, "fit needs at least 2 points");
  if (is_degenerate(curve)) {
    fail(ErrorKind::DegenerateCurve,
         "curve carries no information for fitting (constant fractions or no t > 0)");
  }

  std::vector<double> start;
  switch (kind) {
    case ModelKind::FickSeries: start = {initial_fick(curve)}; break;
    case ModelKind::Higuchi: start = {initial_higuchi(curve)}; break;
    case ModelKind::Peppas: start = initial_peppas(curve); break;
  }

  const detail::ResidualFn residual = [&](const Eigen::VectorXd& z) {
    const ClassicalModel m = from_free(kind, z);
    Eigen::VectorXd r(static_cast<Eigen::Index>(curve.size()));
    for (std::size_t i = 0; i < curve.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = predict_unclamped(m, curve.times[i]) - curve.fractions[i];
    }
    return r;
  };

  const detail::LmResult lm = detail::levenberg_marquardt(
      residual, to_free(kind, start),
      {options.max_iterations, options.relative_tolerance, options.initial_lambda});

  FitResult out;
  out.model = from_free(kind, lm.params);
  // Saturated transforms can push a parameter to the edge of its open interval.
  if (kind == ModelKind::Peppas) {
    out.model.params[1] = std::clamp(out.model.params[1], 1e-12, kPeppasExponentMax - 1e-12);
  }
  out.model.params[0] = std::max(out.model.params[0], std::numeric_limits<double>::min());
  out.converged = lm.converged;
  out.iterations = lm.iterations;
  const ErrorMetrics e = evaluate(out.model, curve);
  out.mae = e.mae;
  out.rmse = e.rmse;
  return out;
}

}  // namespace releaseflow
