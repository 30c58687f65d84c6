#pragma once

#include <string_view>
#include <vector>

#include "releaseflow/dataset.hpp"
#include "releaseflow/metrics.hpp"

namespace releaseflow {

enum class ModelKind { FickSeries, Higuchi, Peppas };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::FickSeries, ModelKind::Higuchi,
                                               ModelKind::Peppas};

std::string_view to_string(ModelKind kind) noexcept;
/// Accepts "fick", "fickseries", "higuchi", "peppas" (case-insensitive); anything
/// else throws UnknownModel.
ModelKind parse_model_kind(std::string_view label);

/// Parameter layout: FickSeries {d_hat}; Higuchi {k_h}; Peppas {k, n}.
struct ClassicalModel {
  ModelKind kind = ModelKind::FickSeries;
  std::vector<double> params;
};

void validate_model(const ClassicalModel& model);

/// Model release at normalized time t, clamped to [0, 1].
double predict(const ClassicalModel& model, double t);
/// Same without the clamp; this is what the least-squares residual uses.
double predict_unclamped(const ClassicalModel& model, double t);

struct FitResult {
  ClassicalModel model;
  double mae = 0.0;
  double rmse = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FitOptions {
  int max_iterations = 500;
  double relative_tolerance = 1e-10;
  double initial_lambda = 1e-3;
};

/// Unweighted nonlinear least squares over every point of the curve.
FitResult fit(ModelKind kind, const ReleaseCurve& curve, const FitOptions& options = {});

ErrorMetrics evaluate(const ClassicalModel& model, const ReleaseCurve& curve);

}  // namespace releaseflow
