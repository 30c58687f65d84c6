#pragma once

#include <json.hpp>

#include "releaseflow/bench.hpp"
#include "releaseflow/classical.hpp"
#include "releaseflow/dataset.hpp"
#include "releaseflow/nn.hpp"
#include "releaseflow/hmc.hpp"
#include "releaseflow/pinn.hpp"
#include "releaseflow/uq.hpp"

namespace releaseflow {

using json = nlohmann::json;

namespace nn {
void to_json(json& j, const MlpArchitecture& a);
void from_json(const json& j, MlpArchitecture& a);
/// Debug dump: architecture plus per-layer weights and biases.
json params_to_json(const MlpParams& params);
}  // namespace nn

void to_json(json& j, const ClassicalModel& m);
void from_json(const json& j, ClassicalModel& m);
void to_json(json& j, const FitResult& r);
void from_json(const json& j, FitResult& r);

void to_json(json& j, const LossWeights& w);
void from_json(const json& j, LossWeights& w);
void to_json(json& j, const PinnConfig& c);
void from_json(const json& j, PinnConfig& c);
void to_json(json& j, const LossBreakdown& l);

void to_json(json& j, const ReleaseCurve& c);
void from_json(const json& j, ReleaseCurve& c);

void to_json(json& j, const ErrorMetrics& m);
void from_json(const json& j, ErrorMetrics& m);
void to_json(json& j, const UncertaintyBand& b);
void from_json(const json& j, UncertaintyBand& b);
void to_json(json& j, const HmcConfig& c);
void from_json(const json& j, HmcConfig& c);
/// Acceptance rate, divergences and d summary statistics of a posterior run.
json posterior_summary(const PosteriorSamples& samples);

void to_json(json& j, const ModelScore& s);
void from_json(const json& j, ModelScore& s);
void to_json(json& j, const ComparisonReport& r);
void from_json(const json& j, ComparisonReport& r);
void to_json(json& j, const NoiseReport& r);
void from_json(const json& j, NoiseReport& r);
void to_json(json& j, const LimitedDataReport& r);
void from_json(const json& j, LimitedDataReport& r);

}  // namespace releaseflow
