#pragma once

#include <span>

namespace releaseflow {

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

/// Mean absolute error and root mean square error between paired samples.
/// Throws LengthMismatch on unequal or empty inputs.
ErrorMetrics metrics(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace releaseflow
