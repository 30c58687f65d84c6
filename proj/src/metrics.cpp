#include "releaseflow/metrics.hpp"

#include <cmath>
#include <string>

#include "releaseflow/error.hpp"

namespace releaseflow {

ErrorMetrics metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    fail(ErrorKind::LengthMismatch, "metrics need equal non-zero lengths (got " +
                                        std::to_string(y_true.size()) + " and " +
                                        std::to_string(y_pred.size()) + ")");
  }
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const double r = y_true[i] - y_pred[i];
    abs_sum += std::abs(r);
    sq_sum += r * r;
  }
  const auto n = static_cast<double>(y_true.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

}  // namespace releaseflow
