#include "releaseflow/error.hpp"

namespace releaseflow {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::FractionOutOfRange: return "FractionOutOfRange";
    case ErrorKind::DegenerateCurve: return "DegenerateCurve";
    case ErrorKind::UnknownModel: return "UnknownModel";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::DropoutDisabled: return "DropoutDisabled";
    case ErrorKind::DivergentTrajectory: return "DivergentTrajectory";
    case ErrorKind::MissingFilm: return "MissingFilm";
    case ErrorKind::WrongCurveLength: return "WrongCurveLength";
  }
  return "Unknown";
}

}  // namespace releaseflow
