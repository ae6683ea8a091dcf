#include "hetfx/error.hpp"

namespace hetfx {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::OutOfRangeCategory: return "OutOfRangeCategory";
    case ErrorKind::EmptyCell: return "EmptyCell";
    case ErrorKind::ContinuousCovariate: return "ContinuousCovariate";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::Nonconvergence: return "Nonconvergence";
    case ErrorKind::SeparationSuspected: return "SeparationSuspected";
    case ErrorKind::MissingCategory: return "MissingCategory";
    case ErrorKind::BadCategory: return "BadCategory";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::DegeneratePsr: return "DegeneratePsr";
    case ErrorKind::EmptySubsampleSide: return "EmptySubsampleSide";
    case ErrorKind::SingularScoreOuterProduct: return "SingularScoreOuterProduct";
    case ErrorKind::InvalidSpecCombination: return "InvalidSpecCombination";
    case ErrorKind::ExcessFailures: return "ExcessFailures";
    case ErrorKind::DataError: return "DataError";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::RankDeficient:
    case ErrorKind::SingularCovariance:
    case ErrorKind::Nonconvergence:
    case ErrorKind::SeparationSuspected:
    case ErrorKind::DegenerateDenominator:
    case ErrorKind::DegeneratePsr:
    case ErrorKind::SingularScoreOuterProduct:
    case ErrorKind::ExcessFailures:
      return true;
    default:
      return false;
  }
}

}  // namespace hetfx
