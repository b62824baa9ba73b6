#include "noisycp/error.hpp"

namespace noisycp {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NegativeEntry: return "NegativeEntry";
    case Errc::RowSumOutOfTolerance: return "RowSumOutOfTolerance";
    case Errc::TooFewClasses: return "TooFewClasses";
    case Errc::EpsilonOutOfRange: return "EpsilonOutOfRange";
    case Errc::LabelOutOfRange: return "LabelOutOfRange";
    case Errc::UnsupportedScore: return "UnsupportedScore";
    case Errc::EmptyScoreList: return "EmptyScoreList";
    case Errc::TargetLevelUnreachable: return "TargetLevelUnreachable";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::ZeroClassCount: return "ZeroClassCount";
    case Errc::ZeroMarginal: return "ZeroMarginal";
    case Errc::Io: return "Io";
    case Errc::Format: return "Format";
  }
  return "Unknown";
}

bool is_numerical(Errc code) {
  switch (code) {
    case Errc::TargetLevelUnreachable:
    case Errc::SingularMatrix:
    case Errc::ZeroClassCount:
    case Errc::ZeroMarginal:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace noisycp
