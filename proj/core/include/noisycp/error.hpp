#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace noisycp {

enum class Errc {
  InvalidArgument,
  InvalidConfig,
  NegativeEntry,
  RowSumOutOfTolerance,
  TooFewClasses,
  EpsilonOutOfRange,
  LabelOutOfRange,
  UnsupportedScore,
  EmptyScoreList,
  TargetLevelUnreachable,
  SingularMatrix,
  ZeroClassCount,
  ZeroMarginal,
  Io,
  Format,
};

std::string_view errc_name(Errc code);

/// True for failures of the numerics (singular noise matrix, unreachable
/// coverage level) as opposed to bad input or I/O.
bool is_numerical(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace noisycp
