#pragma once

#include <stdexcept>
#include <string>

namespace fairaudit {

enum class Errc {
  MissingColumn,
  NonParsableCell,
  InvalidBoolean,
  NegativeCount,
  InvalidSchema,
  InvalidArgument,
  DatasetTooSmall,
  NodeSetMismatch,
  TooManyExtensions,
  NoExtension,
  SingleClassTraining,
  FeatureMismatch,
  NoPositivesInGroup,
  DegenerateGroups,
  UngeneratableDistribution,
  Io,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonParsableCell: return "NonParsableCell";
    case Errc::InvalidBoolean: return "InvalidBoolean";
    case Errc::NegativeCount: return "NegativeCount";
    case Errc::InvalidSchema: return "InvalidSchema";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DatasetTooSmall: return "DatasetTooSmall";
    case Errc::NodeSetMismatch: return "NodeSetMismatch";
    case Errc::TooManyExtensions: return "TooManyExtensions";
    case Errc::NoExtension: return "NoExtension";
    case Errc::SingleClassTraining: return "SingleClassTraining";
    case Errc::FeatureMismatch: return "FeatureMismatch";
    case Errc::NoPositivesInGroup: return "NoPositivesInGroup";
    case Errc::DegenerateGroups: return "DegenerateGroups";
    case Errc::UngeneratableDistribution: return "UngeneratableDistribution";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

// All recoverable failures are reported through this type; code() lets
// callers branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

}  // namespace fairaudit
