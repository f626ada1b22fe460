#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psbounds {

enum class Errc {
  MissingColumn,
  BadValue,
  OutcomePresentWhenUnselected,
  NonpositiveWeight,
  InvalidObservation,
  EmptyDataset,
  EmptyCell,
  NoSelectedInCell,
  NoSelectedObservations,
  EmptySample,
  DegenerateTrim,
  InvalidShare,
  StratumNotInCell,
  ZeroDenominator,
  ZeroPi2,
  UnsupportedStratum,
  RegimeNotApplicable,
  NonPSDCovariance,
  DegenerateSE,
  DegenerateResample,
  InvalidArgument,
  RankDeficientDesign,
  DegeneratePredictions,
  NoValidGroups,
  InvalidThresholds,
  InvalidConfig,
  IoError,
};

inline std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadValue: return "BadValue";
    case Errc::OutcomePresentWhenUnselected: return "OutcomePresentWhenUnselected";
    case Errc::NonpositiveWeight: return "NonpositiveWeight";
    case Errc::InvalidObservation: return "InvalidObservation";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyCell: return "EmptyCell";
    case Errc::NoSelectedInCell: return "NoSelectedInCell";
    case Errc::NoSelectedObservations: return "NoSelectedObservations";
    case Errc::EmptySample: return "EmptySample";
    case Errc::DegenerateTrim: return "DegenerateTrim";
    case Errc::InvalidShare: return "InvalidShare";
    case Errc::StratumNotInCell: return "StratumNotInCell";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::ZeroPi2: return "ZeroPi2";
    case Errc::UnsupportedStratum: return "UnsupportedStratum";
    case Errc::RegimeNotApplicable: return "RegimeNotApplicable";
    case Errc::NonPSDCovariance: return "NonPSDCovariance";
    case Errc::DegenerateSE: return "DegenerateSE";
    case Errc::DegenerateResample: return "DegenerateResample";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::RankDeficientDesign: return "RankDeficientDesign";
    case Errc::DegeneratePredictions: return "DegeneratePredictions";
    case Errc::NoValidGroups: return "NoValidGroups";
    case Errc::InvalidThresholds: return "InvalidThresholds";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every library failure is reported through this type; `code()` is stable,
/// `what()` carries the human-readable detail. Row numbers, where present,
/// are 1-based data rows (the header is not counted).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail, long row = -1, std::string column = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        row_(row),
        column_(std::move(column)) {}

  Errc code() const noexcept { return code_; }
  long row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  Errc code_;
  long row_;
  std::string column_;
};

}  // namespace psbounds
