#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "psbounds/cells.hpp"
#include "psbounds/data.hpp"
#include "psbounds/error.hpp"

namespace psbounds {

/// The five principal strata left by independence, threshold crossing and the
/// two monotonicity assumptions. Labels list S(1,1) S(1,0) S(0,1) S(0,0) with
/// E = selected and N = not selected.
enum class StratumId { T1, T2, T4, T12, T16 };

inline constexpr std::array<StratumId, 5> kAllStrata{StratumId::T1, StratumId::T2, StratumId::T4,
                                                     StratumId::T12, StratumId::T16};
inline constexpr std::array<StratumId, 4> kBoundedStrata{StratumId::T1, StratumId::T2, StratumId::T4,
                                                         StratumId::T12};

inline std::string_view to_string(StratumId t) {
  switch (t) {
    case StratumId::T1: return "T1";
    case StratumId::T2: return "T2";
    case StratumId::T4: return "T4";
    case StratumId::T12: return "T12";
    case StratumId::T16: return "T16";
  }
  return "?";
}

inline std::string_view pattern_label(StratumId t) {
  switch (t) {
    case StratumId::T1: return "EEEE";
    case StratumId::T2: return "EENE";
    case StratumId::T4: return "EENN";
    case StratumId::T12: return "ENNN";
    case StratumId::T16: return "NNNN";
  }
  return "?";
}

inline std::optional<StratumId> parse_stratum(std::string_view s) {
  for (auto t : kAllStrata)
    if (s == to_string(t) || s == pattern_label(t)) return t;
  if (s == "1") return StratumId::T1;
  if (s == "2") return StratumId::T2;
  if (s == "4") return StratumId::T4;
  if (s == "12") return StratumId::T12;
  if (s == "16") return StratumId::T16;
  return std::nullopt;
}

/// Potential selection S(d, z) of a stratum.
inline int potential_selection(StratumId t, int d, int z) {
  const char* p = pattern_label(t).data();
  // pattern order: (1,1), (1,0), (0,1), (0,0)
  const int pos = d == 1 ? (z == 1 ? 0 : 1) : (z == 1 ? 2 : 3);
  return p[pos] == 'E' ? 1 : 0;
}

/// Whether members of `t` appear in the observed cell (S = 1, D = d, Z = z).
inline bool observed_in(StratumId t, int d, int z) { return potential_selection(t, d, z) == 1; }

struct ProportionSet {
  double pi1 = 0.0;
  double pi2 = 0.0;
  double pi4 = 0.0;
  double pi12 = 0.0;
  double pi16 = 0.0;

  double share(StratumId t) const {
    switch (t) {
      case StratumId::T1: return pi1;
      case StratumId::T2: return pi2;
      case StratumId::T4: return pi4;
      case StratumId::T12: return pi12;
      case StratumId::T16: return pi16;
    }
    return 0.0;
  }

  /// Set when any share is negative: a necessary monotonicity condition failed.
  bool has_negative() const { return pi1 < 0 || pi2 < 0 || pi4 < 0 || pi12 < 0 || pi16 < 0; }
};

inline ProportionSet stratum_proportions(const CellTable& t) {
  const double p01 = t.p_select(0, 1), p00 = t.p_select(0, 0);
  const double p10 = t.p_select(1, 0), p11 = t.p_select(1, 1);
  return {p01, p00 - p01, p10 - p00, p11 - p10, 1.0 - p11};
}

inline ProportionSet stratum_proportions(const Dataset& ds) { return stratum_proportions(CellTable(ds)); }

/// Share of stratum `t` among the selected members of cell (d, z).
inline double cell_share(const ProportionSet& props, StratumId t, int d, int z) {
  if (!observed_in(t, d, z))
    throw Error(Errc::StratumNotInCell, std::string(to_string(t)) + " is not observed in cell " +
                                            CellTable::label(d, z));
  double denom = 0.0;
  for (auto u : kAllStrata)
    if (observed_in(u, d, z)) denom += props.share(u);
  if (!(denom > 0.0))
    throw Error(Errc::ZeroDenominator, "selected mass of cell " + CellTable::label(d, z) + " is not positive");
  return props.share(t) / denom;
}

struct MonotonicityReport {
  double margin_d_z0 = 0.0;  // P(S=1|1,0) - P(S=1|0,0)
  double margin_d_z1 = 0.0;  // P(S=1|1,1) - P(S=1|0,1)
  double margin_z_d0 = 0.0;  // P(S=1|0,0) - P(S=1|0,1)
  double margin_z_d1 = 0.0;  // P(S=1|1,1) - P(S=1|1,0)
  bool pass = false;
};

inline MonotonicityReport monotonicity_diagnostics(const CellTable& t) {
  const double p01 = t.p_select(0, 1), p00 = t.p_select(0, 0);
  const double p10 = t.p_select(1, 0), p11 = t.p_select(1, 1);
  MonotonicityReport r{p10 - p00, p11 - p01, p00 - p01, p11 - p10, false};
  r.pass = r.margin_d_z0 >= 0 && r.margin_d_z1 >= 0 && r.margin_z_d0 >= 0 && r.margin_z_d1 >= 0;
  return r;
}

inline MonotonicityReport monotonicity_diagnostics(const Dataset& ds) {
  return monotonicity_diagnostics(CellTable(ds));
}

}  // namespace psbounds
