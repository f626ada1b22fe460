#pragma once

// Sharp bounds on stratum-specific average treatment effects.
//
// Every bound is the max (lower side) or min (upper side) over a small set of
// terms, each the difference between an estimate of a treated mean and an
// estimate of an untreated mean. Keeping the terms around lets inference
// attach a standard error to each one and reuse the same max/min structure.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psbounds/cells.hpp"
#include "psbounds/data.hpp"
#include "psbounds/error.hpp"
#include "psbounds/strata.hpp"
#include "psbounds/trimming.hpp"

namespace psbounds {

struct Interval {
  double lb = 0.0;
  double ub = 0.0;

  bool crossed() const { return lb > ub; }
  bool contains(double v) const { return lb <= v && v <= ub; }
  double width() const { return ub - lb; }
};

struct SupportBounds {
  double y_lb = 0.0;
  double y_ub = 0.0;
};

enum class Regime { Basic, Md0, Md1, Md0Md1 };

inline constexpr std::array<Regime, 4> kAllRegimes{Regime::Basic, Regime::Md0, Regime::Md1, Regime::Md0Md1};

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Basic: return "basic";
    case Regime::Md0: return "md0";
    case Regime::Md1: return "md1";
    case Regime::Md0Md1: return "md0md1";
  }
  return "?";
}

inline std::optional<Regime> parse_regime(std::string_view s) {
  for (auto r : kAllRegimes)
    if (s == to_string(r)) return r;
  if (s == "md0+md1") return Regime::Md0Md1;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Terms

enum class TreatedKind { LowerTrim, UpperTrim, CellMean };

/// A functional of the selected treated outcomes in cell (D = 1, Z = z). Trims
/// use the within-cell share of `share_of`.
struct TreatedTerm {
  TreatedKind kind = TreatedKind::CellMean;
  StratumId share_of = StratumId::T1;
  int z = 1;
};

/// Y0Min is min(y0_T1, y0_T2), the ceiling on the untreated means of the
/// never-observed-untreated strata under untreated mean dominance.
enum class UntreatedTerm { Y0Type1, Y0Type2, Y0Min, SupportLower, SupportUpper };

inline std::string_view to_string(UntreatedTerm u) {
  switch (u) {
    case UntreatedTerm::Y0Type1: return "y0_T1";
    case UntreatedTerm::Y0Type2: return "y0_T2";
    case UntreatedTerm::Y0Min: return "min(y0_T1,y0_T2)";
    case UntreatedTerm::SupportLower: return "Y_LB";
    case UntreatedTerm::SupportUpper: return "Y_UB";
  }
  return "?";
}

inline std::string describe(const TreatedTerm& t) {
  std::string s;
  switch (t.kind) {
    case TreatedKind::LowerTrim: s = "lower_trim(" + std::string(to_string(t.share_of)) + ","; break;
    case TreatedKind::UpperTrim: s = "upper_trim(" + std::string(to_string(t.share_of)) + ","; break;
    case TreatedKind::CellMean: s = "cell_mean("; break;
  }
  return s + "z=" + std::to_string(t.z) + ")";
}

struct BoundTerm {
  TreatedTerm treated;
  UntreatedTerm untreated = UntreatedTerm::Y0Type1;
  double treated_value = 0.0;
  double untreated_value = 0.0;

  double value() const { return treated_value - untreated_value; }
};

inline std::string describe(const BoundTerm& t) {
  return describe(t.treated) + " - " + std::string(to_string(t.untreated));
}

// ---------------------------------------------------------------------------
// Inputs shared by all strata and regimes

/// Everything the bound formulas read. Built from a sample (CellTable) or, in
/// simulation, from population quantities. The treated samples are borrowed.
struct BoundsInputs {
  ProportionSet props;
  std::array<const WeightedSample*, 2> treated_cells{nullptr, nullptr};  // selected (D=1, Z=z)
  SupportBounds support;
  std::optional<double> y0_t1;
  std::optional<double> y0_t2;
  Errc y0_t1_error = Errc::NoSelectedInCell;
  Errc y0_t2_error = Errc::ZeroPi2;

  const WeightedSample& treated_sample(int z) const {
    if (treated_cells[z] == nullptr || treated_cells[z]->empty())
      throw Error(Errc::NoSelectedInCell, "no selected observations in cell " + CellTable::label(1, z));
    return *treated_cells[z];
  }

  double y0_type1() const {
    if (!y0_t1) throw Error(y0_t1_error, "untreated mean of T1 is not identified");
    return *y0_t1;
  }
  double y0_type2() const {
    if (!y0_t2) throw Error(y0_t2_error, "untreated mean of T2 is not identified");
    return *y0_t2;
  }

  double untreated(UntreatedTerm u) const {
    switch (u) {
      case UntreatedTerm::Y0Type1: return y0_type1();
      case UntreatedTerm::Y0Type2: return y0_type2();
      case UntreatedTerm::Y0Min: return std::min(y0_type1(), y0_type2());
      case UntreatedTerm::SupportLower: return support.y_lb;
      case UntreatedTerm::SupportUpper: return support.y_ub;
    }
    return 0.0;
  }

  /// Within-cell share used to trim cell (D=1, Z=z) for stratum t.
  double trim_share(StratumId t, int z) const { return cell_share(props, t, 1, z); }

  TrimSummary trim(const TreatedTerm& t) const {
    const auto& s = treated_sample(t.z);
    const double q = trim_share(t.share_of, t.z);
    return t.kind == TreatedKind::LowerTrim ? s.lower(q) : s.upper(q);
  }

  double treated(const TreatedTerm& t) const {
    if (t.kind == TreatedKind::CellMean) return treated_sample(t.z).mean();
    return trim(t).mean;
  }
};

// ---------------------------------------------------------------------------
// Point estimators

inline double y0_type1(const CellTable& cells) { return cells.outcomes(0, 1).mean(); }
inline double y0_type1(const Dataset& ds) { return y0_type1(CellTable(ds)); }

/// Untreated mean of T2, solved from the (D=0, Z=0) mixture of T1 and T2.
inline double y0_type2(const CellTable& cells, const ProportionSet& props) {
  if (!(props.pi2 > 0.0)) throw Error(Errc::ZeroPi2, "T2 share is not positive");
  const double m00 = cells.outcomes(0, 0).mean();
  const double m01 = cells.outcomes(0, 1).mean();
  return (m00 * (props.pi1 + props.pi2) - m01 * props.pi1) / props.pi2;
}
inline double y0_type2(const Dataset& ds, const ProportionSet& props) { return y0_type2(CellTable(ds), props); }

inline SupportBounds support_bounds(const CellTable& cells) { return {cells.outcome_min(), cells.outcome_max()}; }
inline SupportBounds support_bounds(const Dataset& ds) { return support_bounds(CellTable(ds)); }

/// Builds the shared inputs from a sample. Failures of the untreated means
/// are deferred until a bound actually needs them.
inline BoundsInputs make_inputs(const CellTable& cells, const ProportionSet& props) {
  BoundsInputs in;
  in.props = props;
  for (int z = 0; z < 2; ++z)
    if (cells.cell(1, z).n_selected > 0) in.treated_cells[z] = &cells.cell(1, z).outcomes;
  in.support = support_bounds(cells);
  try {
    in.y0_t1 = y0_type1(cells);
  } catch (const Error& e) {
    in.y0_t1_error = e.code();
  }
  try {
    in.y0_t2 = y0_type2(cells, in.props);
  } catch (const Error& e) {
    in.y0_t2_error = e.code();
  }
  return in;
}

inline BoundsInputs make_inputs(const CellTable& cells) { return make_inputs(cells, stratum_proportions(cells)); }

// ---------------------------------------------------------------------------
// Bounds

struct TypeBounds {
  StratumId stratum = StratumId::T1;
  Regime regime = Regime::Basic;
  /// Bounds on the treated mean of the stratum contributed by each Z value;
  /// absent where the stratum leaves no trace, infinite on a side with no term.
  std::array<std::optional<Interval>, 2> per_z;
  /// Within-cell share of the stratum in (D=1, Z=z), where it is observed.
  std::array<std::optional<double>, 2> share;
  Interval y0;            // untreated mean; lb == ub when point identified
  bool y0_point = false;
  Interval ate;
  std::vector<BoundTerm> lower_terms;  // ate.lb = max over these
  std::vector<BoundTerm> upper_terms;  // ate.ub = min over these

  bool crossed() const { return ate.crossed(); }

  std::size_t binding_lower() const { return argbest(lower_terms, true); }
  std::size_t binding_upper() const { return argbest(upper_terms, false); }

 private:
  static std::size_t argbest(const std::vector<BoundTerm>& terms, bool largest) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < terms.size(); ++i) {
      const double v = terms[i].value(), b = terms[best].value();
      if (largest ? v > b : v < b) best = i;
    }
    return best;
  }
};

namespace bounds_detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline BoundTerm make_term(const BoundsInputs& in, TreatedTerm t, UntreatedTerm u) {
  return {t, u, in.treated(t), in.untreated(u)};
}

/// Fills ate, per_z and y0 from the term lists. Every lower term shares one
/// untreated component and so does every upper term.
inline void finish(const BoundsInputs& in, TypeBounds& b) {
  for (int z = 0; z < 2; ++z)
    if (observed_in(b.stratum, 1, z)) b.share[z] = in.trim_share(b.stratum, z);

  b.ate = {-kInf, kInf};
  for (const auto& t : b.lower_terms) b.ate.lb = std::max(b.ate.lb, t.value());
  for (const auto& t : b.upper_terms) b.ate.ub = std::min(b.ate.ub, t.value());

  for (const auto& t : b.lower_terms) {
    auto& iv = b.per_z[t.treated.z];
    if (!iv) iv = Interval{-kInf, kInf};
    iv->lb = std::max(iv->lb, t.treated_value);
  }
  for (const auto& t : b.upper_terms) {
    auto& iv = b.per_z[t.treated.z];
    if (!iv) iv = Interval{-kInf, kInf};
    iv->ub = std::min(iv->ub, t.treated_value);
  }
  b.y0 = {b.upper_terms.front().untreated_value, b.lower_terms.front().untreated_value};
  b.y0_point = b.y0.lb == b.y0.ub && b.lower_terms.front().untreated == b.upper_terms.front().untreated;
}

inline std::vector<int> treated_z_values(StratumId t) {
  std::vector<int> zs;
  for (int z = 0; z < 2; ++z)
    if (observed_in(t, 1, z)) zs.push_back(z);
  return zs;
}

}  // namespace bounds_detail

/// Trimming bounds on the treated mean of `stratum` from cell (D=1, Z=z).
inline Interval treated_bounds(const BoundsInputs& in, StratumId stratum, int z) {
  if (!observed_in(stratum, 1, z))
    throw Error(Errc::StratumNotInCell,
                std::string(to_string(stratum)) + " is not observed in cell " + CellTable::label(1, z));
  const double q = in.trim_share(stratum, z);
  const auto& s = in.treated_sample(z);
  return {s.lower(q).mean, s.upper(q).mean};
}

inline Interval treated_bounds(const Dataset& ds, StratumId stratum, int z, const ProportionSet& props) {
  CellTable cells(ds);
  return treated_bounds(make_inputs(cells, props), stratum, z);
}

/// Bounds using only independence, threshold-crossing selection and the two
/// monotonicity conditions. T16 has no observed cell and is rejected.
inline TypeBounds ate_bounds_basic(const BoundsInputs& in, StratumId stratum) {
  using bounds_detail::make_term;
  if (stratum == StratumId::T16)
    throw Error(Errc::UnsupportedStratum, "T16 is never observed; its bounds are the support constant");
  TypeBounds b;
  b.stratum = stratum;
  b.regime = Regime::Basic;

  UntreatedTerm for_lower = UntreatedTerm::SupportUpper, for_upper = UntreatedTerm::SupportLower;
  if (stratum == StratumId::T1) for_lower = for_upper = UntreatedTerm::Y0Type1;
  if (stratum == StratumId::T2) for_lower = for_upper = UntreatedTerm::Y0Type2;

  for (int z : bounds_detail::treated_z_values(stratum)) {
    b.lower_terms.push_back(make_term(in, {TreatedKind::LowerTrim, stratum, z}, for_lower));
    b.upper_terms.push_back(make_term(in, {TreatedKind::UpperTrim, stratum, z}, for_upper));
  }
  bounds_detail::finish(in, b);
  return b;
}

inline TypeBounds ate_bounds_basic(const Dataset& ds, StratumId stratum, const ProportionSet& props) {
  CellTable cells(ds);
  return ate_bounds_basic(make_inputs(cells, props), stratum);
}

/// The T16 constant: the difference of two unknown means on the observed support.
inline Interval support_constant_bounds(const SupportBounds& s) { return {s.y_lb - s.y_ub, s.y_ub - s.y_lb}; }

}  // namespace psbounds
