#pragma once

// Tighter bounds under mean dominance across strata.
//
//   md0: untreated means of T1 and T2 are at least those of T4 and T12.
//   md1: treated means are ordered T1 >= T2 >= T4 >= T12.
//
// md0 only moves T4 and T12 (whose untreated means are otherwise bounded by
// the support); md1 moves every stratum.

#include <algorithm>
#include <cmath>
#include <string>

#include "psbounds/bounds.hpp"
#include "psbounds/cells.hpp"
#include "psbounds/data.hpp"
#include "psbounds/error.hpp"
#include "psbounds/strata.hpp"
#include "psbounds/variance.hpp"

namespace psbounds {

struct DominanceRegime {
  bool md0 = false;
  bool md1 = false;

  Regime regime() const {
    if (md0 && md1) return Regime::Md0Md1;
    if (md0) return Regime::Md0;
    if (md1) return Regime::Md1;
    return Regime::Basic;
  }

  static DominanceRegime from(Regime r) {
    return {r == Regime::Md0 || r == Regime::Md0Md1, r == Regime::Md1 || r == Regime::Md0Md1};
  }
};

inline TypeBounds ate_bounds_md(const BoundsInputs& in, StratumId stratum, DominanceRegime regime) {
  using bounds_detail::make_term;
  using K = TreatedKind;
  if (!regime.md0 && !regime.md1)
    throw Error(Errc::RegimeNotApplicable, "no dominance assumption selected");
  if (stratum == StratumId::T16)
    throw Error(Errc::RegimeNotApplicable, "T16 is never observed under any regime");

  // md0 alone leaves the point-identified strata untouched.
  if (!regime.md1 && (stratum == StratumId::T1 || stratum == StratumId::T2)) {
    TypeBounds b = ate_bounds_basic(in, stratum);
    b.regime = regime.regime();
    return b;
  }

  TypeBounds b;
  b.stratum = stratum;
  b.regime = regime.regime();
  switch (stratum) {
    case StratumId::T1:
      for (int z = 0; z < 2; ++z) {
        b.lower_terms.push_back(make_term(in, {K::CellMean, StratumId::T1, z}, UntreatedTerm::Y0Type1));
        b.upper_terms.push_back(make_term(in, {K::UpperTrim, StratumId::T1, z}, UntreatedTerm::Y0Type1));
      }
      break;
    case StratumId::T2:
      for (int z = 0; z < 2; ++z) {
        b.lower_terms.push_back(make_term(in, {K::LowerTrim, StratumId::T2, z}, UntreatedTerm::Y0Type2));
        b.upper_terms.push_back(make_term(in, {K::UpperTrim, StratumId::T1, z}, UntreatedTerm::Y0Type2));
      }
      break;
    case StratumId::T4: {
      const UntreatedTerm below = regime.md0 ? UntreatedTerm::Y0Min : UntreatedTerm::SupportUpper;
      for (int z = 0; z < 2; ++z)
        b.lower_terms.push_back(make_term(in, {K::LowerTrim, StratumId::T4, z}, below));
      if (regime.md1) {
        b.upper_terms.push_back(make_term(in, {K::CellMean, StratumId::T4, 0}, UntreatedTerm::SupportLower));
        for (int z = 0; z < 2; ++z)
          b.upper_terms.push_back(make_term(in, {K::UpperTrim, StratumId::T1, z}, UntreatedTerm::SupportLower));
      } else {
        for (int z = 0; z < 2; ++z)
          b.upper_terms.push_back(make_term(in, {K::UpperTrim, StratumId::T4, z}, UntreatedTerm::SupportLower));
      }
      break;
    }
    case StratumId::T12: {
      const UntreatedTerm below = regime.md0 ? UntreatedTerm::Y0Min : UntreatedTerm::SupportUpper;
      b.lower_terms.push_back(make_term(in, {K::LowerTrim, StratumId::T12, 1}, below));
      if (regime.md1) {
        for (int z = 0; z < 2; ++z)
          b.upper_terms.push_back(make_term(in, {K::CellMean, StratumId::T12, z}, UntreatedTerm::SupportLower));
      } else {
        b.upper_terms.push_back(make_term(in, {K::UpperTrim, StratumId::T12, 1}, UntreatedTerm::SupportLower));
      }
      break;
    }
    case StratumId::T16: break;
  }
  bounds_detail::finish(in, b);
  return b;
}

inline TypeBounds ate_bounds_md(const Dataset& ds, StratumId stratum, const ProportionSet& props,
                                DominanceRegime regime) {
  CellTable cells(ds);
  return ate_bounds_md(make_inputs(cells, props), stratum, regime);
}

/// Dispatches on the regime.
inline TypeBounds type_bounds(const BoundsInputs& in, StratumId stratum, Regime regime) {
  if (regime == Regime::Basic) return ate_bounds_basic(in, stratum);
  return ate_bounds_md(in, stratum, DominanceRegime::from(regime));
}

struct DominanceCheck {
  double y0_t1 = 0.0;
  double y0_t2 = 0.0;
  double se_t1 = 0.0;
  double se_t2 = 0.0;
  double cov = 0.0;          // sampling covariance of the two estimates
  double difference = 0.0;   // y0_t1 - y0_t2
  double se_difference = 0.0;
  bool t1_larger = false;
};

/// Compares the two point-identified untreated means, the only direct
/// evidence on untreated mean dominance. Uses the linearized covariance.
inline DominanceCheck mean_dominance_check(const CellTable& cells, const ProportionSet& props,
                                           const VarianceReport& inference) {
  if (!(props.pi2 > 0.0)) throw Error(Errc::ZeroPi2, "T2 share is not positive");
  DominanceCheck c;
  c.y0_t1 = y0_type1(cells);
  c.y0_t2 = y0_type2(cells, props);
  const double n = static_cast<double>(inference.n);
  c.se_t1 = std::sqrt(inference.v_y0_t1 / n);
  c.se_t2 = std::sqrt(inference.v_y0_t2 / n);
  c.cov = inference.cov_y0 / n;
  c.difference = c.y0_t1 - c.y0_t2;
  c.se_difference = std::sqrt(std::max(0.0, (inference.v_y0_t1 + inference.v_y0_t2 - 2.0 * inference.cov_y0) / n));
  c.t1_larger = c.difference > 0.0;
  return c;
}

inline DominanceCheck mean_dominance_check(const Dataset& ds, const ProportionSet& props,
                                           const VarianceReport& inference) {
  return mean_dominance_check(CellTable(ds), props, inference);
}

}  // namespace psbounds
