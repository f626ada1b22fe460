#pragma once

// Analytic asymptotic variances.
//
// Two routes live here. The closed forms (var_y0_t1, var_y0_t2,
// var_trim_bound, cov_across_z) are the just-identified GMM sandwich results
// written out per estimator. The linearization below expresses each estimator
// as a weighted sum of independent first-order error blocks, which gives the
// same diagonal and also the off-diagonal entries needed for intersection
// inference over several terms at once.
//
// Variances are asymptotic (for sqrt(n) times the error); standard errors are
// sqrt(V / n) with n the row count. Population moments are replaced by weighted
// sample analogues.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psbounds/bounds.hpp"
#include "psbounds/cells.hpp"
#include "psbounds/data.hpp"
#include "psbounds/error.hpp"
#include "psbounds/strata.hpp"

namespace psbounds {

enum class Side { Lower, Upper };

inline std::string_view to_string(Side s) { return s == Side::Lower ? "LB" : "UB"; }

namespace variance_detail {

/// Cells (hi, lo) whose selection rates difference into the stratum share;
/// lo is absent for T1 whose share is a single rate.
struct ShareCells {
  int hi_d, hi_z;
  std::optional<std::pair<int, int>> lo;
};

inline ShareCells share_cells(StratumId t) {
  switch (t) {
    case StratumId::T1: return {0, 1, std::nullopt};
    case StratumId::T2: return {0, 0, std::pair{0, 1}};
    case StratumId::T4: return {1, 0, std::pair{0, 0}};
    case StratumId::T12: return {1, 1, std::pair{1, 0}};
    case StratumId::T16: break;
  }
  throw Error(Errc::UnsupportedStratum, "T16 has no share variance");
}

/// Asymptotic variance of an estimated selection rate: p(1-p) / E[1{cell}].
inline double rate_variance(const CellTable& cells, int d, int z) {
  const double p = cells.p_select(d, z);
  return p * (1.0 - p) / cells.mass(d, z);
}

inline TrimSummary trim_summary(const CellTable& cells, int z, Side side, double share) {
  const auto& s = cells.outcomes(1, z);
  return side == Side::Lower ? s.lower(share) : s.upper(share);
}

}  // namespace variance_detail

// ---------------------------------------------------------------------------
// Closed forms

/// Variance of the untreated T1 mean: Var(Y | S=1, D=0, Z=1) / E[S(1-D)Z].
inline double var_y0_t1(const CellTable& cells) {
  return cells.outcomes(0, 1).variance() / cells.selected_mass(0, 1);
}
inline double var_y0_t1(const Dataset& ds) { return var_y0_t1(CellTable(ds)); }

struct Y0T2Variance {
  double variance = 0.0;
  /// The covariance with the T1 mean in the printed form, pi1/pi2 * V_T1.
  double cov_with_t1 = 0.0;
};

/// Four-term delta-method variance of the untreated T2 mean: two outcome
/// sampling terms and two selection-rate terms.
inline Y0T2Variance var_y0_t2(const CellTable& cells, const ProportionSet& props) {
  if (!(props.pi2 > 0.0)) throw Error(Errc::ZeroPi2, "T2 share is not positive");
  const double a1 = props.pi1, a2 = props.pi1 + props.pi2, p2 = props.pi2;
  const auto& s01 = cells.outcomes(0, 1);
  const auto& s00 = cells.outcomes(0, 0);
  const double m01 = s01.mean(), m00 = s00.mean();
  const double mu02 = (m00 * a2 - m01 * a1) / p2;
  const double e01 = cells.selected_mass(0, 1), e00 = cells.selected_mass(0, 0);
  Y0T2Variance out;
  out.variance = a1 * a1 * s01.variance() / (p2 * p2 * e01) + a2 * a2 * s00.variance() / (p2 * p2 * e00) +
                 a1 * (1.0 - a1) * (mu02 - m01) * (mu02 - m01) / (p2 * p2 * cells.mass(0, 1)) +
                 a2 * (1.0 - a2) * (mu02 - m00) * (mu02 - m00) / (p2 * p2 * cells.mass(0, 0));
  out.cov_with_t1 = a1 * s01.variance() / (p2 * e01);
  return out;
}
inline Y0T2Variance var_y0_t2(const Dataset& ds, const ProportionSet& props) {
  return var_y0_t2(CellTable(ds), props);
}

/// Variance of a trimmed-mean bound on the treated mean of `stratum` from cell
/// (D=1, Z=z): trimmed-set variance, threshold gap and share-estimation terms.
inline double var_trim_bound(const CellTable& cells, StratumId stratum, int z, Side side,
                             const ProportionSet& props) {
  using namespace variance_detail;
  if (!observed_in(stratum, 1, z))
    throw Error(Errc::StratumNotInCell,
                std::string(to_string(stratum)) + " is not observed in cell " + CellTable::label(1, z));
  const double p0 = cell_share(props, stratum, 1, z);
  const TrimSummary tr = trim_summary(cells, z, side, p0);  // validates p0
  const double e_c = cells.selected_mass(1, z);
  const double gap = tr.threshold - tr.mean;
  const double pi_t = props.share(stratum);

  const double p1z = cells.p_select(1, z);
  double vp = (1.0 - p1z) / (p1z * cells.mass(1, z));
  const auto sc = share_cells(stratum);
  vp += rate_variance(cells, sc.hi_d, sc.hi_z) / (pi_t * pi_t);
  if (sc.lo) vp += rate_variance(cells, sc.lo->first, sc.lo->second) / (pi_t * pi_t);
  vp *= p0 * p0;

  return tr.variance / (e_c * p0) + gap * gap * (1.0 - p0) / (e_c * p0) + gap * gap / (p0 * p0) * vp;
}
inline double var_trim_bound(const Dataset& ds, StratumId stratum, int z, Side side, const ProportionSet& props) {
  return var_trim_bound(CellTable(ds), stratum, z, side, props);
}

/// Covariance between the Z=1 and Z=0 trimmed bounds of one stratum, which
/// share the estimated rates entering the stratum share.
inline double cov_across_z(const CellTable& cells, StratumId stratum, Side side, const ProportionSet& props) {
  using namespace variance_detail;
  if (!observed_in(stratum, 1, 0) || !observed_in(stratum, 1, 1))
    throw Error(Errc::StratumNotInCell, std::string(to_string(stratum)) + " is not observed at both Z values");
  double gaps = 1.0;
  for (int z = 0; z < 2; ++z) {
    const TrimSummary tr = trim_summary(cells, z, side, cell_share(props, stratum, 1, z));
    gaps *= tr.threshold - tr.mean;
  }
  const double pi_t = props.share(stratum);
  const auto sc = share_cells(stratum);
  double v = rate_variance(cells, sc.hi_d, sc.hi_z);
  if (sc.lo) v += rate_variance(cells, sc.lo->first, sc.lo->second);
  return gaps * v / (pi_t * pi_t);
}
inline double cov_across_z(const Dataset& ds, StratumId stratum, Side side, const ProportionSet& props) {
  return cov_across_z(CellTable(ds), stratum, side, props);
}

// ---------------------------------------------------------------------------
// Linearization

enum class Functional { Mean, LowerTrim, UpperTrim };

/// coef * (error of functional f of the selected outcomes in cell (d, z)).
struct OutcomeLoading {
  int d = 0, z = 0;
  Functional f = Functional::Mean;
  double share = 1.0;
  double coef = 1.0;
};

/// First-order error of an estimator as loadings on independent blocks: the
/// selected-outcome distribution of each cell, the selection rate of each
/// cell, and, for trimmed treated bounds, the treated-cell rate that
/// normalizes the stratum share. The last is kept as its own block even when
/// the same cell also enters the share numerator.
struct Linearization {
  std::vector<OutcomeLoading> outcome;
  std::array<double, 4> rate{};        // indexed 2d + z
  std::array<double, 2> normalizer{};  // treated cell (1, z)

  Linearization& operator+=(const Linearization& o) {
    outcome.insert(outcome.end(), o.outcome.begin(), o.outcome.end());
    for (int i = 0; i < 4; ++i) rate[i] += o.rate[i];
    for (int i = 0; i < 2; ++i) normalizer[i] += o.normalizer[i];
    return *this;
  }
  Linearization& operator*=(double c) {
    for (auto& l : outcome) l.coef *= c;
    for (auto& r : rate) r *= c;
    for (auto& r : normalizer) r *= c;
    return *this;
  }
};

inline Linearization operator-(Linearization a, Linearization b) {
  b *= -1.0;
  a += b;
  return a;
}

class Linearizer {
 public:
  Linearizer(const CellTable& cells, const ProportionSet& props) : cells_(cells), props_(props) {}

  const CellTable& cells() const { return cells_; }
  const ProportionSet& props() const { return props_; }

  Linearization treated(const TreatedTerm& t) const {
    Linearization lin;
    if (t.kind == TreatedKind::CellMean) {
      lin.outcome.push_back({1, t.z, Functional::Mean, 1.0, 1.0});
      return lin;
    }
    const StratumId st = t.share_of;
    const double p0 = cell_share(props_, st, 1, t.z);
    const auto& s = cells_.outcomes(1, t.z);
    const TrimSummary tr = t.kind == TreatedKind::LowerTrim ? s.lower(p0) : s.upper(p0);
    const double gap = tr.threshold - tr.mean;
    lin.outcome.push_back(
        {1, t.z, t.kind == TreatedKind::LowerTrim ? Functional::LowerTrim : Functional::UpperTrim, p0, 1.0});
    // d(mean)/d(share) = gap / share; share = pi_T / p(1, z)
    const double pi_t = props_.share(st);
    const auto sc = variance_detail::share_cells(st);
    lin.normalizer[t.z] = -gap / cells_.p_select(1, t.z);
    lin.rate[2 * sc.hi_d + sc.hi_z] += gap / pi_t;
    if (sc.lo) lin.rate[2 * sc.lo->first + sc.lo->second] -= gap / pi_t;
    return lin;
  }

  /// Support terms have no linearization (sample extremes); returns nullopt.
  std::optional<Linearization> untreated(UntreatedTerm u) const {
    Linearization lin;
    switch (u) {
      case UntreatedTerm::Y0Type1:
        lin.outcome.push_back({0, 1, Functional::Mean, 1.0, 1.0});
        return lin;
      case UntreatedTerm::Y0Type2: {
        if (!(props_.pi2 > 0.0)) throw Error(Errc::ZeroPi2, "T2 share is not positive");
        const double a1 = props_.pi1, a2 = props_.pi1 + props_.pi2, p2 = props_.pi2;
        const double m01 = cells_.outcomes(0, 1).mean(), m00 = cells_.outcomes(0, 0).mean();
        const double mu02 = (m00 * a2 - m01 * a1) / p2;
        lin.outcome.push_back({0, 1, Functional::Mean, 1.0, -a1 / p2});
        lin.outcome.push_back({0, 0, Functional::Mean, 1.0, a2 / p2});
        lin.rate[2 * 0 + 1] = (mu02 - m01) / p2;
        lin.rate[2 * 0 + 0] = (m00 - mu02) / p2;
        return lin;
      }
      case UntreatedTerm::Y0Min: {
        // the binding mean; ties go to T1
        const double m1 = cells_.outcomes(0, 1).mean();
        if (!(props_.pi2 > 0.0)) throw Error(Errc::ZeroPi2, "T2 share is not positive");
        const double a1 = props_.pi1, a2 = props_.pi1 + props_.pi2;
        const double m2 = (cells_.outcomes(0, 0).mean() * a2 - m1 * a1) / props_.pi2;
        return untreated(m2 < m1 ? UntreatedTerm::Y0Type2 : UntreatedTerm::Y0Type1);
      }
      case UntreatedTerm::SupportLower:
      case UntreatedTerm::SupportUpper:
        return std::nullopt;
    }
    return std::nullopt;
  }

  /// Asymptotic covariance of two linearized estimators.
  double covariance(const Linearization& a, const Linearization& b) const {
    double c = 0.0;
    for (const auto& la : a.outcome)
      for (const auto& lb : b.outcome)
        if (la.d == lb.d && la.z == lb.z)
          c += la.coef * lb.coef * functional_covariance(la, lb) / cells_.selected_mass(la.d, la.z);
    for (int d = 0; d < 2; ++d)
      for (int z = 0; z < 2; ++z) {
        const int k = 2 * d + z;
        if (a.rate[k] != 0.0 && b.rate[k] != 0.0)
          c += a.rate[k] * b.rate[k] * variance_detail::rate_variance(cells_, d, z);
      }
    for (int z = 0; z < 2; ++z)
      if (a.normalizer[z] != 0.0 && b.normalizer[z] != 0.0)
        c += a.normalizer[z] * b.normalizer[z] * variance_detail::rate_variance(cells_, 1, z);
    return c;
  }

  double variance(const Linearization& a) const { return covariance(a, a); }

 private:
  // Per-unit variance of a functional: the sandwich diagonal for a trimmed
  // mean with nominal share q, the plain variance for a mean.
  double unit_variance(const OutcomeLoading& l) const {
    const auto& s = cells_.outcomes(l.d, l.z);
    if (l.f == Functional::Mean) return s.variance();
    const TrimSummary tr = l.f == Functional::LowerTrim ? s.lower(l.share) : s.upper(l.share);
    const double gap = tr.threshold - tr.mean;
    return tr.variance / l.share + gap * gap * (1.0 - l.share) / l.share;
  }

  std::vector<double> influence(const OutcomeLoading& l) const {
    const auto& s = cells_.outcomes(l.d, l.z);
    const auto ys = s.sorted_values();
    std::vector<double> out(ys.size());
    if (l.f == Functional::Mean) {
      const double m = s.mean();
      for (std::size_t i = 0; i < ys.size(); ++i) out[i] = ys[i] - m;
      return out;
    }
    const bool lower = l.f == Functional::LowerTrim;
    const TrimSummary tr = lower ? s.lower(l.share) : s.upper(l.share);
    for (std::size_t i = 0; i < ys.size(); ++i) {
      const bool in = lower ? ys[i] <= tr.threshold : ys[i] >= tr.threshold;
      out[i] = (in ? (ys[i] - tr.threshold) / l.share : 0.0) + tr.threshold - tr.mean;
    }
    return out;
  }

  // Same cell, possibly different functionals: the sandwich standard
  // deviations joined by the correlation of the empirical influence values.
  double functional_covariance(const OutcomeLoading& a, const OutcomeLoading& b) const {
    const double va = unit_variance(a), vb = unit_variance(b);
    if (a.f == b.f && a.share == b.share) return va;
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    const auto& s = cells_.outcomes(a.d, a.z);
    const auto w = s.sorted_weights();
    const auto ia = influence(a), ib = influence(b);
    double sw = 0, ma = 0, mb = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      sw += w[i];
      ma += w[i] * ia[i];
      mb += w[i] * ib[i];
    }
    ma /= sw;
    mb /= sw;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      saa += w[i] * (ia[i] - ma) * (ia[i] - ma);
      sbb += w[i] * (ib[i] - mb) * (ib[i] - mb);
      sab += w[i] * (ia[i] - ma) * (ib[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb) * std::sqrt(va * vb);
  }

  const CellTable& cells_;
  ProportionSet props_;
};

// ---------------------------------------------------------------------------
// Report

struct TrimVariance {
  StratumId stratum = StratumId::T1;
  int z = 0;
  Side side = Side::Lower;
  double share = 0.0;
  double variance = 0.0;
};

struct CrossZCovariance {
  StratumId stratum = StratumId::T1;
  Side side = Side::Lower;
  double covariance = 0.0;
};

/// Every closed-form variance that is defined on a dataset. Undefined entries
/// are NaN (or omitted from the lists).
struct VarianceReport {
  std::size_t n = 0;
  double v_y0_t1 = std::numeric_limits<double>::quiet_NaN();
  double v_y0_t2 = std::numeric_limits<double>::quiet_NaN();
  /// Covariance of the two untreated means in the printed closed form.
  double cov_y0_printed = std::numeric_limits<double>::quiet_NaN();
  /// Covariance of the two untreated means from the linearization. The T2
  /// mean loads on the T1 mean with coefficient -pi1/pi2, so this is the
  /// negative of the printed form.
  double cov_y0 = std::numeric_limits<double>::quiet_NaN();
  std::vector<TrimVariance> trims;
  std::vector<CrossZCovariance> cross_z;

  double se(double v) const { return std::sqrt(v / static_cast<double>(n)); }
  double se_y0_t1() const { return se(v_y0_t1); }
  double se_y0_t2() const { return se(v_y0_t2); }

  std::optional<TrimVariance> trim(StratumId t, int z, Side side) const {
    for (const auto& e : trims)
      if (e.stratum == t && e.z == z && e.side == side) return e;
    return std::nullopt;
  }
};

inline VarianceReport variance_report(const CellTable& cells, const ProportionSet& props) {
  VarianceReport r;
  r.n = cells.n();
  try {
    r.v_y0_t1 = var_y0_t1(cells);
  } catch (const Error&) {
  }
  try {
    const auto v2 = var_y0_t2(cells, props);
    r.v_y0_t2 = v2.variance;
    r.cov_y0_printed = v2.cov_with_t1;
    Linearizer lz(cells, props);
    r.cov_y0 = lz.covariance(*lz.untreated(UntreatedTerm::Y0Type1), *lz.untreated(UntreatedTerm::Y0Type2));
  } catch (const Error&) {
  }
  for (auto t : kBoundedStrata) {
    for (auto side : {Side::Lower, Side::Upper}) {
      for (int z = 0; z < 2; ++z) {
        if (!observed_in(t, 1, z)) continue;
        try {
          r.trims.push_back({t, z, side, cell_share(props, t, 1, z), var_trim_bound(cells, t, z, side, props)});
        } catch (const Error&) {
        }
      }
      if (observed_in(t, 1, 0) && observed_in(t, 1, 1)) {
        try {
          r.cross_z.push_back({t, side, cov_across_z(cells, t, side, props)});
        } catch (const Error&) {
        }
      }
    }
  }
  return r;
}

inline VarianceReport variance_report(const Dataset& ds) {
  CellTable cells(ds);
  return variance_report(cells, stratum_proportions(cells));
}

}  // namespace psbounds
