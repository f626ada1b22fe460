#pragma once

// One analysis of one dataset: proportions, bounds for each requested
// (stratum, regime), standard errors, IM and CLR intervals. Covariate groups
// run the same analysis on each group and keep failures per group.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "psbounds/bootstrap.hpp"
#include "psbounds/bounds.hpp"
#include "psbounds/cells.hpp"
#include "psbounds/covariates.hpp"
#include "psbounds/data.hpp"
#include "psbounds/dominance.hpp"
#include "psbounds/error.hpp"
#include "psbounds/inference.hpp"
#include "psbounds/parallel.hpp"
#include "psbounds/strata.hpp"
#include "psbounds/variance.hpp"

namespace psbounds {

struct AnalysisOptions {
  std::vector<StratumId> strata{kBoundedStrata.begin(), kBoundedStrata.end()};
  std::vector<Regime> regimes{Regime::Basic};
  bool im = true;
  bool clr = false;
  double level = 0.95;
  std::size_t sims = 10000;
  /// Bootstrap replicates for terms without a closed-form variance; 0 leaves
  /// those sides without standard errors.
  std::size_t bootstrap = 0;
  /// Bootstrap every term, including those with analytic variances.
  bool bootstrap_all = false;
  bool stratified_bootstrap = false;
  std::optional<std::uint64_t> seed;
  AnalyticOptions analytic;
  /// Emit the T16 support constant when T16 is among the strata.
  bool include_t16 = true;
  unsigned workers = worker_count();

  bool stochastic() const { return clr || ((im || clr) && bootstrap > 0); }

  void check() const {
    if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidConfig, "level must be in (0,1)");
    if (bootstrap > 0 && bootstrap < 100) throw Error(Errc::InvalidConfig, "bootstrap needs at least 100 replicates");
    if (clr && sims < 1) throw Error(Errc::InvalidConfig, "CLR needs simulation draws");
    if (bootstrap_all && bootstrap == 0) throw Error(Errc::InvalidConfig, "bootstrap_all needs bootstrap replicates");
    if (stochastic() && !seed) throw Error(Errc::InvalidConfig, "a seed is required for bootstrap or CLR");
  }
};

struct ErrorInfo {
  Errc code = Errc::InvalidArgument;
  std::string message;

  static ErrorInfo from(const Error& e) { return {e.code(), e.what()}; }
};

struct BoundRecord {
  StratumId stratum = StratumId::T1;
  Regime regime = Regime::Basic;
  std::optional<TypeBounds> bounds;
  std::optional<Interval> constant;  // T16 support constant
  std::optional<ErrorInfo> error;    // bounds could not be computed

  SideInference lower;
  SideInference upper;
  std::optional<CIBand> im;
  std::optional<ClrResult> clr;
  std::optional<ErrorInfo> inference_error;

  /// The printable interval: the bounds, or the T16 constant.
  std::optional<Interval> interval() const {
    if (bounds) return bounds->ate;
    return constant;
  }
  bool crossed() const { return bounds && bounds->crossed(); }
  double se_lb() const { return lower.se_binding(); }
  double se_ub() const { return upper.se_binding(); }
};

struct AnalysisReport {
  std::size_t n = 0;
  double total_weight = 0.0;
  ProportionSet props;
  MonotonicityReport monotonicity;
  SupportBounds support;
  VarianceReport variance;
  std::optional<DominanceCheck> dominance;
  std::vector<BoundRecord> records;
  std::size_t bootstrap_replicates = 0;

  const BoundRecord* find(StratumId t, Regime r) const {
    for (const auto& rec : records)
      if (rec.stratum == t && rec.regime == r) return &rec;
    return nullptr;
  }
  /// Bounds that could not be computed. Missing standard errors do not count.
  bool has_errors() const {
    for (const auto& rec : records)
      if (rec.error) return true;
    return false;
  }
};

namespace pipeline_detail {

inline std::uint64_t record_seed(std::uint64_t seed, StratumId t, Regime r) {
  return derive_seed(derive_seed(seed, 2), 16 * static_cast<std::uint64_t>(t) + static_cast<std::uint64_t>(r));
}

}  // namespace pipeline_detail

/// Throws only when the dataset as a whole is unusable (an empty cell, no
/// selected outcomes); failures of single bounds land in their records.
inline AnalysisReport analyze(const Dataset& ds, const AnalysisOptions& opt) {
  opt.check();
  AnalysisReport rep;
  const CellTable cells(ds);
  rep.n = cells.n();
  rep.total_weight = cells.total_weight();
  rep.props = stratum_proportions(cells);
  rep.monotonicity = monotonicity_diagnostics(cells);
  rep.support = support_bounds(cells);
  rep.variance = variance_report(cells, rep.props);
  try {
    rep.dominance = mean_dominance_check(cells, rep.props, rep.variance);
  } catch (const Error&) {
  }

  const BoundsInputs in = make_inputs(cells, rep.props);
  for (auto t : opt.strata) {
    for (auto r : opt.regimes) {
      BoundRecord rec;
      rec.stratum = t;
      rec.regime = r;
      if (t == StratumId::T16) {
        if (!opt.include_t16) continue;
        rec.constant = support_constant_bounds(rep.support);
      } else {
        try {
          rec.bounds = type_bounds(in, t, r);
        } catch (const Error& e) {
          rec.error = ErrorInfo::from(e);
        }
      }
      rep.records.push_back(std::move(rec));
    }
  }
  if (!opt.im && !opt.clr) return rep;

  // Analytic sides first; whatever remains shares one bootstrap.
  const Linearizer lz(cells, rep.props);
  struct Pending {
    SideInference* side;
    const std::vector<BoundTerm>* terms;
    std::size_t binding;
    std::size_t offset;
  };
  std::vector<Pending> pending;
  std::vector<BoundTerm> boot_terms;
  for (auto& rec : rep.records) {
    if (!rec.bounds) continue;
    const auto& b = *rec.bounds;
    for (auto [side, terms, binding] : {std::tuple{&rec.lower, &b.lower_terms, b.binding_lower()},
                                        std::tuple{&rec.upper, &b.upper_terms, b.binding_upper()}}) {
      if (!opt.bootstrap_all) {
        try {
          *side = analytic_side(lz, *terms, binding, opt.analytic);
        } catch (const Error&) {
          side->available = false;
        }
        if (side->available) continue;
      }
      side->binding = binding;
      side->values.clear();
      for (const auto& t : *terms) side->values.push_back(t.value());
      if (opt.bootstrap == 0) continue;
      pending.push_back({side, terms, binding, boot_terms.size()});
      boot_terms.insert(boot_terms.end(), terms->begin(), terms->end());
    }
  }
  if (!pending.empty()) {
    BootstrapOptions bo;
    bo.replicates = opt.bootstrap;
    bo.seed = derive_seed(*opt.seed, 1);
    bo.stratified = opt.stratified_bootstrap;
    bo.workers = opt.workers;
    const BootstrapResult boot = bootstrap(ds, terms_statistic(boot_terms), boot_terms.size(), bo);
    rep.bootstrap_replicates = opt.bootstrap;
    for (const auto& p : pending) *p.side = bootstrap_side(boot, p.offset, *p.terms, p.binding);
  }

  for (auto& rec : rep.records) {
    if (!rec.bounds) continue;
    if (!rec.lower.available || !rec.upper.available) {
      rec.inference_error = ErrorInfo{Errc::DegenerateSE, "no standard error for a bound without a closed-form "
                                                          "variance; enable the bootstrap"};
      continue;
    }
    try {
      if (opt.im) rec.im = im_ci(rec.bounds->ate, rec.se_lb(), rec.se_ub(), opt.level);
      if (opt.clr) {
        ClrOptions co;
        co.sims = opt.sims;
        co.seed = pipeline_detail::record_seed(*opt.seed, rec.stratum, rec.regime);
        co.n = rep.n;
        co.workers = opt.workers;
        rec.clr = clr_bounds(rec.lower.values, rec.lower.cov, rec.upper.values, rec.upper.cov, opt.level, co);
      }
    } catch (const Error& e) {
      rec.inference_error = ErrorInfo::from(e);
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Covariate groups

struct GroupResult {
  int group = 0;             // 1-based
  std::size_t n = 0;
  double mass = 0.0;         // share of the total weight
  std::optional<AnalysisReport> report;
  std::optional<ErrorInfo> error;
};

/// Analyzes every group independently, group g with seed group_seed(seed, g).
/// A failing group is reported and the others proceed.
inline std::vector<GroupResult> grouped_bounds(const Dataset& ds, const GroupAssignment& groups,
                                               const AnalysisOptions& opt) {
  opt.check();
  if (groups.labels.size() != ds.size()) throw Error(Errc::InvalidArgument, "one group label per row required");
  const double total = ds.total_weight();
  std::vector<GroupResult> out(static_cast<std::size_t>(groups.k));
  const unsigned outer = opt.workers;
  parallel_for(
      out.size(),
      [&](std::size_t i) {
        GroupResult& g = out[i];
        g.group = static_cast<int>(i) + 1;
        const auto rows = groups.members(g.group);
        g.n = rows.size();
        AnalysisOptions go = opt;
        if (opt.seed) go.seed = group_seed(*opt.seed, g.group);
        if (outer > 1) go.workers = 1;
        try {
          const Dataset sub = subset(ds, rows);
          g.mass = sub.total_weight() / total;
          g.report = analyze(sub, go);
        } catch (const Error& e) {
          g.error = ErrorInfo::from(e);
        }
      },
      outer);
  return out;
}

/// Mass-weighted average of the group intersection bounds of one
/// (stratum, regime); groups that failed or crossed are excluded.
inline AggregateBounds aggregate_groups(const std::vector<GroupResult>& groups, StratumId t, Regime r) {
  std::vector<std::optional<Interval>> iv;
  std::vector<double> masses;
  for (const auto& g : groups) {
    std::optional<Interval> v;
    if (g.report)
      if (const auto* rec = g.report->find(t, r)) v = rec->interval();
    iv.push_back(v);
    masses.push_back(g.mass);
  }
  return aggregate_bounds(iv, masses);
}

}  // namespace psbounds
