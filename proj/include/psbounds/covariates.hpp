#pragma once

// Covariate groups: a linear proxy for the outcome, quantile groups of the
// proxy, and mass-weighted aggregation of per-group bounds.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "psbounds/bounds.hpp"
#include "psbounds/data.hpp"
#include "psbounds/error.hpp"
#include "psbounds/trimming.hpp"

namespace psbounds {

// ---------------------------------------------------------------------------
// Design

/// One regressor: a product of covariate powers, e.g. "x1", "x1^2", "x1*x2".
struct DesignTerm {
  std::vector<std::pair<std::size_t, int>> factors;  // (covariate index, power)
  std::string label;
};

/// Regressors of the proxy regression. The intercept is always included and
/// is not listed.
struct DesignSpec {
  std::vector<std::string> terms;

  /// Every covariate entering linearly.
  static DesignSpec main_effects(const std::vector<std::string>& names) { return {names}; }
};

namespace covariates_detail {

inline std::string_view strip(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace covariates_detail

inline std::vector<DesignTerm> compile_design(const DesignSpec& spec, const std::vector<std::string>& covariates) {
  using covariates_detail::strip;
  std::vector<DesignTerm> out;
  for (const auto& text : spec.terms) {
    DesignTerm term;
    term.label = text;
    std::string_view rest = text;
    for (;;) {
      const auto star = rest.find('*');
      std::string_view factor = strip(rest.substr(0, star));
      int power = 1;
      if (const auto caret = factor.find('^'); caret != std::string_view::npos) {
        const std::string p(strip(factor.substr(caret + 1)));
        try {
          std::size_t used = 0;
          power = std::stoi(p, &used);
          if (used != p.size() || power < 1) throw std::invalid_argument(p);
        } catch (const std::exception&) {
          throw Error(Errc::InvalidConfig, "bad power in design term '" + text + "'");
        }
        factor = strip(factor.substr(0, caret));
      }
      auto it = std::find(covariates.begin(), covariates.end(), factor);
      if (it == covariates.end())
        throw Error(Errc::MissingColumn, "design term '" + text + "' uses unknown covariate", -1, std::string(factor));
      term.factors.emplace_back(static_cast<std::size_t>(it - covariates.begin()), power);
      if (star == std::string_view::npos) break;
      rest = rest.substr(star + 1);
    }
    out.push_back(std::move(term));
  }
  return out;
}

inline double evaluate(const DesignTerm& t, const std::vector<double>& x) {
  double v = 1.0;
  for (auto [i, p] : t.factors) v *= std::pow(x[i], p);
  return v;
}

// ---------------------------------------------------------------------------
// Proxy regression

struct ProxyModel {
  std::vector<DesignTerm> design;
  double intercept = 0.0;
  std::vector<double> coefficients;  // one per design term
  std::vector<double> std_errors;    // intercept first, then the terms
  double r_squared = 0.0;
  std::size_t n_fit = 0;

  double predict(const std::vector<double>& x) const {
    double v = intercept;
    for (std::size_t j = 0; j < design.size(); ++j) v += coefficients[j] * evaluate(design[j], x);
    return v;
  }

  std::vector<double> predict(const Dataset& ds) const {
    std::vector<double> out;
    out.reserve(ds.size());
    for (const auto& o : ds) out.push_back(predict(o.x));
    return out;
  }
};

/// Weighted least squares of y on the design over selected rows, optionally
/// restricted to one treatment arm.
inline ProxyModel fit_proxy(const Dataset& ds, const DesignSpec& spec, std::optional<int> treatment = std::nullopt) {
  ProxyModel m;
  m.design = compile_design(spec, ds.covariate_names());
  std::vector<const Observation*> rows;
  for (const auto& o : ds)
    if (o.s == 1 && (!treatment || o.d == *treatment)) rows.push_back(&o);
  if (rows.empty()) throw Error(Errc::NoSelectedObservations, "no selected rows to fit the proxy on");

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(m.design.size() + 1);
  if (n < p) throw Error(Errc::RankDeficientDesign, "fewer selected rows than regressors");
  Eigen::MatrixXd x(n, p);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = *rows[i];
    x(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) x(i, j) = evaluate(m.design[j - 1], o.x);
    y(i) = *o.y;
    w(i) = o.w;
  }
  w /= w.mean();
  const Eigen::VectorXd sw = w.cwiseSqrt();
  const Eigen::MatrixXd xw = sw.asDiagonal() * x;
  const Eigen::VectorXd yw = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) throw Error(Errc::RankDeficientDesign, "design has rank " + std::to_string(qr.rank()) +
                                                                " < " + std::to_string(p));
  const Eigen::VectorXd beta = qr.solve(yw);

  m.intercept = beta(0);
  m.coefficients.assign(beta.data() + 1, beta.data() + p);
  m.n_fit = rows.size();

  const Eigen::VectorXd resid = y - x * beta;
  const double ybar = (w.array() * y.array()).sum() / w.sum();
  const double ss_res = (w.array() * resid.array().square()).sum();
  const double ss_tot = (w.array() * (y.array() - ybar).square()).sum();
  m.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;

  const double dof = static_cast<double>(n - p);
  const double sigma2 = dof > 0 ? ss_res / dof : 0.0;
  const Eigen::MatrixXd xtwx_inv = (xw.transpose() * xw).inverse();
  m.std_errors.resize(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) m.std_errors[j] = std::sqrt(std::max(0.0, sigma2 * xtwx_inv(j, j)));
  return m;
}

enum class ProxyScope { Joint, ByTreatment };

/// Predicted outcome for every row, selected or not. ByTreatment fits one
/// model per treatment arm and predicts each row from its own arm.
inline std::vector<double> proxy_predictions(const Dataset& ds, const DesignSpec& spec,
                                             ProxyScope scope = ProxyScope::Joint) {
  if (scope == ProxyScope::Joint) return fit_proxy(ds, spec).predict(ds);
  const ProxyModel m0 = fit_proxy(ds, spec, 0), m1 = fit_proxy(ds, spec, 1);
  std::vector<double> out;
  out.reserve(ds.size());
  for (const auto& o : ds) out.push_back(o.d == 1 ? m1.predict(o.x) : m0.predict(o.x));
  return out;
}

// ---------------------------------------------------------------------------
// Groups

struct GroupAssignment {
  std::vector<int> labels;   // 1..k, one per row
  std::vector<double> cuts;  // k - 1 nondecreasing cut points
  int k = 0;

  /// Rows of group g in input order.
  std::vector<std::size_t> members(int g) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == g) out.push_back(i);
    return out;
  }
};

/// Cuts at the weighted j/k quantiles of the predictions; a prediction equal to
/// a cut goes to the lower group.
inline GroupAssignment assign_groups(const std::vector<double>& predictions, const std::vector<double>& weights,
                                     int k) {
  if (k < 2) throw Error(Errc::InvalidArgument, "need at least two groups");
  if (predictions.size() != weights.size()) throw Error(Errc::InvalidArgument, "predictions and weights differ");
  std::set<double> distinct(predictions.begin(), predictions.end());
  if (distinct.size() < static_cast<std::size_t>(k))
    throw Error(Errc::DegeneratePredictions, std::to_string(distinct.size()) + " distinct predictions for " +
                                                 std::to_string(k) + " groups");
  const WeightedSample sample(predictions, weights);
  GroupAssignment g;
  g.k = k;
  for (int j = 1; j < k; ++j) g.cuts.push_back(sample.quantile(static_cast<double>(j) / k));
  g.labels.reserve(predictions.size());
  for (double v : predictions)
    g.labels.push_back(1 + static_cast<int>(std::lower_bound(g.cuts.begin(), g.cuts.end(), v) - g.cuts.begin()));
  return g;
}

inline GroupAssignment assign_groups(const Dataset& ds, const ProxyModel& proxy, int k) {
  std::vector<double> w;
  w.reserve(ds.size());
  for (const auto& o : ds) w.push_back(o.w);
  return assign_groups(proxy.predict(ds), w, k);
}

/// Rows of one group as a dataset of its own.
inline Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
  std::vector<Observation> obs;
  obs.reserve(rows.size());
  for (auto i : rows) obs.push_back(ds[i]);
  return Dataset(std::move(obs), ds.covariate_names());
}

/// Seed of group g (1-based); group 1 keeps the master seed so a single group
/// reproduces the ungrouped run.
inline std::uint64_t group_seed(std::uint64_t seed, int g) {
  return seed + static_cast<std::uint64_t>(g - 1) * 0x9E3779B97F4A7C15ULL;
}

// ---------------------------------------------------------------------------
// Aggregation

struct AggregateBounds {
  Interval bounds;
  std::size_t used = 0;
  std::size_t excluded = 0;  // crossed or missing groups
};

/// Mass-weighted average of group lower and upper bounds over the groups
/// present and uncrossed; masses are renormalized over those groups.
inline AggregateBounds aggregate_bounds(const std::vector<std::optional<Interval>>& groups,
                                        const std::vector<double>& masses) {
  if (groups.size() != masses.size()) throw Error(Errc::InvalidArgument, "one mass per group required");
  AggregateBounds a;
  double lb = 0.0, ub = 0.0, total = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (!groups[g] || groups[g]->crossed() || !std::isfinite(groups[g]->lb) || !std::isfinite(groups[g]->ub) ||
        !(masses[g] > 0.0)) {
      ++a.excluded;
      continue;
    }
    lb += masses[g] * groups[g]->lb;
    ub += masses[g] * groups[g]->ub;
    total += masses[g];
    ++a.used;
  }
  if (a.used == 0) throw Error(Errc::NoValidGroups, "no group has valid bounds");
  a.bounds = {lb / total, ub / total};
  return a;
}

inline AggregateBounds aggregate_bounds(const std::vector<TypeBounds>& groups, const std::vector<double>& masses) {
  std::vector<std::optional<Interval>> iv;
  for (const auto& g : groups) iv.emplace_back(g.ate);
  return aggregate_bounds(iv, masses);
}

}  // namespace psbounds
