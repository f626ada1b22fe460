#pragma once

// Confidence intervals for identified sets and intersection-bound corrections.

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "psbounds/bootstrap.hpp"
#include "psbounds/bounds.hpp"
#include "psbounds/error.hpp"
#include "psbounds/parallel.hpp"
#include "psbounds/variance.hpp"

namespace psbounds {

inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(Errc::InvalidArgument, "normal quantile needs p in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

enum class CiMethod { ImbensManski, CLR };

struct CIBand {
  double lo = 0.0;
  double hi = 0.0;
  double level = 0.95;
  CiMethod method = CiMethod::ImbensManski;
  /// The raw endpoints crossed and were replaced by their midpoint.
  bool collapsed = false;
};

namespace inference_detail {

inline CIBand make_band(double lo, double hi, double level, CiMethod m) {
  CIBand b{lo, hi, level, m, false};
  if (lo > hi) {
    b.lo = b.hi = 0.5 * (lo + hi);
    b.collapsed = true;
  }
  return b;
}

}  // namespace inference_detail

/// One-sided critical value on each side: (lb - z se_lb, ub + z se_ub) with
/// z the `level` quantile of the standard normal (1.645 at 0.95).
inline CIBand im_ci(const Interval& ate, double se_lb, double se_ub, double level = 0.95) {
  if (!(se_lb >= 0.0) || !(se_ub >= 0.0)) throw Error(Errc::InvalidArgument, "standard errors must be >= 0");
  const double z = normal_quantile(level);
  return inference_detail::make_band(ate.lb - z * se_lb, ate.ub + z * se_ub, level, CiMethod::ImbensManski);
}

// ---------------------------------------------------------------------------
// Max of a correlated Gaussian vector

struct ClrOptions {
  std::size_t sims = 10000;
  std::uint64_t seed = 0;
  /// Sample size; enables adaptive inequality selection when set.
  std::optional<std::size_t> n;
  unsigned workers = worker_count();
};

inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kPerfectCorrelation = 1.0 - 1e-12;

/// Simulated draws of max_v Z_v with Z ~ N(0, corr). Coordinates whose
/// correlation with an earlier one is 1 are merged first; a single remaining
/// coordinate is reported as such so callers can use exact normal quantiles.
class GaussianMax {
 public:
  GaussianMax(const Eigen::MatrixXd& corr, std::size_t sims, std::uint64_t seed, unsigned workers = worker_count()) {
    const Eigen::Index k = corr.rows();
    if (k == 0 || corr.cols() != k) throw Error(Errc::InvalidArgument, "correlation matrix must be square");
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        if (!(std::abs(corr(i, j)) <= 1.0 + kPsdTolerance))
          throw Error(Errc::NonPSDCovariance, "correlation outside [-1, 1]");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < k; ++i) {
      bool dup = false;
      for (auto j : keep) dup = dup || corr(i, j) >= kPerfectCorrelation;
      if (!dup) keep.push_back(i);
    }
    dim_ = static_cast<std::size_t>(keep.size());
    if (dim_ == 1) return;

    Eigen::MatrixXd c(keep.size(), keep.size());
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = 0; b < keep.size(); ++b) c(a, b) = corr(keep[a], keep[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw Error(Errc::NonPSDCovariance, "eigen-decomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -kPsdTolerance * scale)
      throw Error(Errc::NonPSDCovariance, "covariance has eigenvalue " + std::to_string(ev.minCoeff()));
    ev = ev.cwiseMax(0.0);
    const Eigen::MatrixXd root = es.eigenvectors() * ev.cwiseSqrt().asDiagonal();

    constexpr std::size_t kChunk = 1024;
    const std::size_t chunks = (sims + kChunk - 1) / kChunk;
    maxima_.assign(sims, 0.0);
    parallel_for(
        chunks,
        [&](std::size_t ch) {
          std::mt19937_64 rng(derive_seed(seed, ch));
          std::normal_distribution<double> normal;
          Eigen::VectorXd e(static_cast<Eigen::Index>(dim_));
          const std::size_t end = std::min(sims, (ch + 1) * kChunk);
          for (std::size_t s = ch * kChunk; s < end; ++s) {
            for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
            maxima_[s] = (root * e).maxCoeff();
          }
        },
        workers);
    std::sort(maxima_.begin(), maxima_.end());
  }

  std::size_t dimension() const { return dim_; }

  /// p-quantile of the max. Never below the single-coordinate quantile, which
  /// bounds it from below for every correlation structure.
  double quantile(double p) const {
    const double single = normal_quantile(p);
    if (dim_ == 1) return single;
    const auto m = maxima_.size();
    std::size_t idx = static_cast<std::size_t>(std::ceil(p * static_cast<double>(m)));
    idx = std::clamp<std::size_t>(idx, 1, m) - 1;
    return std::max(single, maxima_[idx]);
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> maxima_;
};

/// Critical value kappa(p): the p-quantile of max_v Z_v, Z ~ N(0, corr).
inline double clr_critical_value(const Eigen::MatrixXd& corr, double p, std::size_t sims, std::uint64_t seed) {
  return GaussianMax(corr, sims, seed).quantile(p);
}

struct ClrSide {
  double bound = 0.0;      // p = 1/2: half-median-unbiased estimate
  double ci_bound = 0.0;   // at the requested p
  double kappa_half = 0.0;
  double kappa_level = 0.0;
  std::vector<std::size_t> selected;  // coordinates kept by inequality selection
  bool degenerate_se = false;         // all standard errors zero
};

/// Precision-corrected intersection bound over coordinates theta_v with
/// sampling covariance `cov`. For the upper side the bound is
/// min_v theta_v + kappa(p) s_v; the lower side mirrors it.
inline ClrSide clr_side(Side side, const std::vector<double>& theta, const Eigen::MatrixXd& cov, double level,
                        const ClrOptions& opt) {
  const std::size_t k = theta.size();
  if (k == 0) throw Error(Errc::InvalidArgument, "no coordinates");
  if (static_cast<std::size_t>(cov.rows()) != k || static_cast<std::size_t>(cov.cols()) != k)
    throw Error(Errc::InvalidArgument, "covariance does not match the coordinates");
  if (opt.sims < 1) throw Error(Errc::InvalidArgument, "need at least one simulation draw");
  const double sgn = side == Side::Upper ? 1.0 : -1.0;

  // Work on the upper side: min_v (sgn theta_v + kappa s_v), then flip back.
  std::vector<double> th(k), s(k);
  for (std::size_t v = 0; v < k; ++v) {
    th[v] = sgn * theta[v];
    const double var = cov(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(v));
    if (!(var >= -kPsdTolerance)) throw Error(Errc::NonPSDCovariance, "negative variance");
    s[v] = std::sqrt(std::max(0.0, var));
  }
  auto adjusted = [&](double kappa, const std::vector<std::size_t>& over) {
    double best = std::numeric_limits<double>::infinity();
    for (auto v : over) best = std::min(best, th[v] + kappa * s[v]);
    return best;
  };
  std::vector<std::size_t> all(k);
  for (std::size_t v = 0; v < k; ++v) all[v] = v;

  ClrSide out;
  if (std::all_of(s.begin(), s.end(), [](double x) { return x == 0.0; })) {
    out.degenerate_se = true;
    out.selected = all;
    out.bound = out.ci_bound = sgn * adjusted(0.0, all);
    return out;
  }

  auto corr_of = [&](const std::vector<std::size_t>& idx) {
    Eigen::MatrixXd c(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) {
        const auto i = static_cast<Eigen::Index>(idx[a]), j = static_cast<Eigen::Index>(idx[b]);
        if (a == b)
          c(a, b) = 1.0;
        else if (s[idx[a]] == 0.0 || s[idx[b]] == 0.0)
          c(a, b) = 0.0;
        else
          c(a, b) = sgn * sgn * cov(i, j) / (s[idx[a]] * s[idx[b]]);
      }
    return c;
  };

  out.selected = all;
  if (opt.n && *opt.n > 2) {
    const double gamma = 1.0 - 0.1 / std::log(static_cast<double>(*opt.n));
    const double kn = GaussianMax(corr_of(all), opt.sims, derive_seed(opt.seed, 1), opt.workers).quantile(gamma);
    const double cut = adjusted(kn, all);
    out.selected.clear();
    for (std::size_t v = 0; v < k; ++v)
      if (th[v] <= cut + 2.0 * kn * s[v]) out.selected.push_back(v);
  }
  // Zero-SE coordinates contribute a constant 0 to the max.
  GaussianMax gm(corr_of(out.selected), opt.sims, derive_seed(opt.seed, 2), opt.workers);
  out.kappa_half = gm.quantile(0.5);
  out.kappa_level = gm.quantile(level);
  out.bound = sgn * adjusted(out.kappa_half, all);
  out.ci_bound = sgn * adjusted(out.kappa_level, all);
  return out;
}

/// Single-sided interface: the adjusted bound at probability p.
inline double clr_adjust(Side side, const std::vector<double>& theta, const Eigen::MatrixXd& cov, double p,
                         const ClrOptions& opt) {
  const ClrSide r = clr_side(side, theta, cov, p, opt);
  return r.ci_bound;
}

struct ClrResult {
  Interval bounds;  // half-median-unbiased
  CIBand ci;
  ClrSide lower;
  ClrSide upper;
};

/// Both sides. The confidence band puts (1 - level) / 2 in each tail, so
/// each side is evaluated at p = 1 - (1 - level) / 2.
inline ClrResult clr_bounds(const std::vector<double>& lower_theta, const Eigen::MatrixXd& lower_cov,
                            const std::vector<double>& upper_theta, const Eigen::MatrixXd& upper_cov, double level,
                            const ClrOptions& opt) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "level must be in (0,1)");
  ClrOptions lo = opt, hi = opt;
  lo.seed = derive_seed(opt.seed, 0x10);
  hi.seed = derive_seed(opt.seed, 0x11);
  const double p = 1.0 - 0.5 * (1.0 - level);
  ClrResult r;
  r.lower = clr_side(Side::Lower, lower_theta, lower_cov, p, lo);
  r.upper = clr_side(Side::Upper, upper_theta, upper_cov, p, hi);
  r.bounds = {r.lower.bound, r.upper.bound};
  r.ci = inference_detail::make_band(r.lower.ci_bound, r.upper.ci_bound, level, CiMethod::CLR);
  return r;
}

// ---------------------------------------------------------------------------
// Standard errors of bound terms

struct SideInference {
  std::vector<double> values;
  Eigen::MatrixXd cov;  // sampling covariance (already divided by n)
  bool available = false;
  bool analytic = false;
  std::size_t binding = 0;
  std::size_t replicates_used = 0;

  double se_binding() const {
    if (!available) return std::numeric_limits<double>::quiet_NaN();
    const auto b = static_cast<Eigen::Index>(binding);
    return std::sqrt(std::max(0.0, cov(b, b)));
  }
};

struct AnalyticOptions {
  /// Add the covariance between the treated and untreated parts of each term.
  /// Off by default: the ATE bound variance is the sum of the two parts.
  bool treated_untreated_covariance = false;
};

/// Analytic covariance of the terms on one side; unavailable when any term
/// subtracts a support bound.
inline SideInference analytic_side(const Linearizer& lz, const std::vector<BoundTerm>& terms, std::size_t binding,
                                   const AnalyticOptions& opt = {}) {
  SideInference si;
  si.binding = binding;
  for (const auto& t : terms) si.values.push_back(t.value());
  std::vector<Linearization> tr, un;
  for (const auto& t : terms) {
    auto u = lz.untreated(t.untreated);
    if (!u) return si;
    tr.push_back(lz.treated(t.treated));
    un.push_back(std::move(*u));
  }
  const auto k = static_cast<Eigen::Index>(terms.size());
  const double n = static_cast<double>(lz.cells().n());
  const double lambda = opt.treated_untreated_covariance ? 1.0 : 0.0;
  si.cov.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = a; b < k; ++b) {
      const double c = lz.covariance(tr[a], tr[b]) + lz.covariance(un[a], un[b]) -
                       lambda * (lz.covariance(tr[a], un[b]) + lz.covariance(un[a], tr[b]));
      si.cov(a, b) = si.cov(b, a) = c / n;
    }
  si.available = true;
  si.analytic = true;
  return si;
}

/// Covariance of terms [offset, offset + count) from a bootstrap of all terms.
inline SideInference bootstrap_side(const BootstrapResult& boot, std::size_t offset,
                                    const std::vector<BoundTerm>& terms, std::size_t binding) {
  SideInference si;
  si.binding = binding;
  for (const auto& t : terms) si.values.push_back(t.value());
  std::vector<std::size_t> idx(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) idx[i] = offset + i;
  si.cov = boot.covariance(idx, &si.replicates_used);
  si.available = si.replicates_used >= 2;
  return si;
}

}  // namespace psbounds
