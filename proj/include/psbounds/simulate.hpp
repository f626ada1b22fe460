#pragma once

// Threshold-crossing data with the latent variables kept:
//
//   S = 1[V < h(D, Z)],  Y*(d) = psi(d, U),  (U, V) joined by a Gaussian copula,
//   (D, Z) drawn independently of (U, V).
//
// The population oracle evaluates the bound formulas on a large latent draw
// with exact stratum shares, and the coverage study repeats the estimator on
// independent samples against it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "psbounds/bounds.hpp"
#include "psbounds/data.hpp"
#include "psbounds/dominance.hpp"
#include "psbounds/error.hpp"
#include "psbounds/inference.hpp"
#include "psbounds/parallel.hpp"
#include "psbounds/pipeline.hpp"
#include "psbounds/strata.hpp"
#include "psbounds/trimming.hpp"

namespace psbounds {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Y*(d) = a_d + b_d * Phi^-1(eps + (1 - 2 eps) U) + sum_j beta_j x_j, with
/// x_j iid standard normal. A custom map, when set, replaces the first two
/// terms.
struct OutcomeModel {
  std::array<double, 2> a{2.0, 2.2};
  std::array<double, 2> b{0.5, 0.5};
  double eps = 0.005;
  std::vector<double> beta_x;
  std::function<double(int d, double u)> custom;

  double base(int d, double u) const {
    if (custom) return custom(d, u);
    return a[d] + b[d] * normal_quantile(eps + (1.0 - 2.0 * eps) * u);
  }
};

struct DgpConfig {
  /// Selection thresholds indexed 2d + z: h00, h01, h10, h11.
  std::array<double, 4> h{0.6, 0.4, 0.8, 0.9};
  OutcomeModel outcome;
  /// Spearman rank correlation of U and V.
  double rho = -0.5;
  double p_d = 0.5;
  double p_z = 0.4;
  std::size_t n = 20000;
  std::uint64_t seed = 1;

  double threshold(int d, int z) const { return h[2 * d + z]; }

  /// Correlation of the Gaussian copula with rank correlation rho.
  double copula_correlation() const { return 2.0 * std::sin(std::numbers::pi * rho / 6.0); }

  /// Exact stratum shares: differences of consecutive thresholds.
  ProportionSet true_proportions() const {
    ProportionSet p;
    p.pi1 = threshold(0, 1);
    p.pi2 = threshold(0, 0) - threshold(0, 1);
    p.pi4 = threshold(1, 0) - threshold(0, 0);
    p.pi12 = threshold(1, 1) - threshold(1, 0);
    p.pi16 = 1.0 - threshold(1, 1);
    return p;
  }

  void validate() const {
    for (double v : h)
      if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidThresholds, "thresholds must lie in [0,1]");
    if (!(threshold(0, 1) <= threshold(0, 0) && threshold(0, 0) <= threshold(1, 0) &&
          threshold(1, 0) <= threshold(1, 1)))
      throw Error(Errc::InvalidThresholds, "thresholds must satisfy h01 <= h00 <= h10 <= h11");
    if (!(rho > -1.0 && rho < 1.0)) throw Error(Errc::InvalidConfig, "rho must be in (-1,1)");
    if (!(p_d > 0.0 && p_d < 1.0) || !(p_z > 0.0 && p_z < 1.0))
      throw Error(Errc::InvalidConfig, "assignment probabilities must be in (0,1)");
    if (!(outcome.eps > 0.0 && outcome.eps < 0.5)) throw Error(Errc::InvalidConfig, "eps must be in (0,1/2)");
    if (n == 0) throw Error(Errc::InvalidConfig, "n must be positive");
  }

  /// Stratum of a unit with latent V.
  StratumId stratum_of(double v) const {
    if (v < threshold(0, 1)) return StratumId::T1;
    if (v < threshold(0, 0)) return StratumId::T2;
    if (v < threshold(1, 0)) return StratumId::T4;
    if (v < threshold(1, 1)) return StratumId::T12;
    return StratumId::T16;
  }
};

/// U and V dependent, V large means rarely observed: rho < 0 gives the
/// often-observed strata the higher outcomes, so both dominance assumptions
/// hold; rho > 0 reverses the ranking.
inline DgpConfig dominance_valid_preset() {
  DgpConfig c;
  c.rho = -0.5;
  return c;
}

inline DgpConfig dominance_violated_preset() {
  DgpConfig c;
  c.rho = 0.5;
  return c;
}

struct LatentRow {
  double u = 0.0;
  double v = 0.0;
  int d = 0;
  int z = 0;
  std::array<int, 4> s{};  // S(d, z) at index 2d + z
  double y1 = 0.0;
  double y0 = 0.0;
  StratumId stratum = StratumId::T1;
  std::vector<double> x;
};

struct LatentSample {
  std::vector<LatentRow> rows;
  Dataset data;
};

namespace simulate_detail {

struct Draw {
  double u, v;
  std::vector<double> x;
};

class LatentDrawer {
 public:
  LatentDrawer(const DgpConfig& cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed), r_(cfg.copula_correlation()) {}

  Draw next() {
    const double e1 = normal_(rng_), xi = normal_(rng_);
    const double e2 = r_ * e1 + std::sqrt(1.0 - r_ * r_) * xi;
    Draw dr{normal_cdf(e1), normal_cdf(e2), {}};
    for (std::size_t j = 0; j < cfg_.outcome.beta_x.size(); ++j) dr.x.push_back(normal_(rng_));
    return dr;
  }

  double outcome(int d, const Draw& dr) const {
    double y = cfg_.outcome.base(d, dr.u);
    for (std::size_t j = 0; j < dr.x.size(); ++j) y += cfg_.outcome.beta_x[j] * dr.x[j];
    return y;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  const DgpConfig& cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double r_;
};

inline std::vector<std::string> covariate_names(const DgpConfig& cfg) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < cfg.outcome.beta_x.size(); ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

}  // namespace simulate_detail

inline LatentSample generate(const DgpConfig& cfg) {
  cfg.validate();
  simulate_detail::LatentDrawer drawer(cfg, cfg.seed);
  std::bernoulli_distribution treat(cfg.p_d), instrument(cfg.p_z);
  std::vector<LatentRow> rows;
  std::vector<Observation> obs;
  rows.reserve(cfg.n);
  obs.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    LatentRow r;
    r.d = treat(drawer.rng()) ? 1 : 0;
    r.z = instrument(drawer.rng()) ? 1 : 0;
    auto dr = drawer.next();
    r.u = dr.u;
    r.v = dr.v;
    for (int d = 0; d < 2; ++d)
      for (int z = 0; z < 2; ++z) r.s[2 * d + z] = r.v < cfg.threshold(d, z) ? 1 : 0;
    r.y1 = drawer.outcome(1, dr);
    r.y0 = drawer.outcome(0, dr);
    r.stratum = cfg.stratum_of(r.v);
    r.x = std::move(dr.x);

    Observation o;
    o.d = r.d;
    o.z = r.z;
    o.s = r.s[2 * r.d + r.z];
    if (o.s == 1) o.y = r.d == 1 ? r.y1 : r.y0;
    o.x = r.x;
    obs.push_back(std::move(o));
    rows.push_back(std::move(r));
  }
  return {std::move(rows), Dataset(std::move(obs), simulate_detail::covariate_names(cfg))};
}

// ---------------------------------------------------------------------------
// Population oracle

/// Large latent draw standing in for the population. Stratum shares are
/// exact; treated cell distributions and stratum means come from the draw.
struct Population {
  ProportionSet props;
  std::array<WeightedSample, 2> treated;  // Y*(1) among V < h(1, z)
  SupportBounds support;
  std::array<double, 5> mean_y1{};
  std::array<double, 5> mean_y0{};
  std::size_t draws = 0;

  static std::size_t index(StratumId t) {
    for (std::size_t i = 0; i < kAllStrata.size(); ++i)
      if (kAllStrata[i] == t) return i;
    return 0;
  }
  double true_ate(StratumId t) const { return mean_y1[index(t)] - mean_y0[index(t)]; }

  BoundsInputs inputs() const {
    BoundsInputs in;
    in.props = props;
    in.treated_cells = {&treated[0], &treated[1]};
    in.support = support;
    in.y0_t1 = mean_y0[index(StratumId::T1)];
    if (props.pi2 > 0.0) in.y0_t2 = mean_y0[index(StratumId::T2)];
    return in;
  }
};

inline constexpr std::size_t kOracleDraws = 1000000;

/// Outcome support. The default model is bounded, with the extremes at
/// U = 0 and U = 1; covariates make it unbounded; a custom map is bounded by
/// the extremes of the draw.
inline Population population(const DgpConfig& cfg, std::size_t draws = kOracleDraws, std::uint64_t seed = 0x0AC1E) {
  cfg.validate();
  if (draws < kOracleDraws) throw Error(Errc::InvalidConfig, "the oracle needs at least 1e6 draws");
  simulate_detail::LatentDrawer drawer(cfg, derive_seed(cfg.seed, seed));
  Population pop;
  pop.draws = draws;
  pop.props = cfg.true_proportions();
  std::array<std::vector<double>, 2> y1z;
  std::array<double, 5> s1{}, s0{}, cnt{};
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < draws; ++i) {
    const auto dr = drawer.next();
    const double y1 = drawer.outcome(1, dr), y0 = drawer.outcome(0, dr);
    const auto k = Population::index(cfg.stratum_of(dr.v));
    s1[k] += y1;
    s0[k] += y0;
    cnt[k] += 1.0;
    for (int z = 0; z < 2; ++z)
      if (dr.v < cfg.threshold(1, z)) y1z[z].push_back(y1);
    for (int d = 0; d < 2; ++d)
      if (dr.v < std::max(cfg.threshold(d, 0), cfg.threshold(d, 1))) {
        const double y = d == 1 ? y1 : y0;
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
  }
  for (std::size_t k = 0; k < 5; ++k) {
    pop.mean_y1[k] = cnt[k] > 0 ? s1[k] / cnt[k] : std::numeric_limits<double>::quiet_NaN();
    pop.mean_y0[k] = cnt[k] > 0 ? s0[k] / cnt[k] : std::numeric_limits<double>::quiet_NaN();
  }
  for (int z = 0; z < 2; ++z) pop.treated[z] = WeightedSample(y1z[z]);

  const auto& m = cfg.outcome;
  if (!m.beta_x.empty()) {
    pop.support = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  } else if (m.custom) {
    pop.support = {lo, hi};
  } else {
    const double c = normal_quantile(1.0 - m.eps);
    pop.support = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (int d = 0; d < 2; ++d) {
      if (!(std::max(cfg.threshold(d, 0), cfg.threshold(d, 1)) > 0.0)) continue;
      pop.support.y_lb = std::min(pop.support.y_lb, m.a[d] - std::abs(m.b[d]) * c);
      pop.support.y_ub = std::max(pop.support.y_ub, m.a[d] + std::abs(m.b[d]) * c);
    }
  }
  return pop;
}

struct OracleBounds {
  TypeBounds bounds;
  double true_ate = 0.0;
};

inline OracleBounds oracle_bounds(const Population& pop, StratumId stratum, Regime regime) {
  const BoundsInputs in = pop.inputs();
  return {type_bounds(in, stratum, regime), pop.true_ate(stratum)};
}

inline OracleBounds oracle_bounds(const DgpConfig& cfg, StratumId stratum, Regime regime,
                                  std::size_t draws = kOracleDraws) {
  return oracle_bounds(population(cfg, draws), stratum, regime);
}

// ---------------------------------------------------------------------------
// Coverage study

/// One replicate's estimates for one (stratum, regime).
struct CoverageDraw {
  std::size_t rep = 0;
  StratumId stratum = StratumId::T1;
  Regime regime = Regime::Basic;
  Interval estimate;
  double se_lb = std::numeric_limits<double>::quiet_NaN();
  double se_ub = std::numeric_limits<double>::quiet_NaN();
  std::optional<CIBand> im;
  std::optional<Interval> clr;
  std::optional<CIBand> clr_ci;
};

struct CoverageSummary {
  StratumId stratum = StratumId::T1;
  Regime regime = Regime::Basic;
  Interval truth;        // oracle bounds
  double true_ate = 0.0;
  std::size_t used = 0;
  std::size_t failed = 0;
  double mean_lb = 0.0, mean_ub = 0.0;
  double bias_lb = 0.0, bias_ub = 0.0;
  double sd_lb = 0.0, sd_ub = 0.0;
  double mean_se_lb = std::numeric_limits<double>::quiet_NaN();
  double mean_se_ub = std::numeric_limits<double>::quiet_NaN();
  std::size_t im_n = 0;
  double im_set_coverage = std::numeric_limits<double>::quiet_NaN();    // lo <= LB and UB <= hi
  double im_param_coverage = std::numeric_limits<double>::quiet_NaN();  // lo <= true ATE <= hi
  std::size_t clr_n = 0;
  double clr_ub_above = std::numeric_limits<double>::quiet_NaN();  // share with UB_clr >= UB
  double clr_lb_below = std::numeric_limits<double>::quiet_NaN();  // share with LB_clr <= LB
  std::size_t clr_narrower = 0;  // replicates where CLR bounds sit inside the intersection bounds
};

struct CoverageReport {
  std::size_t reps = 0;
  std::size_t n = 0;
  std::vector<CoverageSummary> summaries;
  std::vector<CoverageDraw> draws;

  const CoverageSummary* find(StratumId t, Regime r) const {
    for (const auto& s : summaries)
      if (s.stratum == t && s.regime == r) return &s;
    return nullptr;
  }
};

/// Replicate r draws data with seed derive_seed(cfg.seed, r) and analyzes it
/// with seed derive_seed(analysis seed, r). Replicates that fail are counted
/// and left out.
inline CoverageReport coverage_study(const DgpConfig& cfg, std::size_t reps, const AnalysisOptions& est,
                                     const Population& pop) {
  if (reps < 200) throw Error(Errc::InvalidConfig, "a coverage study needs at least 200 replicates");
  cfg.validate();
  const std::uint64_t analysis_seed = est.seed ? *est.seed : derive_seed(cfg.seed, 0xA);

  std::vector<std::optional<AnalysisReport>> results(reps);
  const unsigned workers = est.workers;
  parallel_for(
      reps,
      [&](std::size_t r) {
        DgpConfig c = cfg;
        c.seed = derive_seed(cfg.seed, r);
        AnalysisOptions o = est;
        o.seed = derive_seed(analysis_seed, r);
        o.workers = 1;
        try {
          results[r] = analyze(generate(c).data, o);
        } catch (const Error&) {
        }
      },
      workers);

  CoverageReport out;
  out.reps = reps;
  out.n = cfg.n;
  for (auto t : est.strata) {
    if (t == StratumId::T16) continue;
    for (auto rg : est.regimes) {
      CoverageSummary s;
      s.stratum = t;
      s.regime = rg;
      const OracleBounds ob = oracle_bounds(pop, t, rg);
      s.truth = ob.bounds.ate;
      s.true_ate = ob.true_ate;

      std::vector<double> lbs, ubs, se_lb, se_ub;
      std::size_t im_set = 0, im_par = 0, clr_ub = 0, clr_lb = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const BoundRecord* rec = results[r] ? results[r]->find(t, rg) : nullptr;
        if (!rec || !rec->bounds) {
          ++s.failed;
          continue;
        }
        CoverageDraw d;
        d.rep = r;
        d.stratum = t;
        d.regime = rg;
        d.estimate = rec->bounds->ate;
        d.se_lb = rec->se_lb();
        d.se_ub = rec->se_ub();
        d.im = rec->im;
        if (rec->clr) {
          d.clr = rec->clr->bounds;
          d.clr_ci = rec->clr->ci;
        }
        lbs.push_back(d.estimate.lb);
        ubs.push_back(d.estimate.ub);
        if (std::isfinite(d.se_lb) && std::isfinite(d.se_ub)) {
          se_lb.push_back(d.se_lb);
          se_ub.push_back(d.se_ub);
        }
        if (d.im) {
          ++s.im_n;
          im_set += d.im->lo <= s.truth.lb && s.truth.ub <= d.im->hi;
          im_par += d.im->lo <= s.true_ate && s.true_ate <= d.im->hi;
        }
        if (d.clr) {
          ++s.clr_n;
          clr_ub += d.clr->ub >= s.truth.ub;
          clr_lb += d.clr->lb <= s.truth.lb;
          s.clr_narrower += d.clr->lb > d.estimate.lb || d.clr->ub < d.estimate.ub;
        }
        out.draws.push_back(d);
      }
      s.used = lbs.size();
      auto mean = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return v.empty() ? std::numeric_limits<double>::quiet_NaN() : m / static_cast<double>(v.size());
      };
      auto sd = [&](const std::vector<double>& v) {
        if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
      };
      s.mean_lb = mean(lbs);
      s.mean_ub = mean(ubs);
      s.bias_lb = s.mean_lb - s.truth.lb;
      s.bias_ub = s.mean_ub - s.truth.ub;
      s.sd_lb = sd(lbs);
      s.sd_ub = sd(ubs);
      s.mean_se_lb = mean(se_lb);
      s.mean_se_ub = mean(se_ub);
      if (s.im_n > 0) {
        s.im_set_coverage = static_cast<double>(im_set) / static_cast<double>(s.im_n);
        s.im_param_coverage = static_cast<double>(im_par) / static_cast<double>(s.im_n);
      }
      if (s.clr_n > 0) {
        s.clr_ub_above = static_cast<double>(clr_ub) / static_cast<double>(s.clr_n);
        s.clr_lb_below = static_cast<double>(clr_lb) / static_cast<double>(s.clr_n);
      }
      out.summaries.push_back(s);
    }
  }
  return out;
}

inline CoverageReport coverage_study(const DgpConfig& cfg, std::size_t reps, const AnalysisOptions& est) {
  return coverage_study(cfg, reps, est, population(cfg));
}

}  // namespace psbounds
