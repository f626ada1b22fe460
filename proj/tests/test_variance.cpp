#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "psbounds/bootstrap.hpp"
#include "psbounds/variance.hpp"

using namespace psbounds;

namespace {

// Moments of the untreated T2 mean: (m01, m00, p01, p00) and their
// asymptotic variances, all independent.
struct Y0T2Moments {
  std::vector<double> theta, var;
};

Y0T2Moments y0t2_moments(const Dataset& ds) {
  const auto c01 = cell_stats(ds, 0, 1), c00 = cell_stats(ds, 0, 0);
  const double w = ds.total_weight();
  const double e01 = c01.w_total * c01.p_select / w, e00 = c00.w_total * c00.p_select / w;
  const double f01 = c01.w_total / w, f00 = c00.w_total / w;
  return {{*c01.y_mean, *c00.y_mean, c01.p_select, c00.p_select},
          {*c01.y_var / e01, *c00.y_var / e00, c01.p_select * (1 - c01.p_select) / f01,
           c00.p_select * (1 - c00.p_select) / f00}};
}

double y0t2_of(const std::vector<double>& t) {
  const double m01 = t[0], m00 = t[1], p01 = t[2], p00 = t[3];
  return (m00 * p00 - m01 * p01) / (p00 - p01);
}

}  // namespace

TEST(Variance, VcT1Ds1) { EXPECT_NEAR(var_y0_t1(fixtures::ds1()), 3.0, 1e-12); }

TEST(Variance, VcT1ConstantAndScale) {
  auto r = fixtures::ds1_rows();
  for (auto& o : r)
    if (o.y) o.y = 2.0;
  EXPECT_EQ(var_y0_t1(Dataset(r)), 0.0);
  r = fixtures::ds1_rows();
  for (auto& o : r) o.w *= 2.0;
  EXPECT_NEAR(var_y0_t1(Dataset(r)), 3.0, 1e-12);
}

TEST(Variance, VcT2AgainstDeltaOracle) {
  const auto ds = fixtures::ds1();
  const auto m = y0t2_moments(ds);
  std::vector<double> grad;
  const double oracle = oracles::delta_variance(y0t2_of, m.theta, m.var, &grad);
  const auto v = var_y0_t2(ds, stratum_proportions(ds));
  EXPECT_NEAR(v.variance, oracle, 1e-6 * oracle);
  EXPECT_NEAR(v.variance, 132.0, 1e-9);
  // printed covariance and the sign of the linearized one
  EXPECT_NEAR(v.cov_with_t1, 6.0, 1e-12);
  const auto rep = variance_report(ds);
  EXPECT_NEAR(rep.cov_y0, grad[0] * m.var[0], 1e-6);
  EXPECT_NEAR(rep.cov_y0, -6.0, 1e-9);
}

TEST(Variance, VcT2DeltaOracleRandom) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const auto ds = fixtures::random_dataset(rng, 50, true);
    const auto p = stratum_proportions(ds);
    if (!(p.pi2 > 0.05)) continue;
    const auto m = y0t2_moments(ds);
    const double oracle = oracles::delta_variance(y0t2_of, m.theta, m.var);
    EXPECT_NEAR(var_y0_t2(ds, p).variance, oracle, 1e-5 * oracle);
  }
}

TEST(Variance, VcT2ConstantOutcomes) {
  auto r = fixtures::ds1_rows();
  for (auto& o : r)
    if (o.y) o.y = 1.0;
  const Dataset ds(r);
  // all means equal, so the proportion terms vanish as well
  EXPECT_NEAR(var_y0_t2(ds, stratum_proportions(ds)).variance, 0.0, 1e-12);
}

TEST(Variance, ZeroPi2) {
  std::vector<Observation> r;
  for (int z = 0; z < 2; ++z) {
    fixtures::add(r, 0, z, 1.0);
    fixtures::add(r, 1, z, 1.0);
  }
  const Dataset ds(r);
  EXPECT_THROW(var_y0_t2(ds, stratum_proportions(ds)), Error);
}

TEST(Variance, TrimBoundConstantOutcome) {
  auto r = fixtures::ds1_rows();
  for (auto& o : r)
    if (o.y) o.y = 4.0;
  const Dataset ds(r);
  const auto p = stratum_proportions(ds);
  for (auto side : {Side::Lower, Side::Upper}) EXPECT_EQ(var_trim_bound(ds, StratumId::T1, 1, side, p), 0.0);
  EXPECT_EQ(cov_across_z(ds, StratumId::T1, Side::Lower, p), 0.0);
}

TEST(Variance, CrossZDs1ClosedForm) {
  const auto ds = fixtures::ds1();
  // gaps 1.5 at both z; rate variance of (0,1) is 0.25 / (4/24) = 1.5; pi1 = 0.5
  EXPECT_NEAR(cov_across_z(ds, StratumId::T1, Side::Lower, stratum_proportions(ds)), 2.25 * 1.5 / 0.25, 1e-12);
  EXPECT_THROW(cov_across_z(ds, StratumId::T12, Side::Lower, stratum_proportions(ds)), Error);
}

TEST(Variance, CrossZSignIsGapProduct) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 50; ++rep) {
    const auto ds = fixtures::random_dataset(rng, 40);
    const CellTable cells(ds);
    const auto p = stratum_proportions(cells);
    if (!(p.pi1 > 0)) continue;
    for (auto side : {Side::Lower, Side::Upper}) {
      double sign = 1.0;
      for (int z = 0; z < 2; ++z) {
        const auto tr = variance_detail::trim_summary(cells, z, side, cell_share(p, StratumId::T1, 1, z));
        sign *= tr.threshold - tr.mean;
      }
      const double c = cov_across_z(cells, StratumId::T1, side, p);
      EXPECT_TRUE(c == 0.0 || (c > 0) == (sign > 0));
    }
  }
}

// The linearization reproduces every closed form on its diagonal.
TEST(Variance, LinearizationMatchesClosedForms) {
  std::mt19937_64 rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    const auto ds = fixtures::random_dataset(rng, 60, true);
    const CellTable cells(ds);
    const auto p = stratum_proportions(cells);
    if (!monotonicity_diagnostics(cells).pass || !(p.pi2 > 0) || !(p.pi4 > 0) || !(p.pi12 > 0)) continue;
    const Linearizer lz(cells, p);
    EXPECT_NEAR(lz.variance(*lz.untreated(UntreatedTerm::Y0Type1)), var_y0_t1(cells), 1e-9);
    EXPECT_NEAR(lz.variance(*lz.untreated(UntreatedTerm::Y0Type2)), var_y0_t2(cells, p).variance, 1e-8);
    for (auto t : kBoundedStrata)
      for (auto side : {Side::Lower, Side::Upper}) {
        const auto kind = side == Side::Lower ? TreatedKind::LowerTrim : TreatedKind::UpperTrim;
        for (int z = 0; z < 2; ++z) {
          if (!observed_in(t, 1, z)) continue;
          const double v = lz.variance(lz.treated({kind, t, z}));
          EXPECT_NEAR(v, var_trim_bound(cells, t, z, side, p), 1e-8 * std::max(1.0, v));
        }
        if (t != StratumId::T12) {
          const double c = lz.covariance(lz.treated({kind, t, 0}), lz.treated({kind, t, 1}));
          EXPECT_NEAR(c, cov_across_z(cells, t, side, p), 1e-8 * std::max(1.0, std::abs(c)));
        }
      }
  }
}

TEST(Variance, ReportSe) {
  const auto rep = variance_report(fixtures::ds1());
  EXPECT_EQ(rep.n, 24u);
  EXPECT_NEAR(rep.se_y0_t1(), std::sqrt(3.0 / 24.0), 1e-14);
  ASSERT_TRUE(rep.trim(StratumId::T1, 1, Side::Lower).has_value());
  EXPECT_FALSE(rep.trim(StratumId::T12, 0, Side::Lower).has_value());
}

// Bootstrap cross-checks. Variances are on the sqrt(n) scale. DS1 places the
// trim quantile on an atom boundary, where the trimmed mean jumps with the
// share; the closed forms assume a continuous outcome.
TEST(VarianceBootstrap, TrimBoundDs1) {
  const auto ds = fixtures::ds1();
  const auto p = stratum_proportions(ds);
  const double analytic = var_trim_bound(ds, StratumId::T1, 1, Side::Lower, p);
  BootstrapOptions bo;
  bo.replicates = 10000;
  bo.seed = 2024;
  const auto boot = bootstrap(ds, named_statistic("treated_lb:T1:1"), 1, bo);
  const double v = boot.covariance()(0, 0) * 24.0;
  EXPECT_NEAR(v / analytic, 1.0, 0.15) << "bootstrap " << v << " analytic " << analytic;
}

TEST(VarianceBootstrap, CrossZDs1) {
  const auto ds = fixtures::ds1();
  const auto p = stratum_proportions(ds);
  const double analytic = cov_across_z(ds, StratumId::T1, Side::Lower, p);
  CellStatistic stat = [](const CellTable& c) {
    const auto in = make_inputs(c);
    return std::vector<double>{treated_bounds(in, StratumId::T1, 0).lb, treated_bounds(in, StratumId::T1, 1).lb};
  };
  BootstrapOptions bo;
  bo.replicates = 10000;
  bo.seed = 2025;
  const auto boot = bootstrap(ds, stat, 2, bo);
  const double c = boot.covariance()(0, 1) * 24.0;
  EXPECT_NEAR(c / analytic, 1.0, 0.20) << "bootstrap " << c << " analytic " << analytic;
}

TEST(VarianceBootstrap, TrimBoundContinuous) {
  std::mt19937_64 rng(31);
  const auto ds = fixtures::random_dataset(rng, 2000);
  const auto p = stratum_proportions(ds);
  const double n = static_cast<double>(ds.size());
  for (auto t : {StratumId::T1, StratumId::T2})
    for (int z = 0; z < 2; ++z)
      for (auto side : {Side::Lower, Side::Upper}) {
        const double analytic = var_trim_bound(ds, t, z, side, p);
        const std::string name = std::string(side == Side::Lower ? "treated_lb:" : "treated_ub:") + std::string(to_string(t)) +
                                 ":" + std::to_string(z);
        BootstrapOptions bo;
        bo.replicates = 2000;
        bo.seed = 77;
        const auto boot = bootstrap(ds, named_statistic(name), 1, bo);
        const double v = boot.covariance()(0, 0) * n;
        EXPECT_NEAR(v / analytic, 1.0, 0.15) << name << " bootstrap " << v << " analytic " << analytic;
      }
}

TEST(VarianceBootstrap, CrossZContinuous) {
  std::mt19937_64 rng(32);
  const auto ds = fixtures::random_dataset(rng, 2000);
  const auto p = stratum_proportions(ds);
  const double analytic = cov_across_z(ds, StratumId::T1, Side::Lower, p);
  CellStatistic stat = [](const CellTable& c) {
    const auto in = make_inputs(c);
    return std::vector<double>{treated_bounds(in, StratumId::T1, 0).lb, treated_bounds(in, StratumId::T1, 1).lb};
  };
  BootstrapOptions bo;
  bo.replicates = 2000;
  bo.seed = 78;
  const auto boot = bootstrap(ds, stat, 2, bo);
  const double c = boot.covariance()(0, 1) * static_cast<double>(ds.size());
  EXPECT_NEAR(c / analytic, 1.0, 0.20) << "bootstrap " << c << " analytic " << analytic;
}
