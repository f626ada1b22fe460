#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "psbounds/inference.hpp"

using namespace psbounds;

namespace {

ClrOptions clr_options(std::size_t sims, std::uint64_t seed, unsigned workers = 1) {
  ClrOptions o;
  o.sims = sims;
  o.seed = seed;
  o.workers = workers;
  return o;
}

Eigen::MatrixXd diag2(double a, double b) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Imbens-Manski

TEST(ImCi, WorkedExample) {
  const auto b = im_ci({1.0, 3.5}, 0.2, 0.3, 0.95);
  EXPECT_NEAR(b.lo, 0.671, 1e-4);
  EXPECT_NEAR(b.hi, 3.9935, 1e-4);
  EXPECT_EQ(b.method, CiMethod::ImbensManski);
  EXPECT_FALSE(b.collapsed);
}

TEST(ImCi, ZeroSeIsTheInterval) {
  const auto b = im_ci({1.0, 3.5}, 0.0, 0.0);
  EXPECT_EQ(b.lo, 1.0);
  EXPECT_EQ(b.hi, 3.5);
}

TEST(ImCi, NinetyPercent) {
  EXPECT_NEAR(normal_quantile(0.9), 1.2816, 1e-4);
  const auto b = im_ci({0.0, 0.0}, 1.0, 1.0, 0.9);
  EXPECT_NEAR(b.hi, 1.2816, 1e-4);
  EXPECT_NEAR(b.lo, -1.2816, 1e-4);
}

TEST(ImCi, WidthIsMonotone) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Interval ate{u(rng), 1.0 + u(rng)};
    const double a = u(rng), b = u(rng), level = 0.5 + 0.45 * u(rng);
    const auto base = im_ci(ate, a, b, level);
    const auto wider_lb = im_ci(ate, a + 0.1, b, level);
    const auto wider_ub = im_ci(ate, a, b + 0.1, level);
    const auto higher = im_ci(ate, a, b, level + 0.04);
    EXPECT_LE(wider_lb.lo, base.lo);
    EXPECT_GE(wider_ub.hi, base.hi);
    EXPECT_LE(higher.lo, base.lo);
    EXPECT_GE(higher.hi, base.hi);
    EXPECT_LE(base.lo, ate.lb);
    EXPECT_GE(base.hi, ate.ub);
  }
}

TEST(ImCi, CrossedBandCollapses) {
  const auto b = im_ci({2.0, 1.0}, 0.1, 0.1);
  EXPECT_TRUE(b.collapsed);
  EXPECT_LE(b.lo, b.hi);
  EXPECT_DOUBLE_EQ(b.lo, 1.5);
}

TEST(ImCi, NegativeSe) {
  EXPECT_THROW(im_ci({0, 1}, -0.1, 0.1), Error);
  EXPECT_THROW(im_ci({0, 1}, 0.1, 0.1, 1.0), Error);
}

// ---------------------------------------------------------------------------
// Gaussian max

TEST(GaussianMax, MedianOfTwoIndependent) {
  const GaussianMax gm(Eigen::MatrixXd::Identity(2, 2), 200000, 42);
  EXPECT_EQ(gm.dimension(), 2u);
  EXPECT_NEAR(gm.quantile(0.5), 0.5449, 0.01);
}

TEST(GaussianMax, SingleCoordinateIsExact) {
  const GaussianMax gm(Eigen::MatrixXd::Identity(1, 1), 1000, 1);
  EXPECT_EQ(gm.quantile(0.5), 0.0);
  EXPECT_EQ(gm.quantile(0.975), normal_quantile(0.975));
}

TEST(GaussianMax, PerfectCorrelationMerges) {
  const Eigen::MatrixXd c = Eigen::MatrixXd::Ones(3, 3);
  const GaussianMax gm(c, 1000, 1);
  EXPECT_EQ(gm.dimension(), 1u);
  EXPECT_EQ(gm.quantile(0.5), 0.0);
}

TEST(GaussianMax, NonPsd) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 2.0, 2.0, 1.0;
  try {
    GaussianMax gm(c, 1000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPSDCovariance);
  }
}

TEST(GaussianMax, WorkerCountDoesNotChangeQuantiles) {
  Eigen::MatrixXd c(3, 3);
  c << 1.0, 0.3, -0.2, 0.3, 1.0, 0.1, -0.2, 0.1, 1.0;
  const GaussianMax one(c, 5000, 9, 1);
  for (unsigned w : {2u, 3u, 8u}) {
    const GaussianMax many(c, 5000, 9, w);
    for (double p : {0.1, 0.5, 0.9, 0.975}) EXPECT_EQ(one.quantile(p), many.quantile(p));
  }
}

TEST(GaussianMax, QuantileNotBelowSingleCoordinate) {
  const GaussianMax gm(Eigen::MatrixXd::Identity(4, 4), 4000, 3);
  for (double p : {0.05, 0.3, 0.5, 0.9}) EXPECT_GE(gm.quantile(p), normal_quantile(p));
}

// ---------------------------------------------------------------------------
// CLR

TEST(Clr, SingleCoordinateIsThePlainEstimate) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(1, 1, 0.04);
  const auto up = clr_side(Side::Upper, {2.0}, v, 0.975, clr_options(10000, 1));
  EXPECT_EQ(up.kappa_half, 0.0);
  EXPECT_EQ(up.bound, 2.0);
  EXPECT_NEAR(up.ci_bound, 2.0 + normal_quantile(0.975) * 0.2, 1e-12);
  const auto lo = clr_side(Side::Lower, {2.0}, v, 0.975, clr_options(10000, 1));
  EXPECT_EQ(lo.bound, 2.0);
  EXPECT_NEAR(lo.ci_bound, 2.0 - normal_quantile(0.975) * 0.2, 1e-12);
}

TEST(Clr, PerfectlyCorrelatedIsTheIntersection) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(2, 2, 0.25);
  const auto up = clr_side(Side::Upper, {3.0, 2.5}, v, 0.975, clr_options(10000, 2));
  EXPECT_EQ(up.kappa_half, 0.0);
  EXPECT_EQ(up.bound, 2.5);
}

TEST(Clr, IndependentEqualSeUsesTheMaxMedian) {
  const auto up = clr_side(Side::Upper, {1.0, 1.0}, diag2(1.0, 1.0), 0.975, clr_options(200000, 3));
  EXPECT_NEAR(up.kappa_half, 0.5449, 0.01);
  EXPECT_NEAR(up.bound, 1.0 + up.kappa_half, 1e-12);
}

TEST(Clr, AllZeroSe) {
  const auto up = clr_side(Side::Upper, {3.0, 2.0}, diag2(0.0, 0.0), 0.975, clr_options(10000, 4));
  EXPECT_TRUE(up.degenerate_se);
  EXPECT_EQ(up.bound, 2.0);
  EXPECT_EQ(up.ci_bound, 2.0);
  const auto lo = clr_side(Side::Lower, {3.0, 2.0}, diag2(0.0, 0.0), 0.975, clr_options(10000, 4));
  EXPECT_EQ(lo.bound, 3.0);
}

TEST(Clr, NonPsdCovariance) {
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 3.0, 3.0, 1.0;
  try {
    clr_side(Side::Upper, {0.0, 0.0}, c, 0.975, clr_options(10000, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonPSDCovariance);
  }
}

TEST(Clr, SelectionDropsFarCoordinates) {
  ClrOptions o = clr_options(10000, 6);
  o.n = 10000;
  const auto up = clr_side(Side::Upper, {0.0, 50.0}, diag2(0.01, 0.01), 0.975, o);
  ASSERT_EQ(up.selected.size(), 1u);
  EXPECT_EQ(up.selected[0], 0u);
  EXPECT_EQ(up.kappa_half, 0.0);
}

TEST(Clr, WiderThanIntersectionAndInsideCi) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<double> lt{normal(rng), normal(rng)}, ut{3 + normal(rng), 3 + normal(rng)};
    Eigen::MatrixXd lc = diag2(u(rng), u(rng)), uc = diag2(u(rng), u(rng));
    lc(0, 1) = lc(1, 0) = 0.5 * std::sqrt(lc(0, 0) * lc(1, 1)) * (2 * u(rng) - 1);
    ClrOptions o = clr_options(10000, static_cast<std::uint64_t>(rep));
    if (rep % 2) o.n = 500;
    const auto r = clr_bounds(lt, lc, ut, uc, 0.95, o);
    EXPECT_LE(r.bounds.lb, std::max(lt[0], lt[1]));
    EXPECT_GE(r.bounds.ub, std::min(ut[0], ut[1]));
    EXPECT_LE(r.ci.lo, r.bounds.lb);
    EXPECT_GE(r.ci.hi, r.bounds.ub);
    EXPECT_EQ(r.ci.method, CiMethod::CLR);
  }
}

TEST(Clr, TwoSidedLevel) {
  const Eigen::MatrixXd v = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const auto r = clr_bounds({0.0}, v, {1.0}, v, 0.95, clr_options(10000, 8));
  EXPECT_NEAR(r.ci.lo, -normal_quantile(0.975), 1e-12);
  EXPECT_NEAR(r.ci.hi, 1.0 + normal_quantile(0.975), 1e-12);
  EXPECT_THROW(clr_bounds({0.0}, v, {1.0}, v, 1.5, clr_options(10000, 8)), Error);
}

TEST(Clr, Deterministic) {
  const auto a = clr_bounds({0.0, 0.1}, diag2(1, 2), {2.0, 2.2}, diag2(1, 1), 0.95, clr_options(20000, 11, 1));
  const auto b = clr_bounds({0.0, 0.1}, diag2(1, 2), {2.0, 2.2}, diag2(1, 1), 0.95, clr_options(20000, 11, 4));
  EXPECT_EQ(a.bounds.lb, b.bounds.lb);
  EXPECT_EQ(a.bounds.ub, b.bounds.ub);
  EXPECT_EQ(a.ci.lo, b.ci.lo);
  EXPECT_EQ(a.ci.hi, b.ci.hi);
}

// ---------------------------------------------------------------------------
// Standard errors of bound terms

TEST(AnalyticSide, T1LowerOnDs1) {
  const CellTable cells(fixtures::ds1());
  const auto p = stratum_proportions(cells);
  const auto b = type_bounds(make_inputs(cells, p), StratumId::T1, Regime::Basic);
  const Linearizer lz(cells, p);
  const auto side = analytic_side(lz, b.lower_terms, b.binding_lower());
  ASSERT_TRUE(side.available);
  ASSERT_EQ(b.lower_terms.size(), 2u);
  const double vc = var_y0_t1(cells);
  for (std::size_t i = 0; i < 2; ++i) {
    const int z = b.lower_terms[i].treated.z;
    const double expect = (var_trim_bound(cells, StratumId::T1, z, Side::Lower, p) + vc) / 24.0;
    EXPECT_NEAR(side.cov(i, i), expect, 1e-12);
  }
  const double off = (cov_across_z(cells, StratumId::T1, Side::Lower, p) + vc) / 24.0;
  EXPECT_NEAR(side.cov(0, 1), off, 1e-12);
  EXPECT_NEAR(side.se_binding(), std::sqrt(side.cov(side.binding, side.binding)), 0.0);
}

TEST(AnalyticSide, SupportTermsNeedTheBootstrap) {
  const CellTable cells(fixtures::ds1());
  const auto p = stratum_proportions(cells);
  const auto b = type_bounds(make_inputs(cells, p), StratumId::T4, Regime::Basic);
  const Linearizer lz(cells, p);
  const auto side = analytic_side(lz, b.upper_terms, b.binding_upper());
  EXPECT_FALSE(side.available);
  EXPECT_TRUE(std::isnan(side.se_binding()));
}

TEST(BootstrapSide, MatchesAnalyticOnContinuousData) {
  std::mt19937_64 rng(21);
  const auto ds = fixtures::random_dataset(rng, 2000);
  const CellTable cells(ds);
  const auto p = stratum_proportions(cells);
  const auto b = type_bounds(make_inputs(cells, p), StratumId::T1, Regime::Basic);
  const Linearizer lz(cells, p);
  const auto an = analytic_side(lz, b.upper_terms, b.binding_upper());
  BootstrapOptions bo;
  bo.replicates = 2000;
  bo.seed = 5;
  const auto boot = bootstrap(ds, terms_statistic(b.upper_terms), b.upper_terms.size(), bo);
  const auto bs = bootstrap_side(boot, 0, b.upper_terms, b.binding_upper());
  ASSERT_TRUE(bs.available);
  EXPECT_EQ(bs.replicates_used, 2000u);
  EXPECT_NEAR(an.se_binding() / bs.se_binding(), 1.0, 0.15);
}
