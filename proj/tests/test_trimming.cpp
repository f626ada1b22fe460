#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "psbounds/trimming.hpp"

using namespace psbounds;

namespace {

WeightedSample seq(int lo, int hi) {
  std::vector<double> v;
  for (int i = lo; i <= hi; ++i) v.push_back(i);
  return WeightedSample(v);
}

}  // namespace

TEST(Trimming, Examples) {
  EXPECT_EQ(weighted_quantile(seq(1, 7), 4.0 / 7.0), 4.0);
  EXPECT_EQ(weighted_quantile(WeightedSample(std::vector<double>{1, 2}, std::vector<double>{3, 1}), 0.5), 1.0);
  EXPECT_DOUBLE_EQ(trimmed_mean_lower(seq(1, 8), 0.5), 2.5);
  EXPECT_DOUBLE_EQ(trimmed_mean_lower(seq(1, 8), 0.25), 1.5);
  EXPECT_DOUBLE_EQ(trimmed_mean_upper(seq(1, 8), 0.5), 6.0);
  EXPECT_DOUBLE_EQ(trimmed_mean_upper(seq(1, 7), 4.0 / 7.0), 5.0);
}

TEST(Trimming, EndPoints) {
  const auto s = WeightedSample(std::vector<double>{3, -1, 4, 1, 5}, std::vector<double>{1, 2, 1, 3, 1});
  EXPECT_EQ(s.quantile(0.0), -1.0);
  EXPECT_EQ(s.quantile(1.0), 5.0);
  EXPECT_DOUBLE_EQ(trimmed_mean_lower(s, 1.0), s.mean());
  EXPECT_DOUBLE_EQ(trimmed_mean_upper(s, 1.0), s.mean());
}

TEST(Trimming, Errors) {
  WeightedSample empty;
  try {
    empty.quantile(0.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptySample);
  }
  const auto s = seq(1, 4);
  for (double q : {0.0, -0.1, 1.5}) {
    try {
      s.lower(q);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::InvalidShare);
    }
  }
}

// Exhaustive comparison with the sort-and-accumulate oracle.
TEST(TrimmingOracle, ExhaustiveSmallSamples) {
  const auto r = oracles::trimming_sweep(6);
  EXPECT_GT(r.samples, 0u);
  EXPECT_EQ(r.mismatches, 0u);
}

TEST(TrimmingProperty, OrderingAndMonotonicity) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> wdist(1, 5);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> v, w;
    const int m = 1 + rep % 30;
    for (int i = 0; i < m; ++i) {
      v.push_back(std::round(normal(rng) * 3.0));  // ties on purpose
      w.push_back(wdist(rng));
    }
    const WeightedSample s(v, w);
    double prev_lo = -1e300, prev_hi = 1e300;
    for (int k = 1; k <= 20; ++k) {
      const double q = k / 20.0;
      const double lo = s.lower(q).mean, hi = s.upper(q).mean;
      EXPECT_LE(lo, s.mean() + 1e-12);
      EXPECT_GE(hi, s.mean() - 1e-12);
      EXPECT_GE(lo, prev_lo - 1e-12);
      EXPECT_LE(hi, prev_hi + 1e-12);
      prev_lo = lo;
      prev_hi = hi;
    }
    // replicating every observation leaves everything unchanged
    std::vector<double> v3, w3;
    for (int r = 0; r < 3; ++r) {
      v3.insert(v3.end(), v.begin(), v.end());
      w3.insert(w3.end(), w.begin(), w.end());
    }
    const WeightedSample s3(v3, w3);
    for (int k = 0; k <= 16; ++k) {
      const double p = k / 16.0;
      EXPECT_EQ(s.quantile(p), s3.quantile(p));
      if (k > 0) {
        EXPECT_NEAR(s.lower(p).mean, s3.lower(p).mean, 1e-12);
        EXPECT_NEAR(s.upper(p).mean, s3.upper(p).mean, 1e-12);
      }
    }
  }
}
