#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls into the estimators it checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "psbounds/trimming.hpp"

namespace oracles {

struct BruteForce {
  std::vector<std::pair<double, int>> pts;  // sorted by value
  long total = 0;

  BruteForce(const std::vector<double>& v, const std::vector<int>& w) {
    for (std::size_t i = 0; i < v.size(); ++i) pts.emplace_back(v[i], w[i]);
    std::sort(pts.begin(), pts.end(), [](auto& a, auto& b) { return a.first < b.first; });
    for (auto& p : pts) total += p.second;
  }

  // p = k / den exactly; first y whose cumulative weight share reaches p.
  double quantile(int k, int den) const {
    long cum = 0;
    for (auto& p : pts) {
      cum += p.second;
      if (static_cast<long>(den) * cum >= static_cast<long>(k) * total) return p.first;
    }
    return pts.back().first;
  }

  double mean_where(const std::function<bool(double)>& keep) const {
    double sw = 0, swy = 0;
    for (auto& p : pts)
      if (keep(p.first)) {
        sw += p.second;
        swy += p.second * p.first;
      }
    return swy / sw;
  }
};

struct SweepResult {
  std::size_t samples = 0;
  std::size_t checks = 0;
  std::size_t mismatches = 0;
};

/// All samples of size 1..max_size: every tie structure of the sorted values
/// (a composition of the size into blocks of equal values), every weight
/// vector in {1,2,3}^m, presented to the estimator in reverse order, at
/// p in {0, 1/8, ..., 1}.
inline SweepResult trimming_sweep(int max_size) {
  SweepResult r;
  constexpr int den = 8;
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  for (int m = 1; m <= max_size; ++m) {
    const int compositions = 1 << (m - 1);
    int weight_vectors = 1;
    for (int i = 0; i < m; ++i) weight_vectors *= 3;
    for (int c = 0; c < compositions; ++c) {
      std::vector<double> v(m);
      double level = 1.0;
      for (int i = 0; i < m; ++i) {
        if (i > 0 && (c >> (i - 1)) & 1) level += 1.0 + 0.25 * i;  // uneven gaps
        v[i] = level;
      }
      std::vector<double> rev(v.rbegin(), v.rend());
      for (int wc = 0; wc < weight_vectors; ++wc) {
        std::vector<int> w(m);
        std::vector<double> wd(m);
        for (int i = 0, x = wc; i < m; ++i, x /= 3) w[i] = 1 + x % 3;
        for (int i = 0; i < m; ++i) wd[i] = w[m - 1 - i];
        const BruteForce bf(v, w);
        const psbounds::WeightedSample s(rev, wd);
        ++r.samples;
        for (int k = 0; k <= den; ++k) {
          const double p = static_cast<double>(k) / den;
          ++r.checks;
          if (s.quantile(p) != bf.quantile(k, den)) ++r.mismatches;
          if (k == 0) continue;
          const double tl = bf.quantile(k, den), tu = bf.quantile(den - k, den);
          r.checks += 2;
          if (!close(s.lower(p).mean, bf.mean_where([&](double y) { return y <= tl; })) ) ++r.mismatches;
          if (!close(s.upper(p).mean, bf.mean_where([&](double y) { return y >= tu; })) ) ++r.mismatches;
        }
      }
    }
  }
  return r;
}

/// Delta-method variance of g(theta) for independent estimators with
/// variances v, gradient by central differences with a relative step.
inline double delta_variance(const std::function<double(const std::vector<double>&)>& g,
                             const std::vector<double>& theta, const std::vector<double>& v,
                             std::vector<double>* gradient = nullptr) {
  double total = 0.0;
  if (gradient) gradient->assign(theta.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
    auto up = theta, dn = theta;
    up[i] += h;
    dn[i] -= h;
    const double d = (g(up) - g(dn)) / (2 * h);
    if (gradient) (*gradient)[i] = d;
    total += d * d * v[i];
  }
  return total;
}

}  // namespace oracles
