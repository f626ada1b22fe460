#pragma once

// Weighted quantile and one-sided trimmed means.
//
// Quantiles follow the left-continuous inverse of the weighted empirical CDF,
//   y_p = min{ y : F(y) >= p },
// and both trimmed sets use weak inequalities ({y <= y_q} and {y >= y_{1-q}}),
// so on discrete data the two sets can share the threshold atom.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "psbounds/error.hpp"

namespace psbounds {

/// Relative slack used when comparing cumulative weight shares against a
/// target probability. Shares such as 0.125/0.875 are not bit-equal to the
/// CDF step 1/7 they stand for.
inline constexpr double kCdfTolerance = 1e-12;

struct TrimSummary {
  double threshold = 0.0;  // the quantile that defines the trimmed set
  double mean = 0.0;
  double variance = 0.0;   // weighted plug-in variance within the trimmed set
  double mass = 0.0;       // share of total weight retained, in (0, 1]
};

/// Sorted weighted sample with prefix sums. Construction is O(n log n);
/// quantiles and trimmed means are O(log n) afterwards.
class WeightedSample {
 public:
  WeightedSample() = default;

  WeightedSample(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size())
      throw Error(Errc::InvalidArgument, "values and weights differ in length");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    values_.reserve(values.size());
    weights_.reserve(values.size());
    for (std::size_t i : order) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
        throw Error(Errc::InvalidArgument, "weights must be positive and finite");
      if (!std::isfinite(values[i])) throw Error(Errc::InvalidArgument, "values must be finite");
      values_.push_back(values[i]);
      weights_.push_back(weights[i]);
    }
    build_prefix();
  }

  /// Unit weights.
  explicit WeightedSample(std::span<const double> values)
      : WeightedSample(values, std::vector<double>(values.size(), 1.0)) {}

  bool empty() const noexcept { return values_.empty(); }
  std::size_t size() const noexcept { return values_.size(); }
  double total_weight() const noexcept { return cum_w_.empty() ? 0.0 : cum_w_.back(); }
  std::span<const double> sorted_values() const noexcept { return values_; }
  std::span<const double> sorted_weights() const noexcept { return weights_; }

  double min() const {
    require_nonempty();
    return values_.front();
  }
  double max() const {
    require_nonempty();
    return values_.back();
  }

  double mean() const {
    require_nonempty();
    return cum_wy_.back() / cum_w_.back();
  }

  /// Plug-in variance (divides by the weight total).
  double variance() const {
    require_nonempty();
    return range_variance(0, values_.size(), mean());
  }

  double quantile(double p) const {
    require_nonempty();
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(Errc::InvalidArgument, "quantile level outside [0,1]: " + std::to_string(p));
    return values_[quantile_index(p)];
  }

  /// Weighted moments of {y : y <= quantile(q)}.
  TrimSummary lower(double q) const {
    require_nonempty();
    check_share(q);
    const double t = values_[quantile_index(q)];
    const std::size_t end =
        static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), t) - values_.begin());
    return summarize(0, end, t);
  }

  /// Weighted moments of {y : y >= quantile(1 - q)}.
  TrimSummary upper(double q) const {
    require_nonempty();
    check_share(q);
    const double t = values_[quantile_index(std::max(0.0, 1.0 - q))];
    const std::size_t begin =
        static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), t) - values_.begin());
    return summarize(begin, values_.size(), t);
  }

 private:
  void build_prefix() {
    cum_w_.resize(values_.size());
    cum_wy_.resize(values_.size());
    double sw = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
      sw += weights_[i];
      swy += weights_[i] * values_[i];
      cum_w_[i] = sw;
      cum_wy_[i] = swy;
    }
  }

  void require_nonempty() const {
    if (values_.empty()) throw Error(Errc::EmptySample, "weighted sample is empty");
  }

  static void check_share(double q) {
    if (!(q > 0.0 && q <= 1.0))
      throw Error(Errc::InvalidShare, "trim share outside (0,1]: " + std::to_string(q));
  }

  std::size_t quantile_index(double p) const {
    const double total = cum_w_.back();
    const double target = p * total - kCdfTolerance * total;
    auto it = std::lower_bound(cum_w_.begin(), cum_w_.end(), target);
    if (it == cum_w_.end()) --it;
    return static_cast<std::size_t>(it - cum_w_.begin());
  }

  double range_weight(std::size_t b, std::size_t e) const {
    return cum_w_[e - 1] - (b == 0 ? 0.0 : cum_w_[b - 1]);
  }
  double range_wy(std::size_t b, std::size_t e) const {
    return cum_wy_[e - 1] - (b == 0 ? 0.0 : cum_wy_[b - 1]);
  }

  double range_variance(std::size_t b, std::size_t e, double mu) const {
    double ss = 0.0, sw = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double dev = values_[i] - mu;
      ss += weights_[i] * dev * dev;
      sw += weights_[i];
    }
    return ss / sw;
  }

  TrimSummary summarize(std::size_t b, std::size_t e, double threshold) const {
    if (e <= b) throw Error(Errc::DegenerateTrim, "trimmed set retains no mass");
    TrimSummary out;
    out.threshold = threshold;
    const double w = range_weight(b, e);
    // Exact sums when the set is the whole sample keep q = 1 equal to mean().
    out.mean = (b == 0 && e == values_.size()) ? mean() : range_wy(b, e) / w;
    out.variance = range_variance(b, e, out.mean);
    out.mass = w / cum_w_.back();
    return out;
  }

  std::vector<double> values_;
  std::vector<double> weights_;
  std::vector<double> cum_w_;
  std::vector<double> cum_wy_;
};

inline double weighted_quantile(const WeightedSample& s, double p) { return s.quantile(p); }

inline double trimmed_mean_lower(const WeightedSample& s, double q) { return s.lower(q).mean; }

inline double trimmed_mean_upper(const WeightedSample& s, double q) { return s.upper(q).mean; }

}  // namespace psbounds
