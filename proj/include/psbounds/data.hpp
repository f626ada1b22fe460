#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psbounds/error.hpp"

namespace psbounds {

struct Observation {
  std::optional<double> y;  // present iff s == 1
  int d = 0;
  int z = 0;
  int s = 0;
  double w = 1.0;
  std::vector<double> x;
};

/// Checks the per-row invariants; `row` is only used in the error report.
inline void validate_observation(const Observation& o, long row = -1) {
  auto binary = [](int v) { return v == 0 || v == 1; };
  if (!binary(o.d) || !binary(o.z) || !binary(o.s))
    throw Error(Errc::InvalidObservation, "d, z and s must be 0 or 1", row);
  if (!(o.w > 0.0) || !std::isfinite(o.w))
    throw Error(Errc::NonpositiveWeight, "weight must be positive and finite", row, "w");
  if (o.s == 0 && o.y.has_value())
    throw Error(Errc::OutcomePresentWhenUnselected, "outcome present with s = 0", row, "y");
  if (o.s == 1 && (!o.y.has_value() || !std::isfinite(*o.y)))
    throw Error(Errc::BadValue, "selected row needs a finite outcome", row, "y");
  for (double v : o.x)
    if (!std::isfinite(v)) throw Error(Errc::BadValue, "covariate is not finite", row, "x");
}

/// Immutable, validated collection of observations in input order.
class Dataset {
 public:
  Dataset(std::vector<Observation> observations, std::vector<std::string> covariate_names = {})
      : obs_(std::move(observations)), covariate_names_(std::move(covariate_names)) {
    if (obs_.empty()) throw Error(Errc::EmptyDataset, "dataset has no observations");
    const std::size_t arity = covariate_names_.size();
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      validate_observation(obs_[i], static_cast<long>(i) + 1);
      if (obs_[i].x.size() != arity)
        throw Error(Errc::InvalidObservation,
                    "covariate arity " + std::to_string(obs_[i].x.size()) + " != " + std::to_string(arity),
                    static_cast<long>(i) + 1);
    }
  }

  std::size_t size() const noexcept { return obs_.size(); }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }
  const std::vector<Observation>& observations() const noexcept { return obs_; }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
  auto begin() const noexcept { return obs_.begin(); }
  auto end() const noexcept { return obs_.end(); }

  double total_weight() const {
    double t = 0.0;
    for (const auto& o : obs_) t += o.w;
    return t;
  }

 private:
  std::vector<Observation> obs_;
  std::vector<std::string> covariate_names_;
};

struct CellStats {
  std::size_t n = 0;
  double w_total = 0.0;
  double p_select = 0.0;
  std::optional<double> y_mean;  // absent when nobody in the cell is selected
  std::optional<double> y_var;   // plug-in: divides by the selected weight
};

/// Weighted selection rate and outcome moments for the (D = d, Z = z) cell.
inline CellStats cell_stats(const Dataset& ds, int d, int z) {
  CellStats c;
  double w_sel = 0.0, wy = 0.0;
  for (const auto& o : ds) {
    if (o.d != d || o.z != z) continue;
    ++c.n;
    c.w_total += o.w;
    if (o.s == 1) {
      w_sel += o.w;
      wy += o.w * *o.y;
    }
  }
  if (c.n == 0)
    throw Error(Errc::EmptyCell, "cell (d=" + std::to_string(d) + ", z=" + std::to_string(z) + ") is empty");
  c.p_select = w_sel / c.w_total;
  if (w_sel > 0.0) {
    const double mu = wy / w_sel;
    double ss = 0.0;
    for (const auto& o : ds)
      if (o.d == d && o.z == z && o.s == 1) ss += o.w * (*o.y - mu) * (*o.y - mu);
    c.y_mean = mu;
    c.y_var = ss / w_sel;
  }
  return c;
}

}  // namespace psbounds
