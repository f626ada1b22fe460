#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "psbounds/data.hpp"
#include "psbounds/error.hpp"
#include "psbounds/trimming.hpp"

namespace psbounds {

struct CellSummary {
  std::size_t n = 0;
  std::size_t n_selected = 0;
  double w_total = 0.0;
  double w_selected = 0.0;
  WeightedSample outcomes;  // selected members only
};

/// One pass over a dataset: the four (D, Z) cells with their sorted selected
/// outcome samples. Every estimator reads from this table, so a dataset is
/// scanned and sorted once per analysis.
class CellTable {
 public:
  explicit CellTable(const Dataset& ds) : n_(ds.size()) {
    build(ds.size(), [&](std::size_t i) -> const Observation& { return ds[i]; });
  }

  /// Table of the rows listed in `rows` (repeats allowed), as drawn by a
  /// resampling scheme.
  CellTable(const Dataset& ds, std::span<const std::size_t> rows) : n_(rows.size()) {
    build(rows.size(), [&](std::size_t i) -> const Observation& { return ds[rows[i]]; });
  }

  std::size_t n() const noexcept { return n_; }
  double total_weight() const noexcept { return total_weight_; }

  const CellSummary& cell(int d, int z) const { return cells_[slot(d, z)]; }

  /// Weighted P(S = 1 | D = d, Z = z).
  double p_select(int d, int z) const {
    const auto& c = nonempty(d, z);
    return c.w_selected / c.w_total;
  }

  /// Weighted E[1{D = d, Z = z}].
  double mass(int d, int z) const { return cell(d, z).w_total / total_weight_; }

  /// Weighted E[S 1{D = d, Z = z}].
  double selected_mass(int d, int z) const { return cell(d, z).w_selected / total_weight_; }

  const WeightedSample& outcomes(int d, int z) const {
    const auto& c = nonempty(d, z);
    if (c.n_selected == 0)
      throw Error(Errc::NoSelectedInCell, "no selected observations in cell " + label(d, z));
    return c.outcomes;
  }

  double outcome_min() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : cells_)
      if (!c.outcomes.empty()) m = std::min(m, c.outcomes.min());
    if (m == std::numeric_limits<double>::infinity())
      throw Error(Errc::NoSelectedObservations, "dataset has no selected observations");
    return m;
  }

  double outcome_max() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : cells_)
      if (!c.outcomes.empty()) m = std::max(m, c.outcomes.max());
    if (m == -std::numeric_limits<double>::infinity())
      throw Error(Errc::NoSelectedObservations, "dataset has no selected observations");
    return m;
  }

  static std::string label(int d, int z) {
    return "(d=" + std::to_string(d) + ", z=" + std::to_string(z) + ")";
  }

 private:
  template <class Row>
  void build(std::size_t count, Row row) {
    std::array<std::vector<double>, 4> ys, ws;
    for (std::size_t i = 0; i < count; ++i) {
      const Observation& o = row(i);
      auto& c = cells_[slot(o.d, o.z)];
      ++c.n;
      c.w_total += o.w;
      total_weight_ += o.w;
      if (o.s == 1) {
        ++c.n_selected;
        c.w_selected += o.w;
        ys[slot(o.d, o.z)].push_back(*o.y);
        ws[slot(o.d, o.z)].push_back(o.w);
      }
    }
    for (int k = 0; k < 4; ++k) cells_[k].outcomes = WeightedSample(ys[k], ws[k]);
  }

  static int slot(int d, int z) { return 2 * d + z; }

  const CellSummary& nonempty(int d, int z) const {
    const auto& c = cell(d, z);
    if (c.n == 0) throw Error(Errc::EmptyCell, "cell " + label(d, z) + " is empty");
    return c;
  }

  std::size_t n_ = 0;
  double total_weight_ = 0.0;
  std::array<CellSummary, 4> cells_{};
};

}  // namespace psbounds
