#pragma once

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "psbounds/data.hpp"

namespace fixtures {

inline void add(std::vector<psbounds::Observation>& rows, int d, int z, std::optional<double> y, double w = 1.0) {
  psbounds::Observation o;
  o.d = d;
  o.z = z;
  o.s = y ? 1 : 0;
  o.y = y;
  o.w = w;
  rows.push_back(o);
}

// 24 rows, unit weights:
//   (0,1) y in {1,2} + 2 unselected   (0,0) y in {1,2,3} + 1 unselected
//   (1,0) y in {1..7} + 1 unselected  (1,1) y in {1..8}
inline std::vector<psbounds::Observation> ds1_rows() {
  std::vector<psbounds::Observation> r;
  for (double y : {1.0, 2.0}) add(r, 0, 1, y);
  for (int i = 0; i < 2; ++i) add(r, 0, 1, std::nullopt);
  for (double y : {1.0, 2.0, 3.0}) add(r, 0, 0, y);
  add(r, 0, 0, std::nullopt);
  for (int y = 1; y <= 7; ++y) add(r, 1, 0, y);
  add(r, 1, 0, std::nullopt);
  for (int y = 1; y <= 8; ++y) add(r, 1, 1, y);
  return r;
}

inline psbounds::Dataset ds1() { return psbounds::Dataset(ds1_rows()); }

// Random dataset with every cell populated and continuous outcomes.
inline psbounds::Dataset random_dataset(std::mt19937_64& rng, std::size_t n_per_cell, bool weighted = false,
                                        std::array<double, 4> p_select = {0.6, 0.4, 0.8, 0.9}) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.5, 2.0);
  std::vector<psbounds::Observation> r;
  for (int d = 0; d < 2; ++d)
    for (int z = 0; z < 2; ++z) {
      std::bernoulli_distribution sel(p_select[2 * d + z]);
      bool any = false;
      for (std::size_t i = 0; i < n_per_cell; ++i) {
        const bool s = sel(rng) || (!any && i + 1 == n_per_cell);
        any = any || s;
        add(r, d, z, s ? std::optional<double>(1.0 + d + normal(rng)) : std::nullopt, weighted ? unif(rng) : 1.0);
      }
    }
  return psbounds::Dataset(std::move(r));
}

}  // namespace fixtures
