#pragma once

// Nonparametric bootstrap over rows. Replicate b draws its rows from an engine
// seeded with derive_seed(seed, b), so output is a function of the seed alone.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "psbounds/bounds.hpp"
#include "psbounds/cells.hpp"
#include "psbounds/data.hpp"
#include "psbounds/dominance.hpp"
#include "psbounds/error.hpp"
#include "psbounds/parallel.hpp"
#include "psbounds/strata.hpp"

namespace psbounds {

/// A vector-valued estimator evaluated on the cell table of a resample.
using CellStatistic = std::function<std::vector<double>(const CellTable&)>;

struct BootstrapOptions {
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  /// Resample within each (D, Z) cell, keeping cell counts fixed.
  bool stratified = false;
  unsigned workers = worker_count();
};

/// All replicates in replicate order. A replicate whose statistic threw holds
/// NaN in every coordinate; non-finite coordinates are stored as NaN.
struct BootstrapResult {
  std::size_t dim = 0;
  std::vector<std::vector<double>> draws;

  /// Sample covariance of the listed coordinates over the replicates where all
  /// of them are finite. `used` receives that replicate count.
  Eigen::MatrixXd covariance(const std::vector<std::size_t>& idx, std::size_t* used = nullptr) const {
    std::vector<const std::vector<double>*> rows;
    for (const auto& d : draws) {
      bool ok = true;
      for (auto i : idx) ok = ok && std::isfinite(d[i]);
      if (ok) rows.push_back(&d);
    }
    if (used) *used = rows.size();
    const auto b = static_cast<Eigen::Index>(rows.size());
    const auto k = static_cast<Eigen::Index>(idx.size());
    if (b < 2) return Eigen::MatrixXd::Constant(k, k, std::numeric_limits<double>::quiet_NaN());
    Eigen::MatrixXd x(b, k);
    for (Eigen::Index r = 0; r < b; ++r)
      for (Eigen::Index c = 0; c < k; ++c) x(r, c) = (*rows[r])[idx[c]];
    // Shift by the first replicate so constant coordinates come out exactly 0.
    const Eigen::RowVectorXd first = x.row(0);
    x.rowwise() -= first;
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;
    return (x.transpose() * x) / static_cast<double>(b - 1);
  }

  Eigen::MatrixXd covariance() const {
    std::vector<std::size_t> idx(dim);
    for (std::size_t i = 0; i < dim; ++i) idx[i] = i;
    return covariance(idx);
  }

  /// Replicates in which coordinate i is undefined.
  std::size_t failures(std::size_t i) const {
    std::size_t f = 0;
    for (const auto& d : draws) f += std::isfinite(d[i]) ? 0 : 1;
    return f;
  }

  double se(std::size_t i) const {
    const Eigen::MatrixXd c = covariance({i});
    return std::sqrt(c(0, 0));
  }
};

namespace bootstrap_detail {

inline std::vector<std::size_t> draw_rows(const Dataset& ds, const std::vector<std::vector<std::size_t>>& strata,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> rows;
  rows.reserve(ds.size());
  if (strata.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    for (std::size_t i = 0; i < ds.size(); ++i) rows.push_back(pick(rng));
    return rows;
  }
  for (const auto& members : strata) {
    if (members.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    for (std::size_t i = 0; i < members.size(); ++i) rows.push_back(members[pick(rng)]);
  }
  return rows;
}

}  // namespace bootstrap_detail

/// Replicates where the statistic throws a library Error count as failures
/// (all NaN) and are excluded downstream.
inline BootstrapResult bootstrap(const Dataset& ds, const CellStatistic& statistic, std::size_t dim,
                                 const BootstrapOptions& opt) {
  if (opt.replicates < 100) throw Error(Errc::InvalidArgument, "bootstrap needs at least 100 replicates");
  std::vector<std::vector<std::size_t>> strata;
  if (opt.stratified) {
    strata.resize(4);
    for (std::size_t i = 0; i < ds.size(); ++i) strata[2 * ds[i].d + ds[i].z].push_back(i);
  }
  BootstrapResult r;
  r.dim = dim;
  r.draws.assign(opt.replicates, std::vector<double>(dim, std::numeric_limits<double>::quiet_NaN()));
  parallel_for(
      opt.replicates,
      [&](std::size_t b) {
        const auto rows = bootstrap_detail::draw_rows(ds, strata, derive_seed(opt.seed, b));
        std::vector<double> v;
        try {
          CellTable cells(ds, rows);
          v = statistic(cells);
        } catch (const Error&) {
          return;
        }
        if (v.size() != dim) throw Error(Errc::InvalidArgument, "statistic returned the wrong dimension");
        for (std::size_t i = 0; i < dim; ++i)
          if (std::isfinite(v[i])) r.draws[b][i] = v[i];
      },
      opt.workers);
  return r;
}

struct BootstrapSE {
  double se = 0.0;
  std::size_t failures = 0;
};

inline BootstrapSE bootstrap_se(const Dataset& ds, const CellStatistic& statistic, std::size_t replicates,
                                std::uint64_t seed) {
  BootstrapOptions opt;
  opt.replicates = replicates;
  opt.seed = seed;
  const auto r = bootstrap(ds, statistic, 1, opt);
  const std::size_t failures = r.failures(0);
  if (replicates - failures < 2)
    throw Error(Errc::DegenerateResample, "statistic undefined in " + std::to_string(failures) + " of " +
                                              std::to_string(replicates) + " resamples");
  return {r.se(0), failures};
}

// ---------------------------------------------------------------------------
// Named statistics

/// Values of a fixed list of bound terms, re-estimated on each resample. The
/// term structure (which trim, which untreated mean) is held fixed.
inline CellStatistic terms_statistic(std::vector<BoundTerm> terms) {
  return [terms = std::move(terms)](const CellTable& cells) {
    const BoundsInputs in = make_inputs(cells);
    std::vector<double> v(terms.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      try {
        v[i] = in.treated(terms[i].treated) - in.untreated(terms[i].untreated);
      } catch (const Error&) {
      }
    }
    return v;
  };
}

namespace bootstrap_detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline int parse_bit(std::string_view s, std::string_view name) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw Error(Errc::InvalidArgument, "expected 0 or 1 in statistic '" + std::string(name) + "'");
}

}  // namespace bootstrap_detail

/// Scalar statistics by name:
///   y0_t1, y0_t2, support_lb, support_ub, pi1, pi2, pi4, pi12, pi16,
///   mean_selected:D:Z, treated_lb:T:Z, treated_ub:T:Z,
///   ate_lb:T:REGIME, ate_ub:T:REGIME
inline CellStatistic named_statistic(std::string_view name) {
  using namespace bootstrap_detail;
  const auto parts = split(name, ':');
  const std::string key(parts[0]);
  auto bad = [&] { return Error(Errc::InvalidArgument, "unknown statistic '" + std::string(name) + "'"); };
  auto stratum_at = [&](std::size_t i) {
    auto t = parse_stratum(parts.at(i));
    if (!t) throw bad();
    return *t;
  };
  auto one = [](auto f) -> CellStatistic {
    return [f](const CellTable& c) { return std::vector<double>{f(c)}; };
  };

  if (parts.size() == 1) {
    if (key == "y0_t1") return one([](const CellTable& c) { return y0_type1(c); });
    if (key == "y0_t2") return one([](const CellTable& c) { return y0_type2(c, stratum_proportions(c)); });
    if (key == "support_lb") return one([](const CellTable& c) { return c.outcome_min(); });
    if (key == "support_ub") return one([](const CellTable& c) { return c.outcome_max(); });
    if (key.rfind("pi", 0) == 0) {
      auto t = parse_stratum(std::string_view(key).substr(2));
      if (!t) throw bad();
      return one([t = *t](const CellTable& c) { return stratum_proportions(c).share(t); });
    }
    throw bad();
  }
  if (parts.size() != 3) throw bad();
  if (key == "mean_selected") {
    const int d = parse_bit(parts[1], name), z = parse_bit(parts[2], name);
    return one([d, z](const CellTable& c) { return c.outcomes(d, z).mean(); });
  }
  if (key == "treated_lb" || key == "treated_ub") {
    const StratumId t = stratum_at(1);
    const int z = parse_bit(parts[2], name);
    const bool lower = key == "treated_lb";
    return one([t, z, lower](const CellTable& c) {
      const Interval iv = treated_bounds(make_inputs(c), t, z);
      return lower ? iv.lb : iv.ub;
    });
  }
  if (key == "ate_lb" || key == "ate_ub") {
    const StratumId t = stratum_at(1);
    auto r = parse_regime(parts[2]);
    if (!r) throw bad();
    const bool lower = key == "ate_lb";
    return one([t, r = *r, lower](const CellTable& c) {
      const TypeBounds b = type_bounds(make_inputs(c), t, r);
      return lower ? b.ate.lb : b.ate.ub;
    });
  }
  throw bad();
}

inline BootstrapSE bootstrap_se(const Dataset& ds, std::string_view statistic, std::size_t replicates,
                                std::uint64_t seed) {
  return bootstrap_se(ds, named_statistic(statistic), replicates, seed);
}

}  // namespace psbounds
