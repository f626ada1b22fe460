#pragma once

// Run configuration for the command-line tool: a JSON file, then flags on top.

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "psbounds/psbounds.hpp"

namespace psbounds::cli {

enum class CiChoice { None, Im, Clr, Both };

struct GroupSpec {
  bool enabled = false;
  int k = 5;
  std::optional<std::vector<std::string>> design;  // default: main effects of the schema covariates
  ProxyScope scope = ProxyScope::Joint;
};

struct OutputSpec {
  std::optional<std::string> dir;
  std::set<std::string> formats{"tsv"};
};

struct CoverageSpec {
  std::size_t reps = 500;
  std::size_t oracle_draws = kOracleDraws;
};

struct RunConfig {
  std::vector<std::string> inputs;
  Schema schema;
  /// Outcomes below this value are treated as missing (S set to 0).
  std::optional<double> drop_y_below;
  std::vector<StratumId> strata{kBoundedStrata.begin(), kBoundedStrata.end()};
  std::vector<Regime> regimes{Regime::Basic};
  CiChoice ci = CiChoice::Im;
  double level = 0.95;
  std::size_t sims = 10000;
  std::size_t bootstrap = 0;
  bool bootstrap_all = false;
  bool stratified_bootstrap = false;
  bool treated_untreated_covariance = false;
  std::optional<std::uint64_t> seed;
  GroupSpec groups;
  OutputSpec output;
  DgpConfig dgp;
  CoverageSpec coverage;

  AnalysisOptions analysis() const {
    AnalysisOptions o;
    o.strata = strata;
    o.regimes = regimes;
    o.im = ci == CiChoice::Im || ci == CiChoice::Both;
    o.clr = ci == CiChoice::Clr || ci == CiChoice::Both;
    o.level = level;
    o.sims = sims;
    o.bootstrap = bootstrap;
    o.bootstrap_all = bootstrap_all;
    o.stratified_bootstrap = stratified_bootstrap;
    o.analytic.treated_untreated_covariance = treated_untreated_covariance;
    o.seed = seed;
    return o;
  }

  DesignSpec design() const {
    if (groups.design) return DesignSpec{*groups.design};
    return DesignSpec::main_effects(schema.x);
  }
};

inline std::optional<CiChoice> parse_ci(const std::string& s) {
  if (s == "none") return CiChoice::None;
  if (s == "im") return CiChoice::Im;
  if (s == "clr") return CiChoice::Clr;
  if (s == "both") return CiChoice::Both;
  return std::nullopt;
}

inline std::string_view to_string(CiChoice c) {
  switch (c) {
    case CiChoice::None: return "none";
    case CiChoice::Im: return "im";
    case CiChoice::Clr: return "clr";
    case CiChoice::Both: return "both";
  }
  return "?";
}

inline StratumId stratum_arg(const std::string& s) {
  auto t = parse_stratum(s);
  if (!t) throw Error(Errc::InvalidConfig, "unknown stratum '" + s + "'");
  return *t;
}

inline Regime regime_arg(const std::string& s) {
  auto r = parse_regime(s);
  if (!r) throw Error(Errc::InvalidConfig, "unknown regime '" + s + "' (basic, md0, md1, md0md1)");
  return *r;
}

inline CiChoice ci_arg(const std::string& s) {
  auto c = parse_ci(s);
  if (!c) throw Error(Errc::InvalidConfig, "unknown CI method '" + s + "' (none, im, clr, both)");
  return *c;
}

inline void check_format(const std::string& f) {
  if (f != "tsv" && f != "json" && f != "plotcsv")
    throw Error(Errc::InvalidConfig, "unknown output format '" + f + "' (tsv, json, plotcsv)");
}

namespace config_detail {

using nlohmann::json;

/// Reads the listed keys of an object and rejects any other key, so a typo
/// in a config file is an error rather than a silent default.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail("must be an object");
  }

  template <class T>
  bool get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return false;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      fail(std::string("bad value for '") + key + "'");
    }
    return true;
  }

  const json* object(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void done() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) fail("unknown key '" + k + "'");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::InvalidConfig, where_ + ": " + msg);
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace config_detail

inline void apply_json(RunConfig& c, const nlohmann::json& j) {
  using config_detail::Reader;
  Reader top(j, "config");
  top.get("inputs", c.inputs);

  if (const auto* s = top.object("schema")) {
    Reader r(*s, "schema");
    r.get("y", c.schema.y);
    r.get("d", c.schema.d);
    r.get("z", c.schema.z);
    r.get("s", c.schema.s);
    r.get("x", c.schema.x);
    if (auto it = s->find("w"); it != s->end() && it->is_null()) {
      c.schema.w.reset();
      r.object("w");
    } else {
      std::string w;
      if (r.get("w", w)) c.schema.w = w;
    }
    r.done();
  }

  double cutoff;
  if (top.get("drop_y_below", cutoff)) c.drop_y_below = cutoff;

  std::vector<std::string> list;
  if (top.get("strata", list)) {
    c.strata.clear();
    for (const auto& s : list) c.strata.push_back(stratum_arg(s));
  }
  if (top.get("regimes", list)) {
    c.regimes.clear();
    for (const auto& s : list) c.regimes.push_back(regime_arg(s));
  }
  std::uint64_t seed;
  if (top.get("seed", seed)) c.seed = seed;

  if (const auto* ci = top.object("ci")) {
    Reader r(*ci, "ci");
    std::string method;
    if (r.get("method", method)) c.ci = ci_arg(method);
    r.get("level", c.level);
    r.get("sims", c.sims);
    r.get("bootstrap", c.bootstrap);
    r.get("bootstrap_all", c.bootstrap_all);
    r.get("stratified", c.stratified_bootstrap);
    r.get("treated_untreated_covariance", c.treated_untreated_covariance);
    r.done();
  }

  if (const auto* g = top.object("groups")) {
    Reader r(*g, "groups");
    r.get("enabled", c.groups.enabled);
    r.get("k", c.groups.k);
    std::vector<std::string> design;
    if (r.get("design", design)) c.groups.design = design;
    std::string scope;
    if (r.get("scope", scope)) {
      if (scope == "joint") c.groups.scope = ProxyScope::Joint;
      else if (scope == "by_treatment") c.groups.scope = ProxyScope::ByTreatment;
      else r.fail("scope must be 'joint' or 'by_treatment'");
    }
    r.done();
  }

  if (const auto* o = top.object("output")) {
    Reader r(*o, "output");
    std::string dir;
    if (r.get("dir", dir)) c.output.dir = dir;
    std::vector<std::string> formats;
    if (r.get("formats", formats)) {
      c.output.formats.clear();
      for (const auto& f : formats) {
        check_format(f);
        c.output.formats.insert(f);
      }
    }
    r.done();
  }

  if (const auto* d = top.object("dgp")) {
    Reader r(*d, "dgp");
    std::vector<double> h;
    if (r.get("h", h)) {
      if (h.size() != 4) r.fail("h needs four thresholds h00, h01, h10, h11");
      std::copy(h.begin(), h.end(), c.dgp.h.begin());
    }
    std::string preset;
    if (r.get("preset", preset)) {
      if (preset == "dominance_valid") c.dgp.rho = dominance_valid_preset().rho;
      else if (preset == "dominance_violated") c.dgp.rho = dominance_violated_preset().rho;
      else r.fail("preset must be 'dominance_valid' or 'dominance_violated'");
    }
    r.get("rho", c.dgp.rho);
    std::vector<double> ab;
    if (r.get("a", ab)) {
      if (ab.size() != 2) r.fail("a needs two values");
      c.dgp.outcome.a = {ab[0], ab[1]};
    }
    if (r.get("b", ab)) {
      if (ab.size() != 2) r.fail("b needs two values");
      c.dgp.outcome.b = {ab[0], ab[1]};
    }
    r.get("eps", c.dgp.outcome.eps);
    r.get("beta_x", c.dgp.outcome.beta_x);
    r.get("p_d", c.dgp.p_d);
    r.get("p_z", c.dgp.p_z);
    r.get("n", c.dgp.n);
    r.get("seed", c.dgp.seed);
    r.done();
  }

  if (const auto* cv = top.object("coverage")) {
    Reader r(*cv, "coverage");
    r.get("reps", c.coverage.reps);
    r.get("oracle_draws", c.coverage.oracle_draws);
    r.done();
  }
  top.done();
}

/// Rows whose outcome falls below the cutoff become unselected.
inline Dataset apply_filter(const Dataset& ds, std::optional<double> cutoff) {
  if (!cutoff) return ds;
  std::vector<Observation> rows(ds.begin(), ds.end());
  for (auto& o : rows)
    if (o.y && *o.y < *cutoff) {
      o.y.reset();
      o.s = 0;
    }
  return Dataset(std::move(rows), ds.covariate_names());
}

inline void load_config(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::InvalidConfig, "config '" + path + "' is not valid JSON: " + e.what());
  }
  const auto before = c.inputs;
  apply_json(c, j);
  // Input paths in a config file are relative to the file.
  if (c.inputs != before) {
    const auto base = std::filesystem::path(path).parent_path();
    for (auto& in : c.inputs)
      if (std::filesystem::path(in).is_relative()) in = (base / in).lexically_normal().string();
  }
}

}  // namespace psbounds::cli
