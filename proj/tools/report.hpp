#pragma once

// Results of one `bounds` run and their tables. Numbers are printed in the
// shortest form that reads back to the same double, so identical runs give
// identical bytes.

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "psbounds/psbounds.hpp"
#include "run_config.hpp"

namespace psbounds::cli {

/// One analyzed unit: a whole file, or one covariate group of it.
struct Unit {
  std::string group = "all";
  std::size_t n = 0;
  double mass = 1.0;
  std::optional<AnalysisReport> report;
  std::optional<ErrorInfo> error;
};

struct AggregateRow {
  StratumId stratum;
  Regime regime;
  std::optional<AggregateBounds> value;
  std::optional<ErrorInfo> error;
};

struct FileResult {
  std::string year;  // file stem
  std::string path;
  std::vector<Unit> units;
  std::optional<ProxyModel> proxy;
  std::vector<double> cuts;
  std::vector<AggregateRow> aggregates;
  std::optional<ErrorInfo> error;  // the file could not be analyzed at all

  bool has_errors() const {
    if (error) return true;
    for (const auto& u : units) {
      if (u.error || (u.report && u.report->has_errors())) return true;
    }
    for (const auto& a : aggregates)
      if (a.error) return true;
    return false;
  }
};

inline std::string num(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

inline std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

// ---------------------------------------------------------------------------
// TSV

inline void write_bounds_tsv(std::ostream& out, const std::vector<FileResult>& files) {
  out << "year\tgroup\tstratum\tregime\tn\tpi\tlb\tub\tcrossed\tse_lb\tse_ub\tclr_lb\tclr_ub\tim_lo\tim_hi\t"
         "clr_ci_lo\tclr_ci_hi\tstatus\n";
  for (const auto& f : files)
    for (const auto& u : f.units) {
      if (!u.report) continue;
      const auto& rep = *u.report;
      for (const auto& rec : rep.records) {
        const auto iv = rec.interval();
        std::string status = "ok";
        if (rec.error) status = std::string(to_string(rec.error->code));
        else if (rec.inference_error) status = "no_ci:" + std::string(to_string(rec.inference_error->code));
        const bool has_se = rec.lower.available && rec.upper.available;
        out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", f.year, u.group,
                           to_string(rec.stratum), to_string(rec.regime), rep.n, num(rep.props.share(rec.stratum)),
                           iv ? num(iv->lb) : "NA", iv ? num(iv->ub) : "NA", rec.crossed() ? 1 : 0,
                           has_se ? num(rec.se_lb()) : "NA", has_se ? num(rec.se_ub()) : "NA",
                           rec.clr ? num(rec.clr->bounds.lb) : "NA", rec.clr ? num(rec.clr->bounds.ub) : "NA",
                           rec.im ? num(rec.im->lo) : "NA", rec.im ? num(rec.im->hi) : "NA",
                           rec.clr ? num(rec.clr->ci.lo) : "NA", rec.clr ? num(rec.clr->ci.hi) : "NA", status);
      }
    }
}

inline void write_bounds_z_tsv(std::ostream& out, const std::vector<FileResult>& files) {
  out << "year\tgroup\tstratum\tregime\tz\tshare\ty1_lb\ty1_ub\ty0_lb\ty0_ub\n";
  for (const auto& f : files)
    for (const auto& u : f.units) {
      if (!u.report) continue;
      for (const auto& rec : u.report->records) {
        if (!rec.bounds) continue;
        const auto& b = *rec.bounds;
        for (int z = 0; z < 2; ++z) {
          if (!b.per_z[z]) continue;
          out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", f.year, u.group, to_string(rec.stratum),
                             to_string(rec.regime), z, num(b.share[z]), num(b.per_z[z]->lb), num(b.per_z[z]->ub),
                             num(b.y0.lb), num(b.y0.ub));
        }
      }
    }
}

inline void write_proportions_tsv(std::ostream& out, const std::vector<FileResult>& files) {
  out << "year\tgroup\tn\tmass\tpi1\tpi2\tpi4\tpi12\tpi16\tmonotonicity\tmin_margin\tstatus\n";
  for (const auto& f : files)
    for (const auto& u : f.units) {
      if (!u.report) {
        out << fmt::format("{}\t{}\t{}\t{}\tNA\tNA\tNA\tNA\tNA\tNA\tNA\t{}\n", f.year, u.group, u.n, num(u.mass),
                           u.error ? to_string(u.error->code) : "error");
        continue;
      }
      const auto& r = *u.report;
      const auto& m = r.monotonicity;
      const double margin = std::min({m.margin_d_z0, m.margin_d_z1, m.margin_z_d0, m.margin_z_d1});
      out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\tok\n", f.year, u.group, r.n, num(u.mass),
                         num(r.props.pi1), num(r.props.pi2), num(r.props.pi4), num(r.props.pi12), num(r.props.pi16),
                         m.pass ? "pass" : "fail", num(margin));
    }
}

inline void write_aggregate_tsv(std::ostream& out, const std::vector<FileResult>& files) {
  out << "year\tstratum\tregime\tlb\tub\tgroups_used\tgroups_excluded\tstatus\n";
  for (const auto& f : files)
    for (const auto& a : f.aggregates) {
      if (a.value)
        out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\tok\n", f.year, to_string(a.stratum), to_string(a.regime),
                           num(a.value->bounds.lb), num(a.value->bounds.ub), a.value->used, a.value->excluded);
      else
        out << fmt::format("{}\t{}\t{}\tNA\tNA\t0\tNA\t{}\n", f.year, to_string(a.stratum), to_string(a.regime),
                           a.error ? to_string(a.error->code) : "error");
    }
}

/// Long format for plotting bound trajectories across years. The band is the
/// IM interval when present, otherwise the CLR interval.
inline void write_plot_csv(std::ostream& out, const std::vector<FileResult>& files) {
  out << "year,group,stratum,regime,lb,ub,ci_lo,ci_hi,ci_method\n";
  for (const auto& f : files)
    for (const auto& u : f.units) {
      if (!u.report) continue;
      for (const auto& rec : u.report->records) {
        const auto iv = rec.interval();
        if (!iv) continue;
        std::optional<CIBand> band = rec.im;
        if (!band && rec.clr) band = rec.clr->ci;
        out << fmt::format("{},{},{},{},{},{},{},{},{}\n", f.year, u.group, to_string(rec.stratum),
                           to_string(rec.regime), num(iv->lb), num(iv->ub), band ? num(band->lo) : "NA",
                           band ? num(band->hi) : "NA",
                           band ? (band->method == CiMethod::CLR ? "clr" : "im") : "NA");
      }
    }
}

// ---------------------------------------------------------------------------
// JSON

using ojson = nlohmann::ordered_json;

/// Non-finite numbers become null.
inline ojson jnum(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline ojson jinterval(const Interval& iv) { return {{"lb", jnum(iv.lb)}, {"ub", jnum(iv.ub)}}; }

inline ojson jerror(const ErrorInfo& e) { return {{"code", to_string(e.code)}, {"message", e.message}}; }

inline ojson jerror(const Error& e) {
  ojson j{{"code", to_string(e.code())}, {"message", e.what()}};
  if (e.row() >= 0) j["row"] = e.row();
  if (!e.column().empty()) j["column"] = e.column();
  return j;
}

inline ojson jband(const CIBand& b) {
  return {{"lo", jnum(b.lo)}, {"hi", jnum(b.hi)}, {"level", b.level}, {"collapsed", b.collapsed}};
}

inline ojson jterm(const BoundTerm& t) { return {{"term", describe(t)}, {"value", jnum(t.value())}}; }

inline ojson jrecord(const BoundRecord& rec) {
  ojson j{{"stratum", to_string(rec.stratum)}, {"pattern", pattern_label(rec.stratum)},
          {"regime", to_string(rec.regime)}};
  if (rec.error) j["error"] = jerror(*rec.error);
  if (rec.constant) j["support_constant"] = jinterval(*rec.constant);
  if (rec.bounds) {
    const auto& b = *rec.bounds;
    j["bounds"] = jinterval(b.ate);
    j["crossed"] = b.crossed();
    ojson per_z = ojson::array();
    for (int z = 0; z < 2; ++z) {
      if (!b.per_z[z]) continue;
      per_z.push_back({{"z", z}, {"share", jnum(b.share[z].value_or(NAN))}, {"y1", jinterval(*b.per_z[z])}});
    }
    j["per_z"] = per_z;
    j["y0"] = jinterval(b.y0);
    j["y0_point_identified"] = b.y0_point;
    ojson lo = ojson::array(), hi = ojson::array();
    for (const auto& t : b.lower_terms) lo.push_back(jterm(t));
    for (const auto& t : b.upper_terms) hi.push_back(jterm(t));
    j["lower_terms"] = lo;
    j["upper_terms"] = hi;
    auto side = [](const SideInference& s) {
      ojson o{{"available", s.available}, {"analytic", s.analytic}, {"binding", s.binding}};
      if (s.available) o["se"] = jnum(s.se_binding());
      if (!s.analytic && s.available) o["replicates_used"] = s.replicates_used;
      return o;
    };
    j["lower_inference"] = side(rec.lower);
    j["upper_inference"] = side(rec.upper);
  }
  if (rec.im) j["im_ci"] = jband(*rec.im);
  if (rec.clr) {
    j["clr_bounds"] = jinterval(rec.clr->bounds);
    j["clr_ci"] = jband(rec.clr->ci);
    j["clr_kappa"] = {{"lower_half", rec.clr->lower.kappa_half}, {"upper_half", rec.clr->upper.kappa_half},
                      {"lower_level", rec.clr->lower.kappa_level}, {"upper_level", rec.clr->upper.kappa_level}};
  }
  if (rec.inference_error) j["inference_error"] = jerror(*rec.inference_error);
  return j;
}

inline ojson jreport(const AnalysisReport& r) {
  ojson j;
  j["n"] = r.n;
  j["total_weight"] = jnum(r.total_weight);
  j["proportions"] = {{"pi1", jnum(r.props.pi1)},
                      {"pi2", jnum(r.props.pi2)},
                      {"pi4", jnum(r.props.pi4)},
                      {"pi12", jnum(r.props.pi12)},
                      {"pi16", jnum(r.props.pi16)}};
  const auto& m = r.monotonicity;
  j["monotonicity"] = {{"pass", m.pass},
                       {"margin_d_z0", jnum(m.margin_d_z0)},
                       {"margin_d_z1", jnum(m.margin_d_z1)},
                       {"margin_z_d0", jnum(m.margin_z_d0)},
                       {"margin_z_d1", jnum(m.margin_z_d1)}};
  j["support"] = {{"y_lb", jnum(r.support.y_lb)}, {"y_ub", jnum(r.support.y_ub)}};
  j["variance"] = {{"v_y0_t1", jnum(r.variance.v_y0_t1)},
                   {"v_y0_t2", jnum(r.variance.v_y0_t2)},
                   {"cov_y0_printed", jnum(r.variance.cov_y0_printed)},
                   {"cov_y0", jnum(r.variance.cov_y0)}};
  if (r.dominance) {
    const auto& d = *r.dominance;
    j["dominance_check"] = {{"y0_t1", jnum(d.y0_t1)},           {"y0_t2", jnum(d.y0_t2)},
                            {"se_t1", jnum(d.se_t1)},           {"se_t2", jnum(d.se_t2)},
                            {"difference", jnum(d.difference)}, {"se_difference", jnum(d.se_difference)},
                            {"t1_larger", d.t1_larger}};
  }
  if (r.bootstrap_replicates > 0) j["bootstrap_replicates"] = r.bootstrap_replicates;
  ojson recs = ojson::array();
  for (const auto& rec : r.records) recs.push_back(jrecord(rec));
  j["records"] = recs;
  return j;
}

inline ojson jfiles(const std::vector<FileResult>& files) {
  ojson out = ojson::array();
  for (const auto& f : files) {
    ojson j{{"year", f.year}, {"path", f.path}};
    if (f.error) j["error"] = jerror(*f.error);
    if (f.proxy) {
      ojson coef = ojson::object();
      coef["(intercept)"] = f.proxy->intercept;
      for (std::size_t i = 0; i < f.proxy->design.size(); ++i)
        coef[f.proxy->design[i].label] = f.proxy->coefficients[i];
      j["proxy"] = {{"coefficients", coef}, {"r_squared", jnum(f.proxy->r_squared)}, {"n_fit", f.proxy->n_fit}};
      ojson cuts = ojson::array();
      for (double c : f.cuts) cuts.push_back(c);
      j["cuts"] = cuts;
    }
    ojson units = ojson::array();
    for (const auto& u : f.units) {
      ojson ju{{"group", u.group}, {"n", u.n}, {"mass", jnum(u.mass)}};
      if (u.error) ju["error"] = jerror(*u.error);
      if (u.report) ju["analysis"] = jreport(*u.report);
      units.push_back(ju);
    }
    j["units"] = units;
    if (!f.aggregates.empty()) {
      ojson agg = ojson::array();
      for (const auto& a : f.aggregates) {
        ojson ja{{"stratum", to_string(a.stratum)}, {"regime", to_string(a.regime)}};
        if (a.value) {
          ja["bounds"] = jinterval(a.value->bounds);
          ja["groups_used"] = a.value->used;
          ja["groups_excluded"] = a.value->excluded;
        }
        if (a.error) ja["error"] = jerror(*a.error);
        agg.push_back(ja);
      }
      j["aggregate"] = agg;
    }
    out.push_back(j);
  }
  return out;
}

inline ojson jconfig(const RunConfig& c) {
  ojson strata = ojson::array(), regimes = ojson::array();
  for (auto t : c.strata) strata.push_back(to_string(t));
  for (auto r : c.regimes) regimes.push_back(to_string(r));
  ojson j{{"strata", strata},
          {"regimes", regimes},
          {"ci", {{"method", to_string(c.ci)},
                  {"level", c.level},
                  {"sims", c.sims},
                  {"bootstrap", c.bootstrap},
                  {"bootstrap_all", c.bootstrap_all},
                  {"stratified", c.stratified_bootstrap},
                  {"treated_untreated_covariance", c.treated_untreated_covariance}}}};
  j["seed"] = c.seed ? ojson(*c.seed) : ojson(nullptr);
  if (c.groups.enabled) {
    ojson design = ojson::array();
    for (const auto& t : c.design().terms) design.push_back(t);
    j["groups"] = {{"k", c.groups.k},
                   {"design", design},
                   {"scope", c.groups.scope == ProxyScope::Joint ? "joint" : "by_treatment"}};
  }
  return j;
}

}  // namespace psbounds::cli
