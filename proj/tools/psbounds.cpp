// psbounds: batch estimation of principal-stratum ATE bounds from CSV files.
//
//   psbounds validate    data.csv ...
//   psbounds proportions data.csv ... [--by-groups]
//   psbounds bounds      1976.csv 1977.csv ... [--regime md0md1] [--ci both --seed 7]
//   psbounds simulate    --config sim.json --out sample.csv
//   psbounds coverage    --config sim.json --seed 3
//
// Exit status: 0 ok, 1 some estimate failed (the rest is written), 2 bad
// input or configuration (nothing is written; a JSON report goes to stderr).

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "report.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace psbounds;
using namespace psbounds::cli;

namespace {

bool is_input_error(Errc c) {
  switch (c) {
    case Errc::MissingColumn:
    case Errc::BadValue:
    case Errc::OutcomePresentWhenUnselected:
    case Errc::NonpositiveWeight:
    case Errc::InvalidObservation:
    case Errc::EmptyDataset:
    case Errc::InvalidThresholds:
    case Errc::InvalidConfig:
    case Errc::IoError:
      return true;
    default:
      return false;
  }
}

struct InputFailure {
  Error error;
  std::string file;
};

int report_input_error(const Error& e, const std::string& file = {}) {
  ojson j = jerror(e);
  if (!file.empty()) j["file"] = file;
  std::cerr << ojson{{"error", j}}.dump(2) << '\n';
  return 2;
}

// ---------------------------------------------------------------------------
// Flags. Only flags given on the command line override the config file.

struct Flags {
  std::string config;
  std::vector<std::string> inputs;
  std::string y, d, z, s, w, x;
  bool no_weights = false;
  std::optional<double> drop_y_below;
  std::vector<std::string> strata, regimes, formats, design;
  std::string ci, scope;
  double level = 0.95;
  std::size_t sims = 0, bootstrap = 0;
  bool bootstrap_all = false, stratified = false, tu_cov = false;
  std::uint64_t seed = 0;
  bool by_groups = false;
  int k = 5;
  std::string out_dir;

  // simulate / coverage
  std::string out, latent, draws, preset;
  std::size_t n = 0, reps = 0, oracle_draws = 0;
  double rho = 0.0;
  std::vector<double> h;
  std::uint64_t dgp_seed = 0;

  // The same flag is registered on several subcommands.
  std::multimap<std::string, CLI::Option*> opt;
  void add(const std::string& name, CLI::Option* o) { opt.emplace(name, o); }
  bool given(const std::string& name) const {
    auto [lo, hi] = opt.equal_range(name);
    for (auto it = lo; it != hi; ++it)
      if (it->second->count() > 0) return true;
    return false;
  }
};

void add_schema_flags(CLI::App* sub, Flags& f) {
  f.add("y", sub->add_option("--y", f.y, "Outcome column"));
  f.add("d", sub->add_option("--d", f.d, "Treatment column"));
  f.add("z", sub->add_option("--z", f.z, "Instrument column"));
  f.add("s", sub->add_option("--s", f.s, "Selection column"));
  f.add("w", sub->add_option("--w", f.w, "Weight column"));
  f.add("no-weights", sub->add_flag("--no-weights", f.no_weights, "Give every row weight 1"));
  f.add("x", sub->add_option("--x", f.x, "Covariate columns, comma separated"));
  f.add("drop-y-below", sub->add_option("--drop-y-below", f.drop_y_below, "Treat outcomes below this value as missing"));
}

void add_analysis_flags(CLI::App* sub, Flags& f) {
  f.add("strata", sub->add_option("--strata", f.strata, "Strata (T1 T2 T4 T12 T16 or patterns)")->delimiter(','));
  f.add("regime", sub->add_option("--regime", f.regimes, "basic, md0, md1, md0md1")->delimiter(','));
  f.add("ci", sub->add_option("--ci", f.ci, "none, im, clr or both"));
  f.add("level", sub->add_option("--level", f.level, "Confidence level"));
  f.add("sims", sub->add_option("--sims", f.sims, "CLR simulation draws"));
  f.add("bootstrap", sub->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates"));
  f.add("bootstrap-all", sub->add_flag("--bootstrap-all", f.bootstrap_all, "Bootstrap every bound term"));
  f.add("stratified", sub->add_flag("--stratified", f.stratified, "Resample within (D, Z) cells"));
  f.add("treated-untreated-cov", sub->add_flag("--treated-untreated-cov", f.tu_cov,
                                                 "Include the treated/untreated covariance in analytic SEs"));
  f.add("seed", sub->add_option("--seed", f.seed, "Seed for the bootstrap and CLR draws"));
}

void add_group_flags(CLI::App* sub, Flags& f) {
  f.add("by-groups", sub->add_flag("--by-groups", f.by_groups, "Split each file into proxy-quantile groups"));
  f.add("groups", sub->add_option("--groups", f.k, "Number of groups"));
  f.add("design", sub->add_option("--design", f.design, "Proxy regression terms, e.g. x1,x2,x1*x2")->delimiter(','));
  f.add("scope", sub->add_option("--scope", f.scope, "joint or by_treatment"));
}

void add_output_flags(CLI::App* sub, Flags& f) {
  f.add("out-dir", sub->add_option("--out-dir", f.out_dir, "Write output files here instead of stdout"));
  f.add("format", sub->add_option("--format", f.formats, "tsv, json, plotcsv")->delimiter(','));
}

void add_dgp_flags(CLI::App* sub, Flags& f) {
  f.add("n", sub->add_option("--n", f.n, "Sample size"));
  f.add("rho", sub->add_option("--rho", f.rho, "Rank correlation of U and V"));
  f.add("preset", sub->add_option("--preset", f.preset, "dominance_valid or dominance_violated"));
  f.add("h", sub->add_option("--thresholds", f.h, "Thresholds h00,h01,h10,h11")->delimiter(',')->expected(4));
  f.add("dgp-seed", sub->add_option("--dgp-seed", f.dgp_seed, "Seed of the data draw"));
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

RunConfig build_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) load_config(c, f.config);
  if (!f.inputs.empty()) c.inputs = f.inputs;
  if (f.given("y")) c.schema.y = f.y;
  if (f.given("d")) c.schema.d = f.d;
  if (f.given("z")) c.schema.z = f.z;
  if (f.given("s")) c.schema.s = f.s;
  if (f.given("w")) c.schema.w = f.w;
  if (f.no_weights) c.schema.w.reset();
  if (f.given("x")) c.schema.x = split(f.x);
  if (f.given("drop-y-below")) c.drop_y_below = f.drop_y_below;
  if (f.given("strata")) {
    c.strata.clear();
    for (const auto& s : f.strata) c.strata.push_back(stratum_arg(s));
  }
  if (f.given("regime")) {
    c.regimes.clear();
    for (const auto& s : f.regimes) c.regimes.push_back(regime_arg(s));
  }
  if (f.given("ci")) c.ci = ci_arg(f.ci);
  if (f.given("level")) c.level = f.level;
  if (f.given("sims")) c.sims = f.sims;
  if (f.given("bootstrap")) c.bootstrap = f.bootstrap;
  if (f.given("bootstrap-all")) c.bootstrap_all = f.bootstrap_all;
  if (f.given("stratified")) c.stratified_bootstrap = f.stratified;
  if (f.given("treated-untreated-cov")) c.treated_untreated_covariance = f.tu_cov;
  if (f.given("seed")) c.seed = f.seed;
  if (f.given("by-groups")) c.groups.enabled = f.by_groups;
  if (f.given("groups")) {
    c.groups.k = f.k;
    c.groups.enabled = true;
  }
  if (f.given("design")) c.groups.design = f.design;
  if (f.given("scope")) {
    if (f.scope == "joint") c.groups.scope = ProxyScope::Joint;
    else if (f.scope == "by_treatment") c.groups.scope = ProxyScope::ByTreatment;
    else throw Error(Errc::InvalidConfig, "--scope must be 'joint' or 'by_treatment'");
  }
  if (f.given("out-dir")) c.output.dir = f.out_dir;
  if (f.given("format")) {
    c.output.formats.clear();
    for (const auto& s : f.formats) {
      check_format(s);
      c.output.formats.insert(s);
    }
  }
  if (f.given("preset")) {
    if (f.preset == "dominance_valid") c.dgp.rho = dominance_valid_preset().rho;
    else if (f.preset == "dominance_violated") c.dgp.rho = dominance_violated_preset().rho;
    else throw Error(Errc::InvalidConfig, "--preset must be 'dominance_valid' or 'dominance_violated'");
  }
  if (f.given("rho")) c.dgp.rho = f.rho;
  if (f.given("h")) std::copy(f.h.begin(), f.h.end(), c.dgp.h.begin());
  if (f.given("n")) c.dgp.n = f.n;
  if (f.given("dgp-seed")) c.dgp.seed = f.dgp_seed;
  if (f.given("reps")) c.coverage.reps = f.reps;
  if (f.given("oracle-draws")) c.coverage.oracle_draws = f.oracle_draws;

  if (c.groups.enabled && c.groups.k < 2) throw Error(Errc::InvalidConfig, "--groups needs at least 2");
  c.analysis().check();
  return c;
}

// ---------------------------------------------------------------------------
// Estimation

Dataset load_input(const std::string& path, const RunConfig& c) {
  return apply_filter(load_csv(path, c.schema), c.drop_y_below);
}

std::string year_of(const std::string& path) { return fs::path(path).stem().string(); }

FileResult run_file(const std::string& path, const RunConfig& c, AnalysisOptions o) {
  FileResult fr;
  fr.path = path;
  fr.year = year_of(path);
  const Dataset ds = load_input(path, c);  // input errors propagate

  if (!c.groups.enabled) {
    Unit u;
    u.n = ds.size();
    try {
      u.report = analyze(ds, o);
    } catch (const Error& e) {
      if (is_input_error(e.code())) throw;
      u.error = ErrorInfo::from(e);
    }
    fr.units.push_back(std::move(u));
    return fr;
  }

  const DesignSpec spec = c.design();
  GroupAssignment ga;
  try {
    std::vector<double> preds;
    if (c.groups.scope == ProxyScope::Joint) {
      fr.proxy = fit_proxy(ds, spec);
      preds = fr.proxy->predict(ds);
    } else {
      preds = proxy_predictions(ds, spec, ProxyScope::ByTreatment);
    }
    std::vector<double> w;
    for (const auto& obs : ds) w.push_back(obs.w);
    ga = assign_groups(preds, w, c.groups.k);
    fr.cuts = ga.cuts;
  } catch (const Error& e) {
    if (is_input_error(e.code())) throw;
    fr.error = ErrorInfo::from(e);
    return fr;
  }

  const auto groups = grouped_bounds(ds, ga, o);
  for (const auto& g : groups) {
    Unit u;
    u.group = std::to_string(g.group);
    u.n = g.n;
    u.mass = g.mass;
    u.report = g.report;
    u.error = g.error;
    fr.units.push_back(std::move(u));
  }
  for (auto t : o.strata)
    for (auto r : o.regimes) {
      AggregateRow a{t, r, std::nullopt, std::nullopt};
      try {
        a.value = aggregate_groups(groups, t, r);
      } catch (const Error& e) {
        a.error = ErrorInfo::from(e);
      }
      fr.aggregates.push_back(a);
    }
  return fr;
}

/// Files fan out over the workers; results keep the input order.
std::vector<FileResult> run_files(const RunConfig& c, AnalysisOptions o) {
  if (c.inputs.empty()) throw Error(Errc::InvalidConfig, "no input files");
  const unsigned workers = worker_count();
  if (c.inputs.size() > 1) o.workers = 1;
  std::vector<FileResult> out(c.inputs.size());
  std::vector<std::optional<InputFailure>> failures(c.inputs.size());
  parallel_for(
      c.inputs.size(),
      [&](std::size_t i) {
        try {
          out[i] = run_file(c.inputs[i], c, o);
        } catch (const Error& e) {
          failures[i] = InputFailure{e, c.inputs[i]};
        }
      },
      workers);
  for (const auto& f : failures)
    if (f) throw *f;
  return out;
}

// ---------------------------------------------------------------------------
// Output

/// Either a file in the output directory or stdout.
class Sink {
 public:
  explicit Sink(const RunConfig& c) : dir_(c.output.dir) {
    if (dir_) {
      std::error_code ec;
      fs::create_directories(*dir_, ec);
      if (ec) throw Error(Errc::IoError, "cannot create output directory '" + *dir_ + "'");
    }
  }
  bool to_files() const { return dir_.has_value(); }

  template <class Fn>
  void write(const std::string& name, Fn&& fn) {
    if (!dir_) {
      fn(std::cout);
      return;
    }
    const auto path = fs::path(*dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
    fn(out);
  }

 private:
  std::optional<std::string> dir_;
};

int cmd_validate(const RunConfig& c) {
  if (c.inputs.empty()) throw Error(Errc::InvalidConfig, "no input files");
  std::vector<std::string> lines(c.inputs.size());
  std::vector<std::optional<InputFailure>> failures(c.inputs.size());
  parallel_for(c.inputs.size(), [&](std::size_t i) {
    try {
      const Dataset ds = load_input(c.inputs[i], c);
      std::array<std::size_t, 4> n{}, sel{};
      for (const auto& o : ds) {
        ++n[2 * o.d + o.z];
        sel[2 * o.d + o.z] += o.s;
      }
      lines[i] = fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\tok\n", year_of(c.inputs[i]), ds.size(), n[0],
                             sel[0], n[1], sel[1], n[2], sel[2], n[3], sel[3]);
    } catch (const Error& e) {
      failures[i] = InputFailure{e, c.inputs[i]};
    }
  });
  for (const auto& f : failures)
    if (f) return report_input_error(f->error, f->file);
  std::cout << "year\tn\tn_d0z0\tsel_d0z0\tn_d0z1\tsel_d0z1\tn_d1z0\tsel_d1z0\tn_d1z1\tsel_d1z1\tstatus\n";
  for (const auto& l : lines) std::cout << l;
  return 0;
}

int cmd_proportions(const RunConfig& c) {
  AnalysisOptions o = c.analysis();
  o.strata.clear();
  o.im = o.clr = false;
  o.bootstrap = 0;
  o.bootstrap_all = false;
  const auto files = run_files(c, o);
  Sink sink(c);
  if (!sink.to_files() || c.output.formats.count("tsv"))
    sink.write("proportions.tsv", [&](std::ostream& out) { write_proportions_tsv(out, files); });
  if (sink.to_files() && c.output.formats.count("json"))
    sink.write("report.json", [&](std::ostream& out) {
      out << ojson{{"config", jconfig(c)}, {"files", jfiles(files)}}.dump(2) << '\n';
    });
  for (const auto& f : files)
    if (f.error || std::any_of(f.units.begin(), f.units.end(), [](const Unit& u) { return u.error.has_value(); }))
      return 1;
  return 0;
}

int cmd_bounds(const RunConfig& c) {
  const auto files = run_files(c, c.analysis());
  Sink sink(c);
  const auto& fmts = c.output.formats;
  if (!sink.to_files()) {
    // stdout carries one table; JSON wins when it is the only format asked for.
    if (fmts.count("tsv") || fmts.empty()) write_bounds_tsv(std::cout, files);
    else if (fmts.count("json")) std::cout << ojson{{"config", jconfig(c)}, {"files", jfiles(files)}}.dump(2) << '\n';
    else write_plot_csv(std::cout, files);
  } else {
    if (fmts.count("tsv")) {
      sink.write("bounds.tsv", [&](std::ostream& out) { write_bounds_tsv(out, files); });
      sink.write("bounds_z.tsv", [&](std::ostream& out) { write_bounds_z_tsv(out, files); });
      sink.write("proportions.tsv", [&](std::ostream& out) { write_proportions_tsv(out, files); });
      if (c.groups.enabled)
        sink.write("aggregate.tsv", [&](std::ostream& out) { write_aggregate_tsv(out, files); });
    }
    if (fmts.count("plotcsv")) sink.write("plot.csv", [&](std::ostream& out) { write_plot_csv(out, files); });
    if (fmts.count("json"))
      sink.write("report.json", [&](std::ostream& out) {
        out << ojson{{"config", jconfig(c)}, {"files", jfiles(files)}}.dump(2) << '\n';
      });
  }
  for (const auto& f : files)
    if (f.has_errors()) return 1;
  return 0;
}

int cmd_simulate(const RunConfig& c, const Flags& f) {
  const auto sample = generate(c.dgp);
  auto write_sample = [&](std::ostream& out) { write_csv(out, sample.data); };
  if (f.out.empty()) {
    write_sample(std::cout);
  } else {
    std::ofstream out(f.out, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write '" + f.out + "'");
    write_sample(out);
  }
  if (!f.latent.empty()) {
    std::ofstream out(f.latent, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write '" + f.latent + "'");
    out << "u\tv\td\tz\ts00\ts01\ts10\ts11\ty1\ty0\tstratum\n";
    for (const auto& r : sample.rows)
      out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.u, r.v, r.d, r.z, r.s[0], r.s[1], r.s[2],
                         r.s[3], r.y1, r.y0, to_string(r.stratum));
  }
  return 0;
}

void write_coverage_tsv(std::ostream& out, const CoverageReport& rep) {
  out << "stratum\tregime\ttrue_lb\ttrue_ub\ttrue_ate\tused\tfailed\tmean_lb\tmean_ub\tbias_lb\tbias_ub\tsd_lb\tsd_ub\t"
         "mean_se_lb\tmean_se_ub\tim_n\tim_set_coverage\tim_param_coverage\tclr_n\tclr_ub_above\tclr_lb_below\t"
         "clr_narrower\n";
  for (const auto& s : rep.summaries)
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                       to_string(s.stratum), to_string(s.regime), num(s.truth.lb), num(s.truth.ub), num(s.true_ate),
                       s.used, s.failed, num(s.mean_lb), num(s.mean_ub), num(s.bias_lb), num(s.bias_ub), num(s.sd_lb),
                       num(s.sd_ub), num(s.mean_se_lb), num(s.mean_se_ub), s.im_n, num(s.im_set_coverage),
                       num(s.im_param_coverage), s.clr_n, num(s.clr_ub_above), num(s.clr_lb_below), s.clr_narrower);
}

ojson coverage_json(const RunConfig& c, const CoverageReport& rep) {
  const auto& d = c.dgp;
  ojson dgp{{"h", d.h},     {"rho", d.rho},         {"a", d.outcome.a},  {"b", d.outcome.b},
            {"eps", d.outcome.eps}, {"p_d", d.p_d}, {"p_z", d.p_z}, {"n", d.n}, {"seed", d.seed}};
  ojson sums = ojson::array();
  for (const auto& s : rep.summaries)
    sums.push_back({{"stratum", to_string(s.stratum)},
                    {"regime", to_string(s.regime)},
                    {"truth", jinterval(s.truth)},
                    {"true_ate", jnum(s.true_ate)},
                    {"used", s.used},
                    {"failed", s.failed},
                    {"bias", {{"lb", jnum(s.bias_lb)}, {"ub", jnum(s.bias_ub)}}},
                    {"sd", {{"lb", jnum(s.sd_lb)}, {"ub", jnum(s.sd_ub)}}},
                    {"mean_se", {{"lb", jnum(s.mean_se_lb)}, {"ub", jnum(s.mean_se_ub)}}},
                    {"im", {{"n", s.im_n}, {"set_coverage", jnum(s.im_set_coverage)},
                            {"parameter_coverage", jnum(s.im_param_coverage)}}},
                    {"clr", {{"n", s.clr_n}, {"ub_above_truth", jnum(s.clr_ub_above)},
                             {"lb_below_truth", jnum(s.clr_lb_below)}, {"narrower", s.clr_narrower}}}});
  return {{"reps", rep.reps}, {"n", rep.n}, {"dgp", dgp}, {"config", jconfig(c)}, {"summaries", sums}};
}

int cmd_coverage(const RunConfig& c, const Flags& f) {
  const auto pop = population(c.dgp, c.coverage.oracle_draws);
  const auto rep = coverage_study(c.dgp, c.coverage.reps, c.analysis(), pop);
  Sink sink(c);
  if (!sink.to_files() || c.output.formats.count("tsv"))
    sink.write("coverage.tsv", [&](std::ostream& out) { write_coverage_tsv(out, rep); });
  if (sink.to_files() && c.output.formats.count("json"))
    sink.write("coverage.json", [&](std::ostream& out) { out << coverage_json(c, rep).dump(2) << '\n'; });
  if (!f.draws.empty()) {
    std::ofstream out(f.draws, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write '" + f.draws + "'");
    out << "rep\tstratum\tregime\tlb\tub\tse_lb\tse_ub\tim_lo\tim_hi\tclr_lb\tclr_ub\tclr_ci_lo\tclr_ci_hi\n";
    for (const auto& d : rep.draws)
      out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", d.rep, to_string(d.stratum),
                         to_string(d.regime), num(d.estimate.lb), num(d.estimate.ub), num(d.se_lb), num(d.se_ub),
                         d.im ? num(d.im->lo) : "NA", d.im ? num(d.im->hi) : "NA", d.clr ? num(d.clr->lb) : "NA",
                         d.clr ? num(d.clr->ub) : "NA", d.clr_ci ? num(d.clr_ci->lo) : "NA",
                         d.clr_ci ? num(d.clr_ci->hi) : "NA");
  }
  for (const auto& s : rep.summaries)
    if (s.used == 0) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Principal-stratum ATE bounds under sample selection"};
  app.require_subcommand(1);
  Flags f;
  auto* validate = app.add_subcommand("validate", "Check input files against the schema");
  auto* proportions = app.add_subcommand("proportions", "Stratum shares and monotonicity diagnostics");
  auto* bounds = app.add_subcommand("bounds", "Per-stratum ATE bounds with inference");
  auto* simulate = app.add_subcommand("simulate", "Draw a synthetic dataset");
  auto* coverage = app.add_subcommand("coverage", "Monte Carlo study against the population oracle");

  for (auto* sub : {validate, proportions, bounds, simulate, coverage})
    sub->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
  for (auto* sub : {validate, proportions, bounds}) {
    sub->add_option("inputs", f.inputs, "CSV files, one per year");
    add_schema_flags(sub, f);
  }
  for (auto* sub : {proportions, bounds}) {
    add_group_flags(sub, f);
    add_output_flags(sub, f);
  }
  add_analysis_flags(bounds, f);
  add_analysis_flags(coverage, f);
  add_output_flags(coverage, f);
  add_dgp_flags(simulate, f);
  add_dgp_flags(coverage, f);
  simulate->add_option("--out", f.out, "Dataset CSV (default stdout)");
  simulate->add_option("--latent", f.latent, "Also write the latent variables as TSV");
  f.add("reps", coverage->add_option("--reps", f.reps, "Replicates (at least 200)"));
  f.add("oracle-draws", coverage->add_option("--oracle-draws", f.oracle_draws, "Population draws for the oracle"));
  coverage->add_option("--draws", f.draws, "Also write every replicate's estimates as TSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig c = build_config(f);
    if (validate->parsed()) return cmd_validate(c);
    if (proportions->parsed()) return cmd_proportions(c);
    if (bounds->parsed()) return cmd_bounds(c);
    if (simulate->parsed()) return cmd_simulate(c, f);
    return cmd_coverage(c, f);
  } catch (const InputFailure& e) {
    return report_input_error(e.error, e.file);
  } catch (const Error& e) {
    if (is_input_error(e.code())) return report_input_error(e);
    std::cerr << ojson{{"error", jerror(e)}}.dump(2) << '\n';
    return 1;
  }
}
