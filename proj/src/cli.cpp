#include "hte/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "hte/fit.hpp"
#include "hte/mdrd.hpp"
#include "hte/penalty.hpp"
#include "hte/rules.hpp"
#include "hte/simulate.hpp"

namespace hte {

namespace {

using Json = nlohmann::ordered_json;

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<Label> encode_labels(const CsvTable& table, std::size_t col,
                                 const std::vector<std::size_t>& rows) {
  std::map<std::string, Label> codes;
  std::vector<Label> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto& text = table.rows[r][col];
    auto it = codes.emplace(text, static_cast<Label>(codes.size())).first;
    out.push_back(it->second);
  }
  return out;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json report_json(const PenaltyReport& r) {
  Json j;
  j["loss"] = std::string(to_string(r.loss));
  j["method"] = std::string(to_string(r.method));
  j["err_weighted"] = r.err_weighted;
  j["omega_hat"] = r.omega_hat;
  j["err_hat"] = r.err_hat;
  j["trace_jv"] = optional_json(r.trace_jv);
  j["p_hat"] = optional_json(r.p_hat);
  j["daic"] = optional_json(r.daic);
  j["daic_sum"] = optional_json(r.daic_sum);
  j["aic_naive"] = optional_json(r.aic_naive);
  j["meat"] = std::string(to_string(r.meat));
  j["B"] = r.B;
  j["dropped"] = r.dropped;
  j["rho_hat"] = r.rho_hat;
  j["phi_hat"] = r.phi_hat;
  j["dispersion_warning"] = r.dispersion_warning;
  j["n"] = r.n;
  j["pop_size"] = r.pop_size;
  return j;
}

std::vector<double> as_vector(const Vector& v) { return {v.begin(), v.end()}; }

struct DataFlags {
  std::string data;
  std::string outcome;
  std::vector<std::string> covariates;
  std::string weights;
  std::string pi;
  std::string strata;
  std::string psu;
  double pop_size = 0.0;
  double hajek = 0.0;

  void add(CLI::App* cmd) {
    cmd->add_option("--data", data, "CSV file with a header row")->required();
    cmd->add_option("--outcome", outcome, "Outcome column")->required();
    cmd->add_option("--covariates", covariates, "Covariate columns")->delimiter(',')->required();
    cmd->add_option("--weights", weights, "Sampling weight column");
    cmd->add_option("--pi", pi, "Inclusion probability column");
    cmd->add_option("--strata", strata, "Stratum column");
    cmd->add_option("--psu", psu, "PSU column");
    cmd->add_option("--pop-size", pop_size, "Population size N (default: sum of weights)");
    cmd->add_option("--hajek", hajek, "Rescale weights to sum to N");
  }

  DatasetSchema schema() const {
    DatasetSchema s;
    s.outcome = outcome;
    s.covariates = covariates;
    if (!weights.empty()) s.weight_column = weights;
    if (!pi.empty()) s.pi_column = pi;
    if (!strata.empty()) s.stratum_column = strata;
    if (!psu.empty()) s.psu_column = psu;
    if (pop_size > 0.0) s.pop_size = pop_size;
    if (hajek > 0.0) s.hajek_total = hajek;
    return s;
  }

  Dataset load() const { return load_dataset(read_csv(data), schema()); }
};

struct FitArgs {
  DataFlags data;
  std::string family = "gaussian";
  std::string loss = "deviance";
  std::string method = "daic";
  std::string meat;
  bool center_diagonal = false;
  bool certainty = false;
  bool no_intercept = false;
  int B = 0;
  std::optional<std::uint64_t> seed;
  int intervals = 100;
  bool estimate_phi = false;
  unsigned threads = 1;
  std::string out_json;
};

void run_fit(const FitArgs& a, std::ostream& out) {
  const Dataset ds = a.data.load();
  const Family family = [&] {
    switch (parse_family(a.family)) {
      case FamilyKind::bernoulli: return Family::bernoulli();
      case FamilyKind::poisson: return Family::poisson();
      default: return Family::gaussian();
    }
  }();
  const LossKind loss = parse_loss(a.loss);
  if (loss == LossKind::zero_one) throw DomainError("zero_one loss needs the knn command");
  if (a.method != "daic" && a.method != "hte-analytic" && a.method != "hte-bootstrap") {
    throw DomainError("unknown method '" + a.method + "'");
  }
  const bool bootstrap = a.method == "hte-bootstrap" || a.B > 0;
  if (bootstrap && a.B < 2) throw DomainError("bootstrap needs --B of at least 2");
  if (bootstrap && !a.seed) throw DomainError("bootstrap needs --seed");

  FitOptions options;
  Matrix X = ds.X;
  if (!a.no_intercept) {
    X = with_intercept(ds.X);
    options.column_names.push_back("(intercept)");
  }
  for (const auto& c : a.data.covariates) options.column_names.push_back(c);

  MeatStructure meat = (ds.design.has_strata() || ds.design.has_psu())
                           ? MeatStructure::stratified_cluster
                           : MeatStructure::independent;
  if (!a.meat.empty()) meat = parse_meat_structure(a.meat);
  ClusterOptions cluster;
  cluster.center_diagonal = a.center_diagonal;
  cluster.single_psu = a.certainty ? SinglePsuPolicy::certainty : SinglePsuPolicy::reject;

  const GlmFit fit = fit_weighted_glm(X, ds.y, family, ds.design, options);
  const SandwichVariance sw = sandwich_variance(fit, meat, cluster);
  const PenaltyReport report = hte_analytic(fit, loss, meat, cluster);

  Json j;
  j["command"] = "fit";
  j["family"] = std::string(to_string(family.kind));
  j["method"] = a.method;
  j["columns"] = options.column_names;
  j["n"] = fit.n();
  j["p"] = fit.p();
  j["pop_size"] = fit.design.pop_size;
  j["rows_dropped"] = ds.rows_dropped;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["separation_warning"] = fit.separation_warning;
  j["dispersion"] = fit.family.dispersion;
  j["theta"] = as_vector(fit.theta);
  j["v_diag"] = as_vector(sw.V.diagonal());
  j["condition_number"] = sw.condition_number;
  j["ill_conditioned"] = sw.ill_conditioned;
  j["weighted_deviance"] =
      fit.design.pop_size * in_sample_error(Loss::deviance(fit.family), fit.y, fit.mu, fit.design);
  j["report"] = report_json(report);

  out << "family " << to_string(family.kind) << ", n = " << fit.n() << ", p = " << fit.p() << '\n';
  for (Index c = 0; c < fit.p(); ++c) {
    out << "  " << std::left << std::setw(16) << options.column_names[static_cast<std::size_t>(c)]
        << std::right << std::setw(14) << format_number(fit.theta[c]) << "  se "
        << format_number(std::sqrt(sw.V(c, c))) << '\n';
  }
  out << "weighted deviance " << format_number(j["weighted_deviance"].get<double>()) << '\n';
  out << "dAIC " << format_number(*report.daic) << "  p_hat " << format_number(*report.p_hat)
      << "  err_hat " << format_number(report.err_hat) << '\n';

  if (bootstrap) {
    const GlmRule rule(family, loss, options);
    BootstrapOptions boot;
    boot.B = a.B;
    boot.seed = *a.seed;
    boot.threads = a.threads;
    boot.estimate_phi = a.estimate_phi;
    const PenaltyReport main = hte_bootstrap(rule, X, ds.y, ds.design, family, boot);
    Json b = report_json(main);
    if (a.intervals > 0) {
      std::vector<double> p_hats;
      for (int r = 0; r < a.intervals; ++r) {
        BootstrapOptions rep = boot;
        rep.seed = mix64(*a.seed ^ mix64(static_cast<std::uint64_t>(r) + 1));
        p_hats.push_back(*hte_bootstrap(rule, X, ds.y, ds.design, family, rep).p_hat);
      }
      b["intervals"] = a.intervals;
      b["p_hat_median"] = quantile(p_hats, 0.5);
      b["p_hat_q025"] = quantile(p_hats, 0.025);
      b["p_hat_q975"] = quantile(p_hats, 0.975);
      out << "bootstrap p_hat " << format_number(*main.p_hat) << " (median "
          << format_number(quantile(p_hats, 0.5)) << ", 95% interval "
          << format_number(quantile(p_hats, 0.025)) << " to " << format_number(quantile(p_hats, 0.975))
          << ")\n";
    } else {
      out << "bootstrap p_hat " << format_number(*main.p_hat) << '\n';
    }
    j["bootstrap"] = b;
  }
  if (!a.out_json.empty()) write_file(a.out_json, j.dump(2) + "\n");
}

struct KnnArgs {
  DataFlags data;
  std::vector<int> k{10, 20, 30, 40};
  int B = 200;
  std::optional<std::uint64_t> seed;
  bool unweighted_vote = false;
  unsigned threads = 1;
  std::string out_csv;
  std::string out_json;
};

void run_knn(const KnnArgs& a, std::ostream& out) {
  if (!a.seed) throw DomainError("knn needs --seed");
  const Dataset ds = a.data.load();
  for (Index i = 0; i < ds.y.size(); ++i) {
    if (ds.y[i] != 0.0 && ds.y[i] != 1.0) throw DesignError("knn needs a 0/1 outcome");
  }
  for (int k : a.k) {
    if (k < 1 || k > ds.y.size()) throw DomainError("k must lie in [1, n]");
  }
  KnnReportOptions options;
  options.B = a.B;
  options.seed = *a.seed;
  options.threads = a.threads;
  options.weighted_vote = !a.unweighted_vote;
  const auto reports = knn_error_report(ds.X, ds.y, ds.design, a.k, options);

  std::ostringstream csv;
  write_csv_row(csv, {"k", "err", "half_omega", "err_hat"});
  Json rows = Json::array();
  out << std::setw(6) << "k" << std::setw(14) << "err" << std::setw(14) << "omega/2" << std::setw(14)
      << "err_hat" << '\n';
  for (std::size_t i = 0; i < a.k.size(); ++i) {
    const KnnRow row = to_knn_row(a.k[i], reports[i]);
    write_csv_row(csv, {std::to_string(row.k), format_number(row.err), format_number(row.half_omega),
                        format_number(row.err_hat)});
    Json r = report_json(reports[i]);
    r["k"] = row.k;
    rows.push_back(r);
    out << std::setw(6) << row.k << std::fixed << std::setprecision(5) << std::setw(14) << row.err
        << std::setw(14) << row.half_omega << std::setw(14) << row.err_hat << '\n'
        << std::defaultfloat;
  }
  if (!a.out_csv.empty()) write_file(a.out_csv, csv.str());
  if (!a.out_json.empty()) write_file(a.out_json, rows.dump(2) + "\n");
}

struct SimulateArgs {
  std::string experiment = "optimism";
  std::string scenario = "s1";
  std::string sampling = "systematic";
  Index pop = 100000;
  Index n = 1000;
  int reps = 1000;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string family = "bernoulli";
  std::vector<Index> grid_n;
  std::vector<double> grid_prevalence;
  double prevalence = 1.0 / 200.0;
  double case_fraction = 0.2;
  double max_failure_fraction = 0.01;
  std::string out_csv;
  std::string out_json;
};

void run_simulate(const SimulateArgs& a, std::ostream& out) {
  if (!a.seed) throw DomainError("simulate needs --seed");
  if (a.experiment == "optimism") {
    ScenarioSpec spec{parse_scenario(a.scenario), a.pop, a.n, parse_sampling_scheme(a.sampling)};
    const ExperimentSummary s = run_optimism_experiment(spec, a.reps, *a.seed, a.threads);
    auto row = [&out](const Aggregate& g) {
      out << std::fixed << std::setprecision(3) << g.mean << " {" << g.median << "} (" << g.q025
          << ", " << g.q975 << ")" << std::defaultfloat;
    };
    out << to_string(s.scenario) << "  Err-err ";
    row(s.optimism);
    out << "  Omega-hat ";
    row(s.omega_hat);
    out << "  [" << s.records.size() << " replicates, " << s.failures << " failed]\n";
    if (!a.out_csv.empty()) {
      std::ostringstream csv;
      write_records_csv(csv, s);
      write_file(a.out_csv, csv.str());
    }
    if (!a.out_json.empty()) write_file(a.out_json, summary_json(s));
    return;
  }
  if (a.experiment != "relative-error") throw DomainError("unknown experiment '" + a.experiment + "'");
  if (!a.grid_n.empty() && !a.grid_prevalence.empty()) {
    throw DomainError("give either --grid-n or --grid-prevalence");
  }
  CaseControlSpec base;
  base.family = parse_family(a.family);
  base.prevalence = a.prevalence;
  base.sample_case_fraction = a.case_fraction;
  base.sample_size = a.n;
  std::vector<CaseControlSpec> grid;
  for (Index n : a.grid_n) {
    grid.push_back(base);
    grid.back().sample_size = n;
  }
  for (double p : a.grid_prevalence) {
    grid.push_back(base);
    grid.back().prevalence = p;
  }
  if (grid.empty()) grid.push_back(base);
  const auto cells = run_relative_error_experiment(grid, a.reps, *a.seed, a.threads, a.max_failure_fraction);
  Json j = Json::array();
  out << std::setw(10) << "n" << std::setw(12) << "prevalence" << std::setw(12) << "rel_hte"
      << std::setw(12) << "rel_aic" << std::setw(12) << "ratio" << '\n';
  for (const auto& c : cells) {
    out << std::setw(10) << c.spec.sample_size << std::setw(12) << format_number(c.spec.prevalence)
        << std::fixed << std::setprecision(4) << std::setw(12) << c.mean_rel_hte << std::setw(12)
        << c.mean_rel_aic << std::setw(12) << c.ratio_of_means << std::defaultfloat << '\n';
    j.push_back({{"family", std::string(to_string(c.spec.family))},
                 {"prevalence", c.spec.prevalence},
                 {"sample_size", c.spec.sample_size},
                 {"pop_size", c.pop_size},
                 {"reps", c.reps},
                 {"failures", c.failures},
                 {"mean_rel_hte", c.mean_rel_hte},
                 {"mean_rel_aic", c.mean_rel_aic},
                 {"ratio_of_means", c.ratio_of_means},
                 {"mean_of_ratios", c.mean_of_ratios}});
  }
  if (!a.out_csv.empty()) {
    std::ostringstream csv;
    write_relative_error_csv(csv, cells);
    write_file(a.out_csv, csv.str());
  }
  if (!a.out_json.empty()) write_file(a.out_json, j.dump(2) + "\n");
}

struct GfrArgs {
  std::string data;
  std::string scr, age, bun, salb;
  std::string black, female;
  bool recalibrate = false;
  std::string out_csv;
};

bool parse_flag(const std::string& text) {
  const std::optional<double> v = parse_number(text);
  if (!v || (*v != 0.0 && *v != 1.0)) throw DesignError("indicator value '" + text + "' is not 0/1");
  return *v == 1.0;
}

double parse_required(const std::string& text, const std::string& what) {
  const std::optional<double> v = parse_number(text);
  if (!v) throw DesignError(what + " is missing");
  return *v;
}

void run_gfr(const GfrArgs& a, std::ostream& out) {
  if (a.data.empty()) {
    MdrdInput in;
    in.scr = parse_required(a.scr, "--scr");
    in.age_years = parse_required(a.age, "--age");
    in.bun = parse_required(a.bun, "--bun");
    in.salb = parse_required(a.salb, "--salb");
    in.is_black = !a.black.empty() && parse_flag(a.black);
    in.is_female = !a.female.empty() && parse_flag(a.female);
    const double gfr = mdrd_gfr(in, a.recalibrate);
    out << "gfr " << format_number(gfr) << "\nckd_stage3 " << (ckd_stage3(gfr) ? 1 : 0) << '\n';
    return;
  }
  // Column mode: the value flags name columns of the input file.
  const CsvTable table = read_csv(a.data);
  for (const auto* name : {&a.scr, &a.age, &a.bun, &a.salb}) {
    if (name->empty()) throw DesignError("--scr, --age, --bun and --salb must name columns");
  }
  const std::size_t c_scr = table.column(a.scr), c_age = table.column(a.age),
                    c_bun = table.column(a.bun), c_salb = table.column(a.salb);
  const std::optional<std::size_t> c_black =
      a.black.empty() ? std::nullopt : std::optional(table.column(a.black));
  const std::optional<std::size_t> c_female =
      a.female.empty() ? std::nullopt : std::optional(table.column(a.female));
  std::ostringstream csv;
  std::vector<std::string> header = table.header;
  header.push_back("gfr");
  header.push_back("ckd_stage3");
  write_csv_row(csv, header);
  for (const auto& row : table.rows) {
    std::vector<std::string> fields = row;
    const auto scr = parse_number(row[c_scr]), age = parse_number(row[c_age]),
               bun = parse_number(row[c_bun]), salb = parse_number(row[c_salb]);
    if (scr && age && bun && salb) {
      MdrdInput in{*scr, *age, *bun, *salb, c_black && parse_flag(row[*c_black]),
                   c_female && parse_flag(row[*c_female])};
      const double gfr = mdrd_gfr(in, a.recalibrate);
      fields.push_back(format_number(gfr));
      fields.push_back(ckd_stage3(gfr) ? "1" : "0");
    } else {
      fields.push_back("NA");
      fields.push_back("NA");
    }
    write_csv_row(csv, fields);
  }
  if (a.out_csv.empty()) {
    out << csv.str();
  } else {
    write_file(a.out_csv, csv.str());
  }
}

}  // namespace

Dataset load_dataset(const CsvTable& table, const DatasetSchema& schema) {
  if (schema.weight_column.has_value() == schema.pi_column.has_value()) {
    throw DesignError("give exactly one of a weight column or an inclusion probability column");
  }
  if (schema.covariates.empty()) throw DesignError("no covariate columns given");
  const std::size_t y_col = table.column(schema.outcome);
  std::vector<std::size_t> x_cols;
  for (const auto& c : schema.covariates) x_cols.push_back(table.column(c));
  const std::size_t w_col = table.column(schema.weight_column ? *schema.weight_column : *schema.pi_column);
  const std::optional<std::size_t> s_col =
      schema.stratum_column ? std::optional(table.column(*schema.stratum_column)) : std::nullopt;
  const std::optional<std::size_t> p_col =
      schema.psu_column ? std::optional(table.column(*schema.psu_column)) : std::nullopt;

  std::vector<std::size_t> numeric = x_cols;
  numeric.push_back(y_col);
  numeric.push_back(w_col);
  std::vector<std::size_t> kept;
  Index dropped = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    bool missing = false;
    for (std::size_t c : numeric) missing = missing || is_missing(row[c]);
    if (s_col) missing = missing || is_missing(row[*s_col]);
    if (p_col) missing = missing || is_missing(row[*p_col]);
    if (missing) {
      ++dropped;
    } else {
      kept.push_back(r);
    }
  }
  if (kept.empty()) throw DesignError("no complete rows");

  const auto n = static_cast<Index>(kept.size());
  Dataset ds;
  ds.rows_dropped = dropped;
  ds.X.resize(n, static_cast<Index>(x_cols.size()));
  ds.y.resize(n);
  Vector w(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[kept[static_cast<std::size_t>(i)]];
    ds.y[i] = *parse_number(row[y_col]);
    for (std::size_t j = 0; j < x_cols.size(); ++j) ds.X(i, static_cast<Index>(j)) = *parse_number(row[x_cols[j]]);
    w[i] = *parse_number(row[w_col]);
  }
  DesignLabels labels;
  labels.pop_size = schema.pop_size;
  if (s_col) labels.strata = encode_labels(table, *s_col, kept);
  if (p_col) labels.psu = encode_labels(table, *p_col, kept);
  ds.design = schema.weight_column ? design_from_weights(w, labels) : design_from_pi(w, labels);
  if (schema.hajek_total) ds.design = hajek_rescale(ds.design, *schema.hajek_total);
  return ds;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design-based prediction error estimation for complex survey samples", "hte"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a design-weighted GLM and report dAIC and HTE");
  fit.data.add(fit_cmd);
  fit_cmd->add_option("--family", fit.family, "gaussian, bernoulli or poisson");
  fit_cmd->add_option("--loss", fit.loss, "deviance or squared_error");
  fit_cmd->add_option("--method", fit.method, "daic, hte-analytic or hte-bootstrap");
  fit_cmd->add_option("--meat", fit.meat, "independent, stratified_cluster or model_based");
  fit_cmd->add_flag("--center-diagonal", fit.center_diagonal, "Centre residuals inside PSU blocks too");
  fit_cmd->add_flag("--certainty", fit.certainty, "Treat single-PSU strata as certainty units");
  fit_cmd->add_flag("--no-intercept", fit.no_intercept, "Do not add an intercept column");
  fit_cmd->add_option("--B", fit.B, "Bootstrap replicates");
  fit_cmd->add_option("--seed", fit.seed, "Random seed");
  fit_cmd->add_option("--intervals", fit.intervals, "Bootstrap reruns for the p-hat interval (0 to skip)");
  fit_cmd->add_flag("--estimate-phi", fit.estimate_phi, "Inflate bootstrap covariances by phi-hat");
  fit_cmd->add_option("--threads", fit.threads, "Worker threads (0 = all cores)");
  fit_cmd->add_option("--out-json", fit.out_json, "JSON report path");

  KnnArgs knn;
  auto* knn_cmd = app.add_subcommand("knn", "kNN 0-1 error table with bootstrap HTE");
  knn.data.add(knn_cmd);
  knn_cmd->add_option("--k", knn.k, "Neighbour counts")->delimiter(',');
  knn_cmd->add_option("--B", knn.B, "Bootstrap replicates");
  knn_cmd->add_option("--seed", knn.seed, "Random seed");
  knn_cmd->add_flag("--unweighted-vote", knn.unweighted_vote, "Ignore weights when voting");
  knn_cmd->add_option("--threads", knn.threads, "Worker threads (0 = all cores)");
  knn_cmd->add_option("--out-csv", knn.out_csv, "CSV table path");
  knn_cmd->add_option("--out-json", knn.out_json, "JSON reports path");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the optimism or relative-error experiments");
  sim_cmd->add_option("--experiment", sim.experiment, "optimism or relative-error");
  sim_cmd->add_option("--scenario", sim.scenario, "s1, s2_gauss, s2_bern, s3, s4a_gauss, s4a_bern, s4b_gauss, s4b_bern");
  sim_cmd->add_option("--sampling", sim.sampling, "systematic or successive (optimism experiment)");
  sim_cmd->add_option("--pop", sim.pop, "Population size (0 = automatic for relative-error)");
  sim_cmd->add_option("--n", sim.n, "Sample size");
  sim_cmd->add_option("--reps", sim.reps, "Replicates");
  sim_cmd->add_option("--seed", sim.seed, "Random seed");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--family", sim.family, "Family for relative-error");
  sim_cmd->add_option("--grid-n", sim.grid_n, "Sample sizes")->delimiter(',');
  sim_cmd->add_option("--grid-prevalence", sim.grid_prevalence, "Population prevalences")->delimiter(',');
  sim_cmd->add_option("--prevalence", sim.prevalence, "High-risk prevalence");
  sim_cmd->add_option("--case-fraction", sim.case_fraction, "High-risk share of the sample");
  sim_cmd->add_option("--max-failure-fraction", sim.max_failure_fraction, "Tolerated share of failed replicates");
  sim_cmd->add_option("--out-csv", sim.out_csv, "Per-replicate (or per-cell) CSV path");
  sim_cmd->add_option("--out-json", sim.out_json, "Aggregate JSON path");

  GfrArgs gfr;
  auto* gfr_cmd = app.add_subcommand("gfr", "MDRD GFR for one subject or a CSV file");
  gfr_cmd->add_option("--data", gfr.data, "CSV file; value flags then name columns");
  gfr_cmd->add_option("--scr", gfr.scr, "Serum creatinine (mg/dL)");
  gfr_cmd->add_option("--age", gfr.age, "Age (years)");
  gfr_cmd->add_option("--bun", gfr.bun, "Blood urea nitrogen (mg/dL)");
  gfr_cmd->add_option("--salb", gfr.salb, "Serum albumin (g/dL)");
  gfr_cmd->add_option("--black", gfr.black, "Black indicator (0/1)");
  gfr_cmd->add_option("--female", gfr.female, "Female indicator (0/1)");
  gfr_cmd->add_flag("--recalibrate", gfr.recalibrate, "Subtract 0.23 mg/dL from serum creatinine");
  gfr_cmd->add_option("--out-csv", gfr.out_csv, "Output CSV path (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitSchema;
  }

  try {
    if (*fit_cmd) {
      run_fit(fit, out);
    } else if (*knn_cmd) {
      run_knn(knn, out);
    } else if (*sim_cmd) {
      run_simulate(sim, out);
    } else if (*gfr_cmd) {
      run_gfr(gfr, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const DesignError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace hte
