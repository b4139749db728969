// rcbc: robust convex biclustering from the command line.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_io.hpp"
#include "rcbc/rcbc.hpp"

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitData = 2;
constexpr int kExitUsage = 64;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_real(const std::string& s, const std::string& what) {
  if (s == "inf" || s == "Inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || std::isnan(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw UsageError(what + ": cannot parse '" + s + "'");
  }
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

// "a,b,c" or "log:lo:hi:count"
std::vector<double> parse_grid(const std::string& spec) {
  if (spec.rfind("log:", 0) == 0) {
    const auto parts = split_on(spec.substr(4), ':');
    if (parts.size() != 3) throw UsageError("--grid log spec must be log:lo:hi:count");
    const double count = parse_real(parts[2], "--grid count");
    if (!(count >= 1.0) || count != std::floor(count)) throw UsageError("--grid count must be a positive integer");
    return rcbc::log_grid(parse_real(parts[0], "--grid lo"), parse_real(parts[1], "--grid hi"),
                          static_cast<std::size_t>(count));
  }
  std::vector<double> out;
  for (const auto& v : split_on(spec, ',')) out.push_back(parse_real(v, "--grid"));
  return out;
}

// "lo:hi:step" or "a,b,c"
std::vector<double> parse_mean_grid(const std::string& spec) {
  const auto parts = split_on(spec, ':');
  if (parts.size() == 3) {
    return rcbc::mean_grid(parse_real(parts[0], "--mean-grid"), parse_real(parts[1], "--mean-grid"),
                           parse_real(parts[2], "--mean-grid"));
  }
  std::vector<double> out;
  for (const auto& v : split_on(spec, ',')) out.push_back(parse_real(v, "--mean-grid"));
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw rcbc::cli::DataError("cannot create output directory '" + dir + "': " + ec.message());
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw rcbc::cli::DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

struct FitArgs {
  std::string input;
  bool header = false;
  bool rownames = false;
  std::optional<double> lambda;
  std::string tau = "auto";
  std::size_t row_k = 5;
  std::size_t col_k = 5;
  std::optional<double> xi;
  std::string delta;
  rcbc::SolverConfig cfg;
  std::optional<std::size_t> top_variance;
  std::string out_dir = ".";
  bool heatmap = false;
  std::size_t heatmap_scale = 4;

  bool cv = false;
  std::string grid = "log:0.1:1000:10";
  std::size_t folds = 10;
  unsigned threads = 0;
  std::string imputation = "mean";
  std::string cv_loss = "squared";
};

void add_fit_flags(CLI::App& cmd, FitArgs& a) {
  cmd.add_option("input", a.input, "input CSV (rows x columns)")->required();
  cmd.add_flag("--header", a.header, "first line holds column names");
  cmd.add_flag("--rownames", a.rownames, "first field of each line is a row name");
  cmd.add_option("--tau", a.tau, "auto | mad | <value> | inf")->capture_default_str();
  cmd.add_option("--row-k", a.row_k, "nearest neighbours in the row graph")->capture_default_str();
  cmd.add_option("--col-k", a.col_k, "nearest neighbours in the column graph")->capture_default_str();
  cmd.add_option("--xi", a.xi, "weight decay (default 0.001)");
  cmd.add_option("--delta", a.delta, "weight truncation: <value> | inf (default 1.345 * MAD)");
  cmd.add_option("--rho", a.cfg.rho, "ADMM step")->capture_default_str();
  cmd.add_option("--tol", a.cfg.outer_tol, "outer tolerance, relative to max(1, |X|_F)")->capture_default_str();
  cmd.add_option("--inner-tol", a.cfg.inner_tol, "inner tolerance, relative")->capture_default_str();
  cmd.add_option("--max-outer", a.cfg.outer_max_iter)->capture_default_str();
  cmd.add_option("--max-inner", a.cfg.inner_max_iter)->capture_default_str();
  cmd.add_option("--fuse-tol", a.cfg.fuse_tol, "centroid merge tolerance")->capture_default_str();
  cmd.add_option("--top-variance", a.top_variance, "keep the N rows with the largest variance");
  cmd.add_option("--seed", a.cfg.seed)->capture_default_str();
  cmd.add_option("--out-dir", a.out_dir)->capture_default_str();
  cmd.add_flag("--heatmap", a.heatmap, "also write heatmap.ppm");
  cmd.add_option("--heatmap-scale", a.heatmap_scale, "pixels per cell")->capture_default_str();
  cmd.add_option("--grid", a.grid, "lambda grid: a,b,c or log:lo:hi:count")->capture_default_str();
  cmd.add_option("--folds", a.folds)->capture_default_str();
  cmd.add_option("--threads", a.threads, "cross-validation workers (0: all cores)")->capture_default_str();
  cmd.add_option("--imputation", a.imputation, "mean | median")->capture_default_str();
  cmd.add_option("--cv-loss", a.cv_loss, "squared | huber")->capture_default_str();
}

rcbc::TauPolicy tau_policy(const std::string& s) {
  if (s == "auto") return rcbc::TauPolicy::tuning_free();
  if (s == "mad") return rcbc::TauPolicy::mad_default();
  return rcbc::TauPolicy::fixed(parse_real(s, "--tau"));
}

struct Prepared {
  rcbc::cli::Table table;
  std::vector<std::size_t> kept_rows;
  rcbc::WeightSettings weights;
};

Prepared prepare(const FitArgs& a) {
  Prepared p;
  p.table = rcbc::cli::read_csv(a.input, a.header, a.rownames);
  if (a.top_variance) {
    if (*a.top_variance < 2) throw UsageError("--top-variance must be at least 2");
    p.kept_rows = rcbc::cli::top_variance_rows(p.table.values, *a.top_variance);
    p.table.values = rcbc::cli::select_rows(p.table.values, p.kept_rows);
    if (!p.table.row_names.empty()) {
      std::vector<std::string> names;
      for (std::size_t i : p.kept_rows) names.push_back(p.table.row_names[i]);
      p.table.row_names = std::move(names);
    }
  }
  p.weights.row_k = a.row_k;
  p.weights.col_k = a.col_k;
  p.weights.xi = a.xi;
  if (!a.delta.empty()) p.weights.delta = parse_real(a.delta, "--delta");
  return p;
}

std::string format_flag_real(double v) {
  if (std::isinf(v)) return "inf";
  return rcbc::cli::detail::format_double(v);
}

ordered_json config_echo(const FitArgs& a, double lambda, const rcbc::FusionGraphs& g) {
  ordered_json c;
  c["input"] = a.input;
  c["header"] = a.header;
  c["rownames"] = a.rownames;
  c["lambda"] = lambda;
  c["tau"] = a.tau;
  c["row_k"] = a.row_k;
  c["col_k"] = a.col_k;
  c["xi"] = g.rows.xi;
  c["delta"] = format_flag_real(g.rows.delta);
  c["rho"] = a.cfg.rho;
  c["tol"] = a.cfg.outer_tol;
  c["inner_tol"] = a.cfg.inner_tol;
  c["max_outer"] = a.cfg.outer_max_iter;
  c["max_inner"] = a.cfg.inner_max_iter;
  c["fuse_tol"] = a.cfg.fuse_tol;
  c["top_variance"] = a.top_variance ? ordered_json(*a.top_variance) : ordered_json(nullptr);
  c["seed"] = a.cfg.seed;
  return c;
}

void fit_and_write(const FitArgs& a, const Prepared& p, double lambda) {
  const auto t0 = std::chrono::steady_clock::now();
  const rcbc::Matrix& x = p.table.values;
  const auto graphs = rcbc::make_fusion_graphs(x, p.weights);
  const auto fit = rcbc::rcbc_fit(x, graphs.rows, graphs.cols, lambda, tau_policy(a.tau), a.cfg);
  const auto labels = rcbc::extract_biclusters(fit, graphs.rows, graphs.cols, a.cfg.fuse_tol);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  rcbc::cli::write_csv((dir / "u_hat.csv").string(), fit.u_hat, p.table.col_names, p.table.row_names);
  rcbc::cli::write_labels((dir / "row_labels.csv").string(), labels.row_labels, p.table.row_names);
  rcbc::cli::write_labels((dir / "col_labels.csv").string(), labels.col_labels, p.table.col_names);
  if (a.heatmap) {
    rcbc::cli::write_heatmap((dir / "heatmap.ppm").string(), fit.u_hat, labels.row_labels, labels.col_labels,
                             std::max<std::size_t>(1, a.heatmap_scale));
  }

  ordered_json s;
  s["lambda"] = lambda;
  s["tau_trajectory"] = fit.tau_trajectory;
  s["outer_iterations"] = fit.outer_iterations;
  s["inner_iterations"] = fit.inner_iterations;
  s["converged"] = fit.converged;
  s["final_discrepancy"] = fit.discrepancy_trajectory.empty() ? 0.0 : fit.discrepancy_trajectory.back();
  s["objective"] = fit.objective;
  s["n_row_clusters"] = labels.n_row_clusters();
  s["n_col_clusters"] = labels.n_col_clusters();
  s["n_rows"] = x.rows();
  s["n_cols"] = x.cols();
  if (!p.kept_rows.empty()) s["kept_rows"] = p.kept_rows;
  s["wall_seconds"] = seconds;
  s["config"] = config_echo(a, lambda, graphs);
  write_json((dir / "summary.json").string(), s);

  std::cout << "lambda " << lambda << ": " << labels.n_row_clusters() << " row x " << labels.n_col_clusters()
            << " column clusters, " << (fit.converged ? "converged" : "NOT converged") << " after "
            << fit.outer_iterations << " outer iterations\n";
}

int run_cv(const FitArgs& a) {
  const Prepared p = prepare(a);
  rcbc::CvOptions opts;
  opts.folds = a.folds;
  opts.seed = a.cfg.seed;
  opts.threads = a.threads;
  if (a.imputation == "mean") {
    opts.imputation = rcbc::Imputation::mean;
  } else if (a.imputation == "median") {
    opts.imputation = rcbc::Imputation::median;
  } else {
    throw UsageError("--imputation must be mean or median");
  }
  if (a.cv_loss == "squared") {
    opts.loss = rcbc::ValidationLoss::squared;
  } else if (a.cv_loss == "huber") {
    opts.loss = rcbc::ValidationLoss::huber;
  } else {
    throw UsageError("--cv-loss must be squared or huber");
  }
  const auto grid = parse_grid(a.grid);
  const auto report = rcbc::cv_lambda(p.table.values, grid, p.weights, tau_policy(a.tau), a.cfg, opts);

  ordered_json j;
  j["grid"] = report.grid;
  j["mse_per_lambda"] = report.mse_per_lambda;
  j["fold_mse"] = report.fold_mse;
  ordered_json nc = ordered_json::array();
  for (const auto& [f, g] : report.non_converged) nc.push_back({{"fold", f}, {"lambda_index", g}});
  j["non_converged"] = nc;
  j["best_lambda"] = report.best_lambda;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  ensure_dir(a.out_dir);
  write_json((fs::path(a.out_dir) / "cv_report.json").string(), j);
  std::cout << "cross-validation picked lambda " << report.best_lambda << '\n';

  fit_and_write(a, p, report.best_lambda);
  return kExitOk;
}

int run_fit(const FitArgs& a) {
  if (a.cv) return run_cv(a);
  if (!a.lambda) throw UsageError("fit needs --lambda (or --cv)");
  fit_and_write(a, prepare(a), *a.lambda);
  return kExitOk;
}

struct SimArgs {
  rcbc::CheckerboardSpec spec;
  std::string mean_grid = "-5:5:0.5";
  std::string noise = "none";
  double cauchy_gamma = 1.5;
  double cauchy_location = 0.0;
  double lognormal_mu = 0.0;
  double lognormal_sigma = 2.0;
  double t_df = 1.0;
  double pareto_scale = 1.0;
  double pareto_shape = 2.0;
  std::string out_dir = ".";
};

int run_simulate(const SimArgs& a) {
  rcbc::CheckerboardSpec spec = a.spec;
  spec.means = parse_mean_grid(a.mean_grid);
  rcbc::NoiseSpec noise;
  if (a.noise == "none") {
    noise = rcbc::NoiseSpec::none();
  } else if (a.noise == "cauchy") {
    noise = rcbc::NoiseSpec::cauchy(a.cauchy_gamma, a.cauchy_location, spec.seed);
  } else if (a.noise == "lognormal") {
    noise = rcbc::NoiseSpec::lognormal(a.lognormal_mu, a.lognormal_sigma, spec.seed);
  } else if (a.noise == "t") {
    noise = rcbc::NoiseSpec::student_t(a.t_df, spec.seed);
  } else if (a.noise == "pareto") {
    noise = rcbc::NoiseSpec::pareto(a.pareto_scale, a.pareto_shape, spec.seed);
  } else {
    throw UsageError("--noise must be none, cauchy, lognormal, t or pareto");
  }
  noise.validate();
  const auto cb = rcbc::make_checkerboard(spec);
  const auto x = rcbc::add_noise(cb.x0, noise);

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  rcbc::cli::write_csv((dir / "data.csv").string(), x);
  rcbc::cli::write_labels((dir / "truth_row_labels.csv").string(), cb.truth.row_labels);
  rcbc::cli::write_labels((dir / "truth_col_labels.csv").string(), cb.truth.col_labels);

  ordered_json j;
  j["n"] = spec.n;
  j["p"] = spec.p;
  j["row_blocks"] = spec.row_blocks;
  j["col_blocks"] = spec.col_blocks;
  j["mean_grid"] = spec.means;
  j["sigma"] = spec.sigma;
  j["noise"] = a.noise;
  j["noise_params"] = {{"a", noise.a}, {"b", noise.b}};
  j["seed"] = spec.seed;
  std::vector<std::vector<double>> mu(cb.mu.rows());
  for (std::size_t r = 0; r < cb.mu.rows(); ++r) mu[r].assign(cb.mu.row(r).begin(), cb.mu.row(r).end());
  j["block_means"] = mu;
  write_json((dir / "spec.json").string(), j);
  return kExitOk;
}

struct EvalArgs {
  std::string row_labels, col_labels, truth_row, truth_col;
  std::string out_dir = ".";
};

int run_evaluate(const EvalArgs& a) {
  const rcbc::BiclusterLabels pred{rcbc::cli::read_labels(a.row_labels), rcbc::cli::read_labels(a.col_labels)};
  const rcbc::BiclusterLabels truth{rcbc::cli::read_labels(a.truth_row), rcbc::cli::read_labels(a.truth_col)};
  if (pred.row_labels.size() != truth.row_labels.size() || pred.col_labels.size() != truth.col_labels.size()) {
    throw rcbc::cli::DataError("predicted and truth labels differ in length");
  }
  const auto pc = rcbc::cell_labels(pred);
  const auto tc = rcbc::cell_labels(truth);
  const auto vi = rcbc::variation_of_information(pc, tc);
  ordered_json j;
  j["ri"] = rcbc::rand_index(pc, tc);
  j["ari"] = rcbc::adjusted_rand_index(pc, tc);
  j["vi_nats"] = vi.vi_nats;
  j["nvi"] = vi.nvi;
  ensure_dir(a.out_dir);
  write_json((fs::path(a.out_dir) / "metrics.json").string(), j);
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust convex biclustering"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit at one lambda (or pick it with --cv)");
  add_fit_flags(*fit, fit_args);
  fit->add_option("--lambda", fit_args.lambda, "fusion penalty");
  fit->add_flag("--cv", fit_args.cv, "choose lambda by cross-validation over --grid first");

  FitArgs cv_args;
  cv_args.cv = true;
  auto* cv = app.add_subcommand("cv", "cross-validate lambda, then fit at the best value");
  add_fit_flags(*cv, cv_args);

  SimArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "checkerboard data with optional heavy-tailed noise");
  sim->add_option("--n", sim_args.spec.n)->capture_default_str();
  sim->add_option("--p", sim_args.spec.p)->capture_default_str();
  sim->add_option("--row-blocks", sim_args.spec.row_blocks)->capture_default_str();
  sim->add_option("--col-blocks", sim_args.spec.col_blocks)->capture_default_str();
  sim->add_option("--mean-grid", sim_args.mean_grid, "lo:hi:step or a,b,c")->capture_default_str();
  sim->add_option("--sigma", sim_args.spec.sigma)->capture_default_str();
  sim->add_option("--noise", sim_args.noise, "none | cauchy | lognormal | t | pareto")->capture_default_str();
  sim->add_option("--cauchy-gamma", sim_args.cauchy_gamma)->capture_default_str();
  sim->add_option("--cauchy-location", sim_args.cauchy_location)->capture_default_str();
  sim->add_option("--lognormal-mu", sim_args.lognormal_mu)->capture_default_str();
  sim->add_option("--lognormal-sigma", sim_args.lognormal_sigma)->capture_default_str();
  sim->add_option("--t-df", sim_args.t_df)->capture_default_str();
  sim->add_option("--pareto-scale", sim_args.pareto_scale)->capture_default_str();
  sim->add_option("--pareto-shape", sim_args.pareto_shape)->capture_default_str();
  sim->add_option("--seed", sim_args.spec.seed)->capture_default_str();
  sim->add_option("--out-dir", sim_args.out_dir)->capture_default_str();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "RI, ARI and VI of predicted biclusters against truth");
  eval->add_option("--row-labels", eval_args.row_labels)->required();
  eval->add_option("--col-labels", eval_args.col_labels)->required();
  eval->add_option("--truth-row-labels", eval_args.truth_row)->required();
  eval->add_option("--truth-col-labels", eval_args.truth_col)->required();
  eval->add_option("--out-dir", eval_args.out_dir)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit->parsed()) return run_fit(fit_args);
    if (cv->parsed()) return run_cv(cv_args);
    if (sim->parsed()) return run_simulate(sim_args);
    if (eval->parsed()) return run_evaluate(eval_args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rcbc::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const rcbc::cli::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    // invalid input matrices, degenerate scale and similar data problems
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
