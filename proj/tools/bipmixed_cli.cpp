#include "bipmixed/baselines.hpp"
#include "bipmixed/config.hpp"
#include "bipmixed/error.hpp"
#include "bipmixed/io.hpp"
#include "bipmixed/metrics.hpp"
#include "bipmixed/prediction.hpp"
#include "bipmixed/scenario.hpp"
#include "bipmixed/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace bipmixed;

namespace {

constexpr const char* kWorkersEnv = "BIPMIXED_WORKERS";

int default_workers() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (const std::exception&) {
    }
    throw Error(ErrorKind::ConfigError, std::string(kWorkersEnv) + ": expected a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write " + path.string());
  out << text;
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw Error(ErrorKind::ConfigError, "methods: empty list");
  return out;
}

std::string require_path(const std::string& value, const char* field) {
  if (value.empty()) throw Error(ErrorKind::ConfigError, std::string(field) + ": required");
  return value;
}

struct Common {
  std::string config;
  RunConfig cfg;

  void load() {
    if (!config.empty()) cfg = load_config(config);
  }
};

// Flags shared by fit and scenario; each overrides the config value only when given.
struct ModelFlags {
  int r = 0, iters = 0, burn = 0, thin = 0;
  std::uint64_t seed = 0;
  bool legacy = false, no_standardize = false, covariates_as_view = false, variance_factor = false;
  bool family_only = false;
  CLI::Option *r_opt, *iters_opt, *burn_opt, *thin_opt, *seed_opt;

  void add(CLI::App* app) {
    r_opt = app->add_option("--r", r, "Latent rank");
    iters_opt = app->add_option("--iters", iters, "MCMC iterations");
    burn_opt = app->add_option("--burn", burn, "Burn-in iterations");
    thin_opt = app->add_option("--thin", thin, "Keep every k-th post-burn-in draw");
    seed_opt = app->add_option("--seed", seed, "RNG seed");
    app->add_flag("--legacy-formulas", legacy, "Use the legacy closed forms for beta, xi and sigma_xi2");
    app->add_flag("--no-standardize", no_standardize, "Fit views in their original units");
    app->add_flag("--covariates-as-view", covariates_as_view, "Treat covariates as an extra view");
    app->add_flag("--loading-variance-factor", variance_factor, "Scale post-hoc loadings by feature variances");
    app->add_flag("--family-only", family_only, "PCA2Step: family intercepts without site level");
  }

  void apply(RunConfig& c) const {
    if (*r_opt) c.hyper.r = r;
    if (*iters_opt) c.hyper.n_iter = iters;
    if (*burn_opt) c.hyper.n_burn = burn;
    if (*thin_opt) c.hyper.thin = thin;
    if (*seed_opt) c.hyper.seed = seed;
    if (legacy) c.hyper.formulas = OutcomeFormulas::Legacy;
    if (no_standardize) c.hyper.standardize = false;
    if (covariates_as_view) c.fit.covariates_as_view = true;
    if (variance_factor) c.fit.loading_variance_factor = true;
    if (family_only) c.pca.family_only = true;
    if (burn_opt->count() == 0 && *iters_opt && c.hyper.n_burn >= c.hyper.n_iter) c.hyper.n_burn = c.hyper.n_iter / 2;
  }
};

FittedModel fit_with(const RunConfig& c, const MultiViewDataset& train) {
  switch (c.method) {
    case Method::BIPmixed: {
      Hyperparameters h = c.hyper;
      h.random_effects_enabled = true;
      return fit_model(train, h, c.fit);
    }
    case Method::BIP:
      return fit_bip(train, c.hyper, c.fit);
    case Method::PCA2Step:
      return fit_pca2step(train, c.hyper, c.pca);
  }
  throw Error(ErrorKind::ConfigError, "model.method: unsupported");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian integrative multi-view factor analysis with nested random effects"};
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--config", common.config, "JSON configuration file")->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a train/test pair for a benchmark scenario");
  int sim_id = 1, sim_p = 500, sim_signal = 100, sim_cov = 0;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  sim->add_option("--scenario", sim_id, "Scenario 1, 2 or 3")->check(CLI::Range(1, 3));
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--p", sim_p, "Features per view");
  sim->add_option("--signal", sim_signal, "Signal features per view (multiple of 10)");
  sim->add_option("--covariates", sim_cov, "Number of simulated covariates");
  sim->add_option("--out", sim_out, "Output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Run the sampler and write a fitted-model archive");
  std::string fit_data, fit_out, fit_mode, fit_selection, fit_trace;
  ModelFlags fit_flags;
  fit->add_option("--data", fit_data, "Training manifest");
  fit->add_option("--mode", fit_mode, "bipmixed, bip or pca2step");
  fit->add_option("--out", fit_out, "Archive path");
  fit->add_option("--selection", fit_selection, "Write per-feature MPPs to this CSV");
  fit->add_option("--trace", fit_trace, "Write the per-iteration trace to this CSV");
  fit_flags.add(fit);

  // predict
  auto* pred = app.add_subcommand("predict", "Predict outcomes for new subjects");
  std::string pred_model, pred_data, pred_out;
  bool pred_stochastic = false;
  pred->add_option("--model", pred_model, "Fitted-model archive");
  pred->add_option("--data", pred_data, "Test manifest");
  pred->add_option("--out", pred_out, "Predictions CSV");
  pred->add_flag("--stochastic-unseen", pred_stochastic, "Draw unseen family effects instead of using site means");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score predictions and, given a truth file, feature selection");
  std::string eval_pred, eval_data, eval_model, eval_truth, eval_out;
  eval->add_option("--predictions", eval_pred, "Predictions CSV");
  eval->add_option("--data", eval_data, "Test manifest with outcome");
  eval->add_option("--model", eval_model, "Fitted-model archive (for selection metrics)");
  eval->add_option("--truth", eval_truth, "Truth JSON from simulate (for selection metrics)");
  eval->add_option("--out", eval_out, "Metrics CSV (default: standard output)");

  // scenario
  auto* scen = app.add_subcommand("scenario", "Run the simulation benchmark");
  int scen_id = 1, scen_reps = 20, scen_p = 500, scen_signal = 100, scen_workers = 0, scen_cov = 0;
  std::string scen_methods = "bip,bipmixed,pca2step", scen_out;
  ModelFlags scen_flags;
  scen->add_option("--id", scen_id, "Scenario 1, 2 or 3")->check(CLI::Range(1, 3));
  scen->add_option("--replicates", scen_reps, "Number of replicates");
  scen->add_option("--methods", scen_methods, "Comma-separated methods");
  scen->add_option("--p", scen_p, "Features per view");
  scen->add_option("--signal", scen_signal, "Signal features per view (multiple of 10)");
  scen->add_option("--covariates", scen_cov, "Number of simulated covariates");
  scen->add_option("--workers", scen_workers, std::string("Parallel replicates (default: $") + kWorkersEnv + ")");
  scen->add_option("--out", scen_out, "Output directory");
  scen_flags.add(scen);

  // scree
  auto* scree = app.add_subcommand("scree", "Eigenvalues of the standardized data and a suggested rank");
  std::string scree_data;
  scree->add_option("--data", scree_data, "Training manifest")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    common.load();
    RunConfig& c = common.cfg;

    if (*sim) {
      ScenarioSpec spec = ScenarioSpec::preset(sim_id);
      spec.seed = sim_seed;
      spec.p = sim_p;
      spec.n_signal = sim_signal;
      spec.n_covariates = sim_cov;
      const SimulatedData data = gen_dataset(spec);
      const fs::path out = sim_out;
      io::save_manifest(out, "train", data.train);
      io::save_manifest(out, "test", data.test);
      io::save_truth(out / "truth.json", spec, data.truth);
      std::cout << "wrote " << (out / "train.json").string() << ", " << (out / "test.json").string() << ", "
                << (out / "truth.json").string() << '\n';
    } else if (*fit) {
      if (!fit_data.empty()) c.train = fit_data;
      if (!fit_out.empty()) c.fitted = fit_out;
      if (!fit_mode.empty()) c.method = parse_method(fit_mode);
      if (!fit_trace.empty()) c.fit.keep_trace = true;
      fit_flags.apply(c);
      const MultiViewDataset train = io::load_manifest(require_path(c.train, "data.train"));
      const FittedModel fitted = fit_with(c, train);
      const fs::path out = c.fitted.empty() ? fs::path(c.out_dir) / "fit.json" : fs::path(c.fitted);
      io::save_fitted(out, fitted);
      if (!fit_selection.empty()) io::write_selection_csv(fit_selection, fitted, train.feature_names);
      if (!fit_trace.empty()) io::write_trace_csv(fit_trace, fitted.trace);
      std::cout << "wrote " << out.string() << '\n';
    } else if (*pred) {
      if (!pred_model.empty()) c.fitted = pred_model;
      if (!pred_data.empty()) c.test = pred_data;
      if (!pred_out.empty()) c.predictions = pred_out;
      if (pred_stochastic) c.prediction.stochastic_unseen = true;
      const FittedModel fitted = io::load_fitted(require_path(c.fitted, "data.fitted"));
      const MultiViewDataset test = io::load_manifest(require_path(c.test, "data.test"));
      const Eigen::VectorXd y_hat = predict(fitted, test, c.prediction);
      const fs::path out = c.predictions.empty() ? fs::path(c.out_dir) / "predictions.csv" : fs::path(c.predictions);
      io::write_predictions(out, test.site_label, test.family_label, y_hat);
      std::cout << "wrote " << out.string() << '\n';
    } else if (*eval) {
      if (!eval_pred.empty()) c.predictions = eval_pred;
      if (!eval_data.empty()) c.test = eval_data;
      if (!eval_model.empty()) c.fitted = eval_model;
      if (!eval_truth.empty()) c.truth = eval_truth;
      const Eigen::VectorXd y_hat = io::read_predictions(require_path(c.predictions, "data.predictions"));
      const MultiViewDataset test = io::load_manifest(require_path(c.test, "data.test"));
      if (test.outcome.size() == 0) throw Error(ErrorKind::IOError, "test manifest has no outcome");
      std::ostringstream csv;
      csv << "MSE,VarYhat,FPR,FNR,AUC\n" << io::format_double(mse(test.outcome, y_hat)) << ','
          << io::format_double(var_pred(y_hat));
      if (!c.fitted.empty() && !c.truth.empty()) {
        const FittedModel fitted = io::load_fitted(c.fitted);
        std::ifstream tin(c.truth);
        if (!tin) throw Error(ErrorKind::IOError, "cannot open " + c.truth);
        const auto truth = nlohmann::json::parse(tin).at("importance").get<std::vector<std::vector<int>>>();
        if (fitted.method == Method::PCA2Step) {
          csv << ",NA,NA,NA";
        } else {
          double fpr = 0, fnr = 0, area = 0;
          for (std::size_t m = 0; m < truth.size(); ++m) {
            const auto scores = feature_importance(fitted.posterior.mpp_eta.at(m + 1));
            const auto rates = selection_rates(scores, truth[m]);
            fpr += rates.fpr;
            fnr += rates.fnr;
            area += auc(scores, truth[m]);
          }
          const double k = static_cast<double>(truth.size());
          csv << ',' << io::format_double(fpr / k) << ',' << io::format_double(fnr / k) << ','
              << io::format_double(area / k);
        }
      } else {
        csv << ",NA,NA,NA";
      }
      csv << '\n';
      if (eval_out.empty()) {
        std::cout << csv.str();
      } else {
        write_text(eval_out, csv.str());
      }
    } else if (*scen) {
      scen_flags.apply(c);
      ScenarioSpec spec = ScenarioSpec::preset(scen_id);
      spec.p = scen_p;
      spec.n_signal = scen_signal;
      spec.n_covariates = scen_cov;
      spec.seed = c.hyper.seed;
      ScenarioOptions o;
      o.replicates = scen_reps;
      o.methods = parse_methods(scen_methods);
      o.hyper = c.hyper;
      o.fit = c.fit;
      o.pca = c.pca;
      o.workers = scen_workers > 0 ? scen_workers : (c.workers > 0 ? c.workers : default_workers());
      const fs::path out = scen_out.empty() ? fs::path(c.out_dir) : fs::path(scen_out);
      o.out_dir = out / "replicates";
      const ScenarioReport report = run_scenario(spec, o);
      write_text(out / "report.csv", report_csv(report));
      write_text(out / "summary.csv", summary_csv(report));
      write_text(out / "per_view.csv", per_view_csv(report));
      std::cout << summary_csv(report);
    } else if (*scree) {
      MultiViewDataset data = io::load_manifest(scree_data);
      data.validate();
      const ScreeResult s = scree_rank_suggestion(data);
      std::cout << "suggested_r," << s.suggested_r << "\nindex,eigenvalue\n";
      for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
        std::cout << (k + 1) << ',' << io::format_double(s.eigenvalues(k)) << '\n';
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.is_user_error() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
