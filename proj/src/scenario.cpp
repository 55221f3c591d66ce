#include "bipmixed/scenario.hpp"

#include "bipmixed/error.hpp"
#include "bipmixed/rng.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace bipmixed {

MetricsReport evaluate_fit(const FittedModel& fitted, const SimulatedData& data, ImportanceRule rule) {
  MetricsReport r;
  r.method = std::string(to_string(fitted.method));
  const Eigen::VectorXd y_hat = predict(fitted, data.test);
  r.mse = mse(data.test.outcome, y_hat);
  r.var_yhat = var_pred(y_hat);
  if (fitted.method == Method::PCA2Step) return r;

  double fpr = 0, fnr = 0, area = 0;
  int auc_views = 0;
  const std::size_t views = data.truth.importance.size();
  for (std::size_t m = 0; m < views; ++m) {
    const auto scores = feature_importance(fitted.posterior.mpp_eta[m + 1], rule);
    const auto& truth = data.truth.importance[m];
    ViewSelectionMetrics v;
    const auto rates = selection_rates(scores, truth);
    v.fpr = rates.fpr;
    v.fnr = rates.fnr;
    v.auc = auc(scores, truth);
    fpr += v.fpr;
    fnr += v.fnr;
    area += *v.auc;
    ++auc_views;
    r.per_view.push_back(v);
  }
  r.fpr = fpr / static_cast<double>(views);
  r.fnr = fnr / static_cast<double>(views);
  r.auc = area / auc_views;
  return r;
}

namespace {

std::vector<ScenarioRow> run_replicate(const ScenarioSpec& spec, const ScenarioOptions& options, int k) {
  ScenarioSpec rep = spec;
  rep.seed = substream_seed(spec.seed, static_cast<std::uint64_t>(k) + 1);
  const SimulatedData data = gen_dataset(rep);
  Hyperparameters hyper = options.hyper;
  hyper.seed = substream_seed(rep.seed, 1);

  std::vector<ScenarioRow> rows;
  for (Method method : options.methods) {
    FittedModel fitted;
    switch (method) {
      case Method::BIPmixed: {
        Hyperparameters h = hyper;
        h.random_effects_enabled = true;
        fitted = fit_model(data.train, h, options.fit);
        break;
      }
      case Method::BIP:
        fitted = fit_bip(data.train, hyper, options.fit);
        break;
      case Method::PCA2Step:
        fitted = fit_pca2step(data.train, hyper, options.pca);
        break;
    }
    ScenarioRow row{spec.scenario_id, evaluate_fit(fitted, data, options.importance)};
    row.metrics.replicate = k + 1;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

}  // namespace

ScenarioReport run_scenario(const ScenarioSpec& spec, const ScenarioOptions& options) {
  spec.validate();
  if (options.replicates < 1) throw Error(ErrorKind::ConfigError, "scenario.replicates: must be >= 1");
  if (options.methods.empty()) throw Error(ErrorKind::ConfigError, "scenario.methods: empty");
  options.hyper.validate();

  std::vector<std::vector<ScenarioRow>> results(options.replicates);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= options.replicates) return;
      try {
        results[k] = run_replicate(spec, options, k);
        if (options.out_dir) {
          ScenarioReport one{results[k]};
          std::filesystem::create_directories(*options.out_dir);
          std::ofstream(*options.out_dir / ("replicate_" + std::to_string(k + 1) + ".csv")) << report_csv(one);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.replicates;
      }
    }
  };
  const int workers = std::max(1, std::min(options.workers, options.replicates));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  ScenarioReport report;
  for (auto& rows : results) {
    for (auto& row : rows) report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_csv(const ScenarioReport& report) {
  std::ostringstream out;
  out << "scenario,method,replicate,MSE,VarYhat,FPR,FNR,AUC\n";
  for (const auto& row : report.rows) {
    const auto& m = row.metrics;
    out << row.scenario << ',' << m.method << ',' << m.replicate << ',' << fmt(m.mse) << ',' << fmt(m.var_yhat) << ','
        << fmt(m.fpr) << ',' << fmt(m.fnr) << ',' << fmt(m.auc) << '\n';
  }
  return out.str();
}

std::string per_view_csv(const ScenarioReport& report) {
  std::ostringstream out;
  out << "scenario,method,replicate,view,FPR,FNR,AUC\n";
  for (const auto& row : report.rows) {
    for (std::size_t v = 0; v < row.metrics.per_view.size(); ++v) {
      const auto& pv = row.metrics.per_view[v];
      out << row.scenario << ',' << row.metrics.method << ',' << row.metrics.replicate << ',' << (v + 1) << ','
          << fmt(pv.fpr) << ',' << fmt(pv.fnr) << ',' << fmt(pv.auc) << '\n';
    }
  }
  return out.str();
}

std::string summary_csv(const ScenarioReport& report) {
  struct Acc {
    int scenario = 0;
    std::vector<double> mse, var, fpr, fnr, auc;
  };
  std::vector<std::string> order;
  std::map<std::string, Acc> by_method;
  for (const auto& row : report.rows) {
    const auto& m = row.metrics;
    if (!by_method.count(m.method)) order.push_back(m.method);
    Acc& a = by_method[m.method];
    a.scenario = row.scenario;
    a.mse.push_back(m.mse);
    a.var.push_back(m.var_yhat);
    if (m.fpr) a.fpr.push_back(*m.fpr);
    if (m.fnr) a.fnr.push_back(*m.fnr);
    if (m.auc) a.auc.push_back(*m.auc);
  }
  auto mean_sd = [](const std::vector<double>& v) -> std::string {
    if (v.empty()) return "NA,NA";
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return fmt(mean) + ',' + fmt(sd);
  };
  std::ostringstream out;
  out << "scenario,method,replicates,MSE_mean,MSE_sd,VarYhat_mean,VarYhat_sd,FPR_mean,FPR_sd,FNR_mean,FNR_sd,"
         "AUC_mean,AUC_sd,sd_defined\n";
  for (const auto& name : order) {
    const Acc& a = by_method[name];
    out << a.scenario << ',' << name << ',' << a.mse.size() << ',' << mean_sd(a.mse) << ',' << mean_sd(a.var) << ','
        << mean_sd(a.fpr) << ',' << mean_sd(a.fnr) << ',' << mean_sd(a.auc) << ',' << (a.mse.size() > 1 ? 1 : 0)
        << '\n';
  }
  return out.str();
}

}  // namespace bipmixed
