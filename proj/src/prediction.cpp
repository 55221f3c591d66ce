#include "bipmixed/prediction.hpp"

#include "bipmixed/error.hpp"
#include "bipmixed/rng.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace bipmixed {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::BIPmixed:
      return "BIPmixed";
    case Method::BIP:
      return "BIP";
    case Method::PCA2Step:
      return "PCA2Step";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "bipmixed") return Method::BIPmixed;
  if (lower == "bip") return Method::BIP;
  if (lower == "pca2step") return Method::PCA2Step;
  throw Error(ErrorKind::ConfigError, "method: unknown method '" + std::string(name) + "'");
}

Eigen::MatrixXd estimate_loadings(const Eigen::MatrixXd& U_bar, const ViewSelection& selection,
                                  const Eigen::MatrixXd& x, const Eigen::VectorXd& feat_var_hat,
                                  bool variance_factor) {
  const int r = static_cast<int>(U_bar.cols());
  if (x.rows() != U_bar.rows()) throw Error(ErrorKind::DimensionMismatch, "loading estimate: row counts differ");
  if (selection.eta.rows() != r || selection.eta.cols() != x.cols() || feat_var_hat.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "loading estimate: selection shape");
  }
  const Eigen::MatrixXd gram = U_bar.transpose() * U_bar;
  const Eigen::MatrixXd cross = U_bar.transpose() * x;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::vector<int> idx;
    for (int l = 0; l < r; ++l) {
      if (selection.gamma(l) && selection.eta(l, j)) idx.push_back(l);
    }
    if (idx.empty()) continue;
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd g(k, k);
    Eigen::VectorXd c(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      c(a) = cross(idx[a], j);
      for (Eigen::Index b = 0; b < k; ++b) g(a, b) = gram(idx[a], idx[b]);
    }
    g.diagonal().array() += 1.0;
    Eigen::VectorXd est = g.llt().solve(c);
    if (variance_factor) est *= feat_var_hat(j);
    for (Eigen::Index a = 0; a < k; ++a) out(idx[a], j) = est(a);
  }
  return out;
}

Eigen::MatrixXd estimate_u_new_rows(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& feat_var_hat,
                                    const Eigen::MatrixXd& x) {
  if (loadings.cols() != x.cols() || feat_var_hat.size() != x.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "latent estimate: feature counts differ");
  }
  const Eigen::MatrixXd scaled = loadings * feat_var_hat.cwiseInverse().asDiagonal();
  Eigen::MatrixXd precision = scaled * loadings.transpose();
  precision.diagonal().array() += 1.0;
  // Rows with all-zero loadings decouple and get û_l = 0.
  return precision.llt().solve(scaled * x.transpose()).transpose();
}

Eigen::VectorXd estimate_u_new(const Eigen::MatrixXd& loadings, const Eigen::VectorXd& feat_var_hat,
                               const Eigen::VectorXd& x_row) {
  return estimate_u_new_rows(loadings, feat_var_hat, x_row.transpose()).row(0).transpose();
}

namespace {

MultiViewDataset with_covariates_as_view(const MultiViewDataset& data) {
  MultiViewDataset out = data;
  if (out.covariates) {
    out.views.push_back(*out.covariates);
    if (!out.feature_names.empty()) {
      std::vector<std::string> names;
      for (Eigen::Index k = 0; k < out.covariates->cols(); ++k) names.push_back("w" + std::to_string(k + 1));
      out.feature_names.push_back(std::move(names));
    }
    out.covariates.reset();
  }
  return out;
}

Eigen::Index test_rows(const MultiViewDataset& test) {
  if (!test.views.empty()) return test.views[0].rows();
  if (test.covariates) return test.covariates->rows();
  return static_cast<Eigen::Index>(test.site_label.size());
}

}  // namespace

FittedModel fit_model(const MultiViewDataset& train_in, const Hyperparameters& hyper, const FitOptions& options) {
  hyper.validate();
  MultiViewDataset train = options.covariates_as_view ? with_covariates_as_view(train_in) : train_in;
  train.validate();

  FittedModel fitted;
  fitted.method = hyper.random_effects_enabled ? Method::BIPmixed : Method::BIP;
  fitted.hyper = hyper;
  fitted.options = options;
  if (hyper.standardize) {
    auto [scaled, scaler] = standardize_views(train);
    train = std::move(scaled);
    fitted.scaler = std::move(scaler);
  } else {
    std::vector<Eigen::Index> cols;
    for (const auto& v : train.views) cols.push_back(v.cols());
    fitted.scaler = Scaler::identity(cols, static_cast<Eigen::Index>(train.num_covariates()));
  }

  const HierarchyIndex h = HierarchyIndex::build(train.site_label, train.family_label);
  for (const auto& s : h.sites()) fitted.site_ids.push_back(s.id);
  for (const auto& f : h.families()) {
    fitted.family_ids.push_back(f.id);
    fitted.family_site.push_back(f.site);
  }

  ChainResult chain = run_chain(train, h, hyper, options.keep_trace);
  fitted.posterior = std::move(chain.posterior);
  fitted.trace = std::move(chain.trace);
  const PosteriorSummary& post = fitted.posterior;

  Eigen::VectorXd x0 = train.outcome;
  if (hyper.random_effects_enabled) {
    x0 -= h.expand_family(post.theta_hat);
  } else {
    x0.array() -= post.mu_hat;
  }
  const bool use_w = hyper.covariates_in_outcome && train.covariates && train.covariates->cols() > 0;
  if (use_w) x0 -= *train.covariates * post.beta_hat;

  double total = 0.0;
  for (const auto& m : post.registry) total += m.frequency;
  for (const auto& m : post.registry) {
    ModelLoadings ml;
    ml.hash = m.hash;
    ml.weight = m.frequency / total;
    for (std::size_t v = 1; v < m.selection.size(); ++v) {
      ml.views.push_back(estimate_loadings(post.U_bar, m.selection[v], train.views[v - 1], post.feat_var_hat[v],
                                           options.loading_variance_factor));
    }
    ml.alpha = estimate_loadings(post.U_bar, m.selection[0], x0, post.feat_var_hat[0], options.loading_variance_factor)
                   .col(0);
    fitted.models.push_back(std::move(ml));
  }
  return fitted;
}

Eigen::MatrixXd prepared_features(const FittedModel& fitted, const MultiViewDataset& test_in) {
  const MultiViewDataset test = fitted.options.covariates_as_view ? with_covariates_as_view(test_in) : test_in;
  if (test.views.size() != fitted.num_views()) {
    throw Error(ErrorKind::DimensionMismatch, "test data has " + std::to_string(test.views.size()) +
                                                  " views, model expects " + std::to_string(fitted.num_views()));
  }
  const Eigen::Index n = test_rows(test);
  Eigen::Index total = 0;
  for (const auto& v : test.views) total += v.cols();
  Eigen::MatrixXd x(n, total);
  Eigen::Index offset = 0;
  for (std::size_t m = 0; m < test.views.size(); ++m) {
    if (test.views[m].rows() != n) throw Error(ErrorKind::DimensionMismatch, "test views differ in row count");
    if (test.views[m].cols() != fitted.scaler.views[m].mean.size()) {
      throw Error(ErrorKind::DimensionMismatch, "test view " + std::to_string(m + 1) + " feature count differs");
    }
    x.middleCols(offset, test.views[m].cols()) = fitted.scaler.apply_view(m, test.views[m]);
    offset += test.views[m].cols();
  }
  return x;
}

Eigen::VectorXd predicted_intercepts(const FittedModel& fitted, const std::vector<std::string>& site_label,
                                     const std::vector<std::string>& family_label,
                                     const PredictionOptions& options) {
  if (site_label.size() != family_label.size()) {
    throw Error(ErrorKind::LengthMismatch, "site and family label vectors differ in length");
  }
  const auto n = static_cast<Eigen::Index>(site_label.size());
  const PosteriorSummary& post = fitted.posterior;
  if (!fitted.hyper.random_effects_enabled) return Eigen::VectorXd::Constant(n, post.mu_hat);

  Rng rng(options.seed);
  std::map<std::string, int> sites, families;
  for (std::size_t s = 0; s < fitted.site_ids.size(); ++s) sites.emplace(fitted.site_ids[s], static_cast<int>(s));
  for (std::size_t f = 0; f < fitted.family_ids.size(); ++f) families.emplace(fitted.family_ids[f], static_cast<int>(f));
  std::map<std::string, double> drawn;

  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (auto it = families.find(family_label[i]); it != families.end()) {
      out(i) = post.theta_hat(it->second);
      continue;
    }
    int s = 0;
    if (!fitted.single_site) {
      auto it = sites.find(site_label[i]);
      if (it == sites.end()) throw Error(ErrorKind::UnknownSite, "site '" + site_label[i] + "' was not in training");
      s = it->second;
    }
    if (!options.stochastic_unseen) {
      out(i) = post.xi_hat(s);
      continue;
    }
    // One draw per unseen family, shared by its members.
    auto [pos, inserted] = drawn.emplace(family_label[i], 0.0);
    if (inserted) pos->second = rng.normal(post.xi_hat(s), std::sqrt(post.sigma_theta2[s].mean));
    out(i) = pos->second;
  }
  return out;
}

namespace {

Eigen::VectorXd fixed_part(const FittedModel& fitted, const MultiViewDataset& test, Eigen::Index n) {
  const bool use_w = fitted.hyper.covariates_in_outcome && !fitted.options.covariates_as_view &&
                     fitted.posterior.beta_hat.size() > 0 && fitted.method != Method::PCA2Step;
  if (!use_w) return Eigen::VectorXd::Zero(n);
  if (!test.covariates) throw Error(ErrorKind::DimensionMismatch, "model uses covariates but test data has none");
  const Eigen::MatrixXd w = fitted.scaler.apply_covariates(*test.covariates);
  if (w.rows() != n || w.cols() != fitted.posterior.beta_hat.size()) {
    throw Error(ErrorKind::DimensionMismatch, "test covariate shape");
  }
  return w * fitted.posterior.beta_hat;
}

Eigen::VectorXd latent_part(const FittedModel& fitted, const ModelLoadings& model, const Eigen::MatrixXd& x) {
  Eigen::Index total = 0;
  for (const auto& a : model.views) total += a.cols();
  const Eigen::Index r = model.alpha.size();
  Eigen::MatrixXd stacked(r, total);
  Eigen::VectorXd feat_var(total);
  Eigen::Index offset = 0;
  for (std::size_t m = 0; m < model.views.size(); ++m) {
    stacked.middleCols(offset, model.views[m].cols()) = model.views[m];
    feat_var.segment(offset, model.views[m].cols()) = fitted.posterior.feat_var_hat[m + 1];
    offset += model.views[m].cols();
  }
  return estimate_u_new_rows(stacked, feat_var, x) * model.alpha;
}

}  // namespace

Eigen::VectorXd predict_single_model(const FittedModel& fitted, std::size_t index, const MultiViewDataset& test,
                                     const PredictionOptions& options) {
  if (index >= fitted.models.size()) throw Error(ErrorKind::EmptyModel, "no registered model at that index");
  const Eigen::MatrixXd x = prepared_features(fitted, test);
  return latent_part(fitted, fitted.models[index], x) + fixed_part(fitted, test, x.rows()) +
         predicted_intercepts(fitted, test.site_label, test.family_label, options);
}

Eigen::VectorXd predict_bma(const FittedModel& fitted, const MultiViewDataset& test, const PredictionOptions& options) {
  if (fitted.models.empty()) throw Error(ErrorKind::EmptyModel, "model registry is empty");
  const Eigen::MatrixXd x = prepared_features(fitted, test);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(x.rows());
  for (const auto& model : fitted.models) y += model.weight * latent_part(fitted, model, x);
  return y + fixed_part(fitted, test, x.rows()) +
         predicted_intercepts(fitted, test.site_label, test.family_label, options);
}

Eigen::VectorXd predict(const FittedModel& fitted, const MultiViewDataset& test, const PredictionOptions& options) {
  if (fitted.method != Method::PCA2Step) return predict_bma(fitted, test, options);
  if (!fitted.pca_directions) throw Error(ErrorKind::EmptyModel, "PCA2Step model has no directions");
  const Eigen::MatrixXd x = prepared_features(fitted, test);
  const Eigen::MatrixXd scores = x * *fitted.pca_directions;
  const Eigen::Index k = scores.cols();
  const Eigen::VectorXd& beta = fitted.posterior.beta_hat;
  Eigen::VectorXd y = scores * beta.head(k);
  if (beta.size() > k) {
    if (!test.covariates) throw Error(ErrorKind::DimensionMismatch, "model uses covariates but test data has none");
    y += fitted.scaler.apply_covariates(*test.covariates) * beta.tail(beta.size() - k);
  }
  return y + predicted_intercepts(fitted, test.site_label, test.family_label, options);
}

}  // namespace bipmixed
