#include "bipmixed/baselines.hpp"

#include "bipmixed/error.hpp"
#include "bipmixed/mcmc.hpp"

#include <Eigen/SVD>

namespace bipmixed {

FittedModel fit_bip(const MultiViewDataset& train, Hyperparameters hyper, const FitOptions& options) {
  hyper.random_effects_enabled = false;
  return fit_model(train, hyper, options);
}

PrincipalComponents principal_components(const Eigen::MatrixXd& x, int k) {
  if (k < 1 || k > std::min(x.rows(), x.cols())) {
    throw Error(ErrorKind::BadDimension, "principal components: k out of range");
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  PrincipalComponents pc;
  pc.directions = svd.matrixV().leftCols(k);
  for (int c = 0; c < k; ++c) {
    Eigen::Index arg = 0;
    pc.directions.col(c).cwiseAbs().maxCoeff(&arg);
    if (pc.directions(arg, c) < 0) pc.directions.col(c) *= -1.0;
  }
  pc.scores = centered * pc.directions;
  const double denom = static_cast<double>(std::max<Eigen::Index>(x.rows() - 1, 1));
  pc.variances = svd.singularValues().head(k).array().square() / denom;
  return pc;
}

FittedModel fit_pca2step(const MultiViewDataset& train_in, Hyperparameters hyper, const Pca2StepOptions& options) {
  hyper.random_effects_enabled = true;
  hyper.standardize = true;
  hyper.validate();
  MultiViewDataset train = train_in;
  train.validate();

  FittedModel fitted;
  fitted.method = Method::PCA2Step;
  auto [scaled, scaler] = standardize_views(train);
  fitted.scaler = std::move(scaler);

  Eigen::Index total = 0;
  for (const auto& v : scaled.views) total += v.cols();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(scaled.num_rows()), total);
  Eigen::Index offset = 0;
  for (const auto& v : scaled.views) {
    x.middleCols(offset, v.cols()) = v;
    offset += v.cols();
  }
  // Standardized columns are already centered, so scores are x * directions.
  const PrincipalComponents pc = principal_components(x, options.components);
  fitted.pca_directions = pc.directions;

  Eigen::MatrixXd w = pc.scores;
  if (hyper.covariates_in_outcome && scaled.covariates && scaled.covariates->cols() > 0) {
    w.conservativeResize(Eigen::NoChange, pc.scores.cols() + scaled.covariates->cols());
    w.rightCols(scaled.covariates->cols()) = *scaled.covariates;
  }

  std::vector<std::string> sites = scaled.site_label;
  if (options.family_only) {
    fitted.single_site = true;
    std::fill(sites.begin(), sites.end(), std::string("all"));
  }
  const HierarchyIndex h = HierarchyIndex::build(sites, scaled.family_label);
  for (const auto& s : h.sites()) fitted.site_ids.push_back(s.id);
  for (const auto& f : h.families()) {
    fitted.family_ids.push_back(f.id);
    fitted.family_site.push_back(f.site);
  }

  fitted.hyper = hyper;
  fitted.posterior = run_outcome_chain(scaled.outcome, &w, h, hyper).posterior;
  return fitted;
}

}  // namespace bipmixed
