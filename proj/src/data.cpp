#include "bipmixed/data.hpp"

#include "bipmixed/error.hpp"

#include <algorithm>
#include <cmath>

namespace bipmixed {

namespace {

void require_rows(Eigen::Index rows, std::size_t n, const std::string& what) {
  if (static_cast<std::size_t>(rows) != n) {
    throw Error(ErrorKind::DimensionMismatch,
                what + " has " + std::to_string(rows) + " rows, expected " + std::to_string(n));
  }
}

}  // namespace

void MultiViewDataset::validate() {
  const std::size_t n = num_rows();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "dataset has no rows");
  for (std::size_t m = 0; m < views.size(); ++m) {
    require_rows(views[m].rows(), n, "view " + std::to_string(m + 1));
    if (!views[m].allFinite()) {
      throw Error(ErrorKind::DimensionMismatch, "view " + std::to_string(m + 1) + " has non-finite values");
    }
  }
  if (covariates) {
    require_rows(covariates->rows(), n, "covariates");
    if (!covariates->allFinite()) throw Error(ErrorKind::DimensionMismatch, "covariates have non-finite values");
  }
  if (!outcome.allFinite()) throw Error(ErrorKind::DimensionMismatch, "outcome has non-finite values");
  if (site_label.size() != n || family_label.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "label vectors must have one entry per row");
  }
  // Nesting check; throws CrossSiteFamily.
  (void)HierarchyIndex::build(site_label, family_label);

  if (feature_names.empty()) feature_names.resize(views.size());
  if (feature_names.size() != views.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature_names must have one list per view");
  }
  for (std::size_t m = 0; m < views.size(); ++m) {
    auto& names = feature_names[m];
    if (names.empty()) {
      for (Eigen::Index j = 0; j < views[m].cols(); ++j) {
        names.push_back("v" + std::to_string(m + 1) + "_f" + std::to_string(j + 1));
      }
    }
    if (static_cast<Eigen::Index>(names.size()) != views[m].cols()) {
      throw Error(ErrorKind::DimensionMismatch, "view " + std::to_string(m + 1) + " feature name count");
    }
  }
}

HierarchyIndex HierarchyIndex::build(const std::vector<std::string>& site_label,
                                     const std::vector<std::string>& family_label) {
  if (site_label.size() != family_label.size()) {
    throw Error(ErrorKind::LengthMismatch, "site and family label vectors differ in length");
  }
  if (site_label.empty()) throw Error(ErrorKind::EmptyInput, "no rows");

  HierarchyIndex h;
  h.row_family_.resize(site_label.size());
  for (std::size_t i = 0; i < site_label.size(); ++i) {
    auto [sit, site_new] = h.site_lookup_.try_emplace(site_label[i], h.num_sites());
    if (site_new) h.sites_.push_back({site_label[i], {}});
    const int s = sit->second;

    auto [fit, family_new] = h.family_lookup_.try_emplace(family_label[i], h.num_families());
    if (family_new) {
      h.families_.push_back({family_label[i], s, {}});
      h.sites_[s].families.push_back(fit->second);
    }
    const int f = fit->second;
    if (h.families_[f].site != s) {
      throw Error(ErrorKind::CrossSiteFamily, "family '" + family_label[i] + "' appears under sites '" +
                                                  h.sites_[h.families_[f].site].id + "' and '" +
                                                  site_label[i] + "'");
    }
    h.families_[f].rows.push_back(static_cast<int>(i));
    h.row_family_[i] = f;
  }
  return h;
}

std::optional<int> HierarchyIndex::find_site(const std::string& id) const {
  auto it = site_lookup_.find(id);
  if (it == site_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> HierarchyIndex::find_family(const std::string& id) const {
  auto it = family_lookup_.find(id);
  if (it == family_lookup_.end()) return std::nullopt;
  return it->second;
}

Eigen::VectorXd HierarchyIndex::expand_family(const Eigen::VectorXd& per_family) const {
  Eigen::VectorXd out(num_rows());
  for (int i = 0; i < num_rows(); ++i) out(i) = per_family(row_family_[i]);
  return out;
}

Eigen::VectorXd HierarchyIndex::expand_site(const Eigen::VectorXd& per_site) const {
  Eigen::VectorXd out(num_rows());
  for (int i = 0; i < num_rows(); ++i) out(i) = per_site(site_of_row(i));
  return out;
}

ColumnScaling fit_columns(const Eigen::MatrixXd& x, int view) {
  const Eigen::Index n = x.rows();
  if (n < 2) throw Error(ErrorKind::EmptyInput, "standardization needs at least two rows");
  ColumnScaling s;
  s.mean = x.colwise().mean().transpose();
  s.sd.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double ss = (x.col(j).array() - s.mean(j)).square().sum();
    s.sd(j) = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(s.sd(j) > 0.0)) {
      throw Error(ErrorKind::ConstantColumn, "view " + std::to_string(view) + " column " + std::to_string(j));
    }
  }
  return s;
}

Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& x, const ColumnScaling& s) {
  if (x.cols() != s.mean.size()) {
    throw Error(ErrorKind::DimensionMismatch, "column count " + std::to_string(x.cols()) +
                                                  " does not match scaler (" + std::to_string(s.mean.size()) + ")");
  }
  return ((x.rowwise() - s.mean.transpose()).array().rowwise() / s.sd.transpose().array()).matrix();
}

namespace {

Eigen::MatrixXd unscale_columns(const Eigen::MatrixXd& z, const ColumnScaling& s) {
  return ((z.array().rowwise() * s.sd.transpose().array()).matrix()).rowwise() + s.mean.transpose();
}

}  // namespace

Scaler Scaler::identity(const std::vector<Eigen::Index>& view_cols, Eigen::Index covariate_cols) {
  Scaler s;
  for (auto p : view_cols) s.views.push_back({Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)});
  if (covariate_cols > 0) {
    s.covariates = ColumnScaling{Eigen::VectorXd::Zero(covariate_cols), Eigen::VectorXd::Ones(covariate_cols)};
  }
  return s;
}

Eigen::MatrixXd Scaler::apply_view(std::size_t m, const Eigen::MatrixXd& x) const {
  if (m >= views.size()) throw Error(ErrorKind::DimensionMismatch, "scaler has no view " + std::to_string(m + 1));
  return scale_columns(x, views[m]);
}

Eigen::MatrixXd Scaler::apply_covariates(const Eigen::MatrixXd& w) const {
  if (!covariates) throw Error(ErrorKind::DimensionMismatch, "scaler was fitted without covariates");
  return scale_columns(w, *covariates);
}

MultiViewDataset Scaler::apply(const MultiViewDataset& data) const {
  if (data.views.size() != views.size()) {
    throw Error(ErrorKind::DimensionMismatch, "view count does not match scaler");
  }
  MultiViewDataset out = data;
  for (std::size_t m = 0; m < views.size(); ++m) out.views[m] = apply_view(m, data.views[m]);
  if (data.covariates) out.covariates = apply_covariates(*data.covariates);
  return out;
}

MultiViewDataset Scaler::inverse(const MultiViewDataset& data) const {
  MultiViewDataset out = data;
  for (std::size_t m = 0; m < views.size(); ++m) out.views[m] = unscale_columns(data.views[m], views[m]);
  if (data.covariates && covariates) out.covariates = unscale_columns(*data.covariates, *covariates);
  return out;
}

std::pair<MultiViewDataset, Scaler> standardize_views(const MultiViewDataset& data) {
  Scaler scaler;
  for (std::size_t m = 0; m < data.views.size(); ++m) {
    scaler.views.push_back(fit_columns(data.views[m], static_cast<int>(m + 1)));
  }
  if (data.covariates) scaler.covariates = fit_columns(*data.covariates, 0);
  return {scaler.apply(data), std::move(scaler)};
}

int suggest_rank(const Eigen::VectorXd& eigenvalues, int floor_rank, double plateau_tol) {
  const int total = static_cast<int>(eigenvalues.size());
  if (total == 0) return floor_rank;
  const double lead = eigenvalues(0);
  for (int k = std::max(floor_rank, 1); k < total; ++k) {
    // k is 1-based: compare lambda_k with lambda_{k+1}.
    const double drop = (eigenvalues(k - 1) - eigenvalues(k)) / lead;
    if (drop < plateau_tol) return k;
  }
  return std::max(floor_rank, total);
}

ScreeResult scree_rank_suggestion(const MultiViewDataset& data, double plateau_tol) {
  const Eigen::Index n = static_cast<Eigen::Index>(data.num_rows());
  Eigen::Index total = 1 + static_cast<Eigen::Index>(data.num_covariates());
  for (const auto& v : data.views) total += v.cols();

  Eigen::MatrixXd z(n, total);
  Eigen::Index col = 0;
  for (std::size_t m = 0; m < data.views.size(); ++m) {
    const auto& v = data.views[m];
    z.middleCols(col, v.cols()) = scale_columns(v, fit_columns(v, static_cast<int>(m + 1)));
    col += v.cols();
  }
  {
    Eigen::MatrixXd y = data.outcome;
    z.col(col++) = scale_columns(y, fit_columns(y, 0)).col(0);
  }
  if (data.covariates) {
    z.middleCols(col, data.covariates->cols()) = scale_columns(*data.covariates, fit_columns(*data.covariates, 0));
  }

  // The nonzero spectrum of Z^T Z equals that of Z Z^T; decompose the smaller.
  const double denom = static_cast<double>(n - 1);
  Eigen::MatrixXd gram = (total <= n) ? Eigen::MatrixXd(z.transpose() * z) : Eigen::MatrixXd(z * z.transpose());
  gram /= denom;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  Eigen::VectorXd asc = eig.eigenvalues();

  ScreeResult out;
  out.eigenvalues = Eigen::VectorXd::Zero(total);
  for (Eigen::Index k = 0; k < asc.size(); ++k) out.eigenvalues(k) = std::max(0.0, asc(asc.size() - 1 - k));
  out.suggested_r = suggest_rank(out.eigenvalues, static_cast<int>(data.num_views()) + 1, plateau_tol);
  return out;
}

}  // namespace bipmixed
