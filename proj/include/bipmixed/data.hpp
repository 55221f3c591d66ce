#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace bipmixed {

/// M observed views plus outcome, covariates and the site/family labels that
/// define the nested random-effect structure. Rows are subjects.
struct MultiViewDataset {
  std::vector<Eigen::MatrixXd> views;
  std::optional<Eigen::MatrixXd> covariates;
  Eigen::VectorXd outcome;
  std::vector<std::string> site_label;
  std::vector<std::string> family_label;
  std::vector<std::vector<std::string>> feature_names;

  std::size_t num_rows() const { return static_cast<std::size_t>(outcome.size()); }
  std::size_t num_views() const { return views.size(); }
  std::size_t num_covariates() const { return covariates ? covariates->cols() : 0; }

  /// Row counts agree, labels are nested, values are finite. Fills default
  /// feature names ("v{m}_f{j}", 1-based) when absent.
  void validate();
};

/// Site -> family -> row partition. Sites and families are numbered in order
/// of first appearance, which keeps every downstream vector deterministic.
class HierarchyIndex {
 public:
  struct Site {
    std::string id;
    std::vector<int> families;
  };
  struct Family {
    std::string id;
    int site = 0;
    std::vector<int> rows;
  };

  static HierarchyIndex build(const std::vector<std::string>& site_label,
                              const std::vector<std::string>& family_label);

  int num_sites() const { return static_cast<int>(sites_.size()); }
  int num_families() const { return static_cast<int>(families_.size()); }
  int num_rows() const { return static_cast<int>(row_family_.size()); }

  const std::vector<Site>& sites() const { return sites_; }
  const std::vector<Family>& families() const { return families_; }
  const Site& site(int s) const { return sites_[s]; }
  const Family& family(int f) const { return families_[f]; }

  int families_in_site(int s) const { return static_cast<int>(sites_[s].families.size()); }
  int family_size(int f) const { return static_cast<int>(families_[f].rows.size()); }
  int family_of_row(int i) const { return row_family_[i]; }
  int site_of_row(int i) const { return families_[row_family_[i]].site; }

  std::optional<int> find_site(const std::string& id) const;
  std::optional<int> find_family(const std::string& id) const;

  /// Z θ: expands per-family values onto rows.
  Eigen::VectorXd expand_family(const Eigen::VectorXd& per_family) const;
  /// Expands per-site values onto rows.
  Eigen::VectorXd expand_site(const Eigen::VectorXd& per_site) const;

 private:
  std::vector<Site> sites_;
  std::vector<Family> families_;
  std::vector<int> row_family_;
  std::map<std::string, int> site_lookup_;
  std::map<std::string, int> family_lookup_;
};

struct ColumnScaling {
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
};

/// Per-column (mean, SD) for every view and the covariates. Fitted on the
/// training set and reused unchanged on test data.
struct Scaler {
  std::vector<ColumnScaling> views;
  std::optional<ColumnScaling> covariates;

  /// Identity scaling with the given shapes.
  static Scaler identity(const std::vector<Eigen::Index>& view_cols, Eigen::Index covariate_cols);

  MultiViewDataset apply(const MultiViewDataset& data) const;
  MultiViewDataset inverse(const MultiViewDataset& data) const;
  Eigen::MatrixXd apply_view(std::size_t m, const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd apply_covariates(const Eigen::MatrixXd& w) const;
};

/// Column mean and sample SD (n - 1). Throws ConstantColumn naming `view`
/// and the 0-based column index when an SD is zero.
ColumnScaling fit_columns(const Eigen::MatrixXd& x, int view);
Eigen::MatrixXd scale_columns(const Eigen::MatrixXd& x, const ColumnScaling& s);

/// Standardizes views and covariates; the outcome is left in its own units.
std::pair<MultiViewDataset, Scaler> standardize_views(const MultiViewDataset& data);

struct ScreeResult {
  Eigen::VectorXd eigenvalues;  // descending
  int suggested_r = 0;
};

inline constexpr double kScreePlateauTolerance = 0.01;

/// Eigenvalues of the sample covariance of the column-wise concatenation of
/// standardized views, outcome and covariates. The suggestion is the
/// smallest k >= M + 1 at which the successive drop relative to the leading
/// eigenvalue falls below `plateau_tol`.
ScreeResult scree_rank_suggestion(const MultiViewDataset& data,
                                  double plateau_tol = kScreePlateauTolerance);

/// Same rule applied to an already computed descending spectrum.
int suggest_rank(const Eigen::VectorXd& eigenvalues, int floor_rank, double plateau_tol);

}  // namespace bipmixed
