#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bipmixed {

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat);
/// Sample variance (n - 1 denominator); 0 for a single prediction.
double var_pred(const Eigen::VectorXd& y_hat);

struct SelectionRates {
  double fpr = 0.0;
  double fnr = 0.0;
};

/// A feature is selected when its score exceeds `threshold`.
SelectionRates selection_rates(std::span<const double> scores, std::span<const int> truth, double threshold = 0.5);

/// Mann-Whitney AUC with ties counted as one half.
double auc(std::span<const double> scores, std::span<const int> truth);

enum class ImportanceRule {
  MaxOverComponents,  // max_l MPP(η_lj)
  AnyComponent,       // 1 − Π_l (1 − MPP(η_lj))
};

/// Collapses an r x p matrix of MPPs to one score per feature.
std::vector<double> feature_importance(const Eigen::MatrixXd& mpp_eta, ImportanceRule rule = ImportanceRule::MaxOverComponents);

struct ViewSelectionMetrics {
  double fpr = 0.0;
  double fnr = 0.0;
  std::optional<double> auc;
};

struct MetricsReport {
  std::string method;
  int replicate = 0;
  double mse = 0.0;
  double var_yhat = 0.0;
  /// View-averaged selection metrics; absent for methods that do not select.
  std::optional<double> fpr;
  std::optional<double> fnr;
  std::optional<double> auc;
  std::vector<ViewSelectionMetrics> per_view;
};

}  // namespace bipmixed
