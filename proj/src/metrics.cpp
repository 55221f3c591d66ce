#include "bipmixed/metrics.hpp"

#include "bipmixed/error.hpp"

#include <algorithm>
#include <numeric>

namespace bipmixed {

double mse(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat) {
  if (y.size() != y_hat.size()) throw Error(ErrorKind::LengthMismatch, "outcome and prediction lengths differ");
  if (y.size() == 0) throw Error(ErrorKind::EmptyInput, "no predictions to score");
  return (y - y_hat).squaredNorm() / static_cast<double>(y.size());
}

double var_pred(const Eigen::VectorXd& y_hat) {
  if (y_hat.size() == 0) throw Error(ErrorKind::EmptyInput, "no predictions to score");
  if (y_hat.size() == 1) return 0.0;
  const double m = y_hat.mean();
  return (y_hat.array() - m).square().sum() / static_cast<double>(y_hat.size() - 1);
}

namespace {

void check_classes(std::span<const double> scores, std::span<const int> truth, std::size_t& pos, std::size_t& neg) {
  if (scores.size() != truth.size()) throw Error(ErrorKind::LengthMismatch, "scores and truth lengths differ");
  pos = static_cast<std::size_t>(std::count_if(truth.begin(), truth.end(), [](int t) { return t != 0; }));
  neg = truth.size() - pos;
  if (pos == 0) throw Error(ErrorKind::UndefinedRate, "truth has no positive features");
  if (neg == 0) throw Error(ErrorKind::UndefinedRate, "truth has no negative features");
}

}  // namespace

SelectionRates selection_rates(std::span<const double> scores, std::span<const int> truth, double threshold) {
  std::size_t pos = 0, neg = 0;
  check_classes(scores, truth, pos, neg);
  std::size_t fp = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool selected = scores[i] > threshold;
    if (truth[i] && !selected) ++fn;
    if (!truth[i] && selected) ++fp;
  }
  return {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(fn) / static_cast<double>(pos)};
}

double auc(std::span<const double> scores, std::span<const int> truth) {
  std::size_t pos = 0, neg = 0;
  check_classes(scores, truth, pos, neg);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive mid-ranks (1-based).
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (truth[order[k]]) rank_sum += mid;
    }
    i = j + 1;
  }
  const double np = static_cast<double>(pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(neg));
}

std::vector<double> feature_importance(const Eigen::MatrixXd& mpp_eta, ImportanceRule rule) {
  std::vector<double> out(static_cast<std::size_t>(mpp_eta.cols()), 0.0);
  for (Eigen::Index j = 0; j < mpp_eta.cols(); ++j) {
    if (mpp_eta.rows() == 0) continue;
    if (rule == ImportanceRule::MaxOverComponents) {
      out[j] = mpp_eta.col(j).maxCoeff();
    } else {
      out[j] = 1.0 - (1.0 - mpp_eta.col(j).array()).prod();
    }
  }
  return out;
}

}  // namespace bipmixed
