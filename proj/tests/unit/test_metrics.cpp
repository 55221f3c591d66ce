#include "bipmixed/error.hpp"
#include "bipmixed/metrics.hpp"

#include "../oracles.hpp"

#include <doctest.h>

using namespace bipmixed;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IOError;
}

}  // namespace

TEST_CASE("mse and prediction variance") {
  CHECK(mse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 4)) == doctest::Approx(1.0 / 3.0));
  CHECK(var_pred(Eigen::Vector3d(1, 2, 3)) == doctest::Approx(1.0));
  CHECK(var_pred(Eigen::VectorXd::Constant(1, 5.0)) == 0.0);
  CHECK(kind_of([] { mse(Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 3)); }) == ErrorKind::LengthMismatch);
  CHECK(kind_of([] { mse(Eigen::VectorXd(0), Eigen::VectorXd(0)); }) == ErrorKind::EmptyInput);
}

TEST_CASE("selection rates at the default threshold") {
  const std::vector<double> s{0.9, 0.2, 0.6, 0.1};
  const std::vector<int> t{1, 1, 0, 0};
  const auto r = selection_rates(s, t);
  CHECK(r.fpr == doctest::Approx(0.5));
  CHECK(r.fnr == doctest::Approx(0.5));
  const std::vector<double> at{0.5, 0.5};
  const std::vector<int> mixed{1, 0};
  CHECK(selection_rates(at, mixed).fnr == 1.0);
  const std::vector<int> all_pos{1, 1};
  CHECK(kind_of([&] { selection_rates(at, all_pos); }) == ErrorKind::UndefinedRate);
}

TEST_CASE("auc edge cases") {
  const std::vector<double> perfect{0.9, 0.8, 0.1, 0.0};
  const std::vector<int> t{1, 1, 0, 0};
  CHECK(auc(perfect, t) == 1.0);
  const std::vector<double> tied{0.5, 0.5, 0.5, 0.5};
  CHECK(auc(tied, t) == 0.5);
  const std::vector<double> reversed{0.0, 0.1, 0.8, 0.9};
  CHECK(auc(reversed, t) == 0.0);
}

TEST_CASE("metrics agree with brute force on random instances") {
  bipmixed::Rng rng(80);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.index(15));
    std::vector<double> s(n);
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.index(5)) / 4.0;
      t[i] = static_cast<int>(rng.index(2));
    }
    t[0] = 1;
    t[1] = 0;
    CHECK(std::abs(auc(s, t) - oracle::brute_auc(s, t)) < 1e-12);
  }
}

TEST_CASE("feature importance rules") {
  Eigen::MatrixXd m(2, 3);
  m << 0.2, 0.9, 0.0, 0.5, 0.1, 0.0;
  const auto mx = feature_importance(m, ImportanceRule::MaxOverComponents);
  const auto any = feature_importance(m, ImportanceRule::AnyComponent);
  CHECK(mx == std::vector<double>{0.5, 0.9, 0.0});
  CHECK(any[0] == doctest::Approx(1 - 0.8 * 0.5));
  CHECK(any[1] == doctest::Approx(1 - 0.1 * 0.9));
  CHECK(any[2] == 0.0);
}
