#include "bipmixed/scenario.hpp"

#include "fixtures.hpp"

#include <doctest.h>

#include <sstream>

using namespace bipmixed;

namespace {

ScenarioOptions quick_options(int workers) {
  ScenarioOptions o;
  o.replicates = 3;
  o.hyper = fixture::short_chain();
  o.workers = workers;
  return o;
}

}  // namespace

TEST_CASE("scenario reports are identical across worker counts") {
  const auto spec = fixture::small_spec();
  const auto one = run_scenario(spec, quick_options(1));
  const auto many = run_scenario(spec, quick_options(3));
  CHECK(report_csv(one) == report_csv(many));
  CHECK(summary_csv(one) == summary_csv(many));
  CHECK(per_view_csv(one) == per_view_csv(many));
  CHECK(one.rows.size() == 9);
}

TEST_CASE("report layout") {
  const auto rep = run_scenario(fixture::small_spec(), quick_options(1));
  std::istringstream in(report_csv(rep));
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "scenario,method,replicate,MSE,VarYhat,FPR,FNR,AUC");
  CHECK(first.rfind("2,BIP,1,", 0) == 0);
  bool pca_na = false;
  for (std::string line; std::getline(in, line);)
    if (line.find("PCA2Step") != std::string::npos) pca_na = line.ends_with(",NA,NA,NA");
  CHECK(pca_na);
  for (const auto& row : rep.rows) CHECK(row.metrics.mse > 0.0);
}

TEST_CASE("single replicate summaries flag the undefined SD") {
  auto o = quick_options(1);
  o.replicates = 1;
  o.methods = {Method::BIPmixed};
  const auto rep = run_scenario(fixture::small_spec(), o);
  const auto s = summary_csv(rep);
  CHECK(s.find("sd_defined") != std::string::npos);
  CHECK(s.substr(s.size() - 2) == "0\n");
}
