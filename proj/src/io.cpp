#include "bipmixed/io.hpp"

#include "bipmixed/config.hpp"
#include "bipmixed/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace bipmixed::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write " + path.string());
  return out;
}

double parse_double(std::string_view field, const fs::path& path, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorKind::IOError, path.string() + ":" + std::to_string(line) + ": not a number: '" + std::string(field) + "'");
  }
  return v;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IOError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1) << '\n';
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd json_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data.at(i).at(k).get<double>();
  }
  return m;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json interval_json(const IntervalSummary& s) { return {{"mean", s.mean}, {"lower", s.lower}, {"upper", s.upper}}; }

IntervalSummary json_interval(const json& j) {
  return {j.at("mean").get<double>(), j.at("lower").get<double>(), j.at("upper").get<double>()};
}

json scaling_json(const ColumnScaling& s) { return {{"mean", vector_json(s.mean)}, {"sd", vector_json(s.sd)}}; }

ColumnScaling json_scaling(const json& j) { return {json_vector(j.at("mean")), json_vector(j.at("sd"))}; }

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t unhex(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  Eigen::Index cols = -1, rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    Eigen::Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_double(rest.substr(0, comma), path, line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols >= 0 && count != cols) {
      throw Error(ErrorKind::IOError, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                          std::to_string(cols) + " fields, found " + std::to_string(count));
    }
    cols = count;
    ++rows;
  }
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows,
                                                                                                 cols);
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  auto out = open_out(path);
  std::string line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line.push_back(',');
      line += format_double(m(i, j));
    }
    out << line << '\n';
  }
}

Eigen::VectorXd read_vector_csv(const fs::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() > 1) throw Error(ErrorKind::IOError, path.string() + ": expected a single column");
  return m.size() ? Eigen::VectorXd(m.col(0)) : Eigen::VectorXd();
}

void write_vector_csv(const fs::path& path, const Eigen::VectorXd& v) { write_matrix_csv(path, v); }

std::vector<std::string> read_labels(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out.push_back(line);
  }
  return out;
}

void write_labels(const fs::path& path, const std::vector<std::string>& labels) {
  auto out = open_out(path);
  for (const auto& l : labels) out << l << '\n';
}

MultiViewDataset load_manifest(const fs::path& manifest) {
  const json j = read_json(manifest);
  const fs::path base = manifest.parent_path();
  auto resolve = [&](const json& entry, const char* field) {
    if (!entry.is_string()) throw Error(ErrorKind::IOError, manifest.string() + ": '" + field + "' must be a path");
    const fs::path p = entry.get<std::string>();
    return p.is_absolute() ? p : base / p;
  };
  MultiViewDataset d;
  try {
    for (const auto& v : j.at("views")) {
      d.views.push_back(read_matrix_csv(resolve(v.at("path"), "views.path")));
      d.feature_names.push_back(v.value("feature_names", std::vector<std::string>{}));
    }
    if (j.contains("covariates") && !j["covariates"].is_null()) {
      d.covariates = read_matrix_csv(resolve(j["covariates"], "covariates"));
    }
    if (j.contains("outcome") && !j["outcome"].is_null()) d.outcome = read_vector_csv(resolve(j["outcome"], "outcome"));
    d.site_label = read_labels(resolve(j.at("site_labels"), "site_labels"));
    d.family_label = read_labels(resolve(j.at("family_labels"), "family_labels"));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IOError, manifest.string() + ": " + e.what());
  }
  return d;
}

fs::path save_manifest(const fs::path& dir, const std::string& stem, const MultiViewDataset& data) {
  fs::create_directories(dir);
  json j;
  j["views"] = json::array();
  for (std::size_t m = 0; m < data.views.size(); ++m) {
    const std::string file = stem + "_view" + std::to_string(m + 1) + ".csv";
    write_matrix_csv(dir / file, data.views[m]);
    json v{{"path", file}};
    if (m < data.feature_names.size()) v["feature_names"] = data.feature_names[m];
    j["views"].push_back(std::move(v));
  }
  if (data.covariates) {
    write_matrix_csv(dir / (stem + "_covariates.csv"), *data.covariates);
    j["covariates"] = stem + "_covariates.csv";
  } else {
    j["covariates"] = nullptr;
  }
  if (data.outcome.size() > 0) {
    write_vector_csv(dir / (stem + "_outcome.csv"), data.outcome);
    j["outcome"] = stem + "_outcome.csv";
  } else {
    j["outcome"] = nullptr;
  }
  write_labels(dir / (stem + "_sites.txt"), data.site_label);
  write_labels(dir / (stem + "_families.txt"), data.family_label);
  j["site_labels"] = stem + "_sites.txt";
  j["family_labels"] = stem + "_families.txt";
  const fs::path path = dir / (stem + ".json");
  write_json(path, j);
  return path;
}

void save_truth(const fs::path& path, const ScenarioSpec& spec, const SimulationTruth& truth) {
  json j;
  j["scenario"] = {{"id", spec.scenario_id},
                   {"n_sites", spec.n_sites},
                   {"families_per_site", spec.families_per_site},
                   {"individuals_per_family", spec.individuals_per_family},
                   {"n_views", spec.n_views},
                   {"p", spec.p},
                   {"n_signal", spec.n_signal},
                   {"r", spec.r},
                   {"sigma_theta2", spec.sigma_theta2},
                   {"sigma_xi2", spec.sigma_xi2},
                   {"mu", spec.mu},
                   {"sigma2", spec.sigma2},
                   {"n_covariates", spec.n_covariates},
                   {"seed", spec.seed}};
  j["alpha"] = vector_json(truth.alpha);
  j["beta"] = vector_json(truth.beta);
  j["xi"] = vector_json(truth.xi);
  j["theta_train"] = vector_json(truth.theta_train);
  j["theta_test"] = vector_json(truth.theta_test);
  j["loadings"] = json::array();
  for (const auto& a : truth.loadings) j["loadings"].push_back(matrix_json(a));
  j["U_train"] = matrix_json(truth.U_train);
  j["U_test"] = matrix_json(truth.U_test);
  j["importance"] = truth.importance;
  j["main_features"] = truth.main_features;
  write_json(path, j);
}

void save_fitted(const fs::path& path, const FittedModel& f) {
  json j;
  j["format"] = "bipmixed-fit/1";
  j["method"] = std::string(to_string(f.method));
  j["hyper"] = hyper_to_json(f.hyper);
  j["options"] = {{"loading_variance_factor", f.options.loading_variance_factor},
                  {"covariates_as_view", f.options.covariates_as_view}};
  json scaler{{"views", json::array()}};
  for (const auto& s : f.scaler.views) scaler["views"].push_back(scaling_json(s));
  scaler["covariates"] = f.scaler.covariates ? scaling_json(*f.scaler.covariates) : json(nullptr);
  j["scaler"] = std::move(scaler);
  j["site_ids"] = f.site_ids;
  j["family_ids"] = f.family_ids;
  j["family_site"] = f.family_site;
  j["single_site"] = f.single_site;

  const PosteriorSummary& p = f.posterior;
  json post;
  post["mpp_eta"] = json::array();
  post["mpp_gamma"] = json::array();
  post["feat_var_hat"] = json::array();
  for (const auto& m : p.mpp_eta) post["mpp_eta"].push_back(matrix_json(m));
  for (const auto& g : p.mpp_gamma) post["mpp_gamma"].push_back(vector_json(g));
  for (const auto& v : p.feat_var_hat) post["feat_var_hat"].push_back(vector_json(v));
  post["U_bar"] = matrix_json(p.U_bar);
  post["beta_hat"] = vector_json(p.beta_hat);
  post["theta_hat"] = vector_json(p.theta_hat);
  post["xi_hat"] = vector_json(p.xi_hat);
  post["mu_hat"] = p.mu_hat;
  post["sigma2"] = interval_json(p.sigma2);
  post["sigma_xi2"] = interval_json(p.sigma_xi2);
  post["sigma_theta2"] = json::array();
  for (const auto& s : p.sigma_theta2) post["sigma_theta2"].push_back(interval_json(s));
  post["sigma_theta2_site_mean"] = interval_json(p.sigma_theta2_site_mean);
  post["n_kept"] = p.n_kept;
  post["n_distinct_models"] = p.n_distinct_models;
  post["registry"] = json::array();
  for (const auto& m : p.registry) {
    post["registry"].push_back({{"hash", hex(m.hash)}, {"frequency", m.frequency}, {"key", selection_key(m.selection)}});
  }
  j["posterior"] = std::move(post);

  j["models"] = json::array();
  for (const auto& m : f.models) {
    json mj{{"hash", hex(m.hash)}, {"weight", m.weight}, {"alpha", vector_json(m.alpha)}, {"views", json::array()}};
    for (const auto& a : m.views) mj["views"].push_back(matrix_json(a));
    j["models"].push_back(std::move(mj));
  }
  j["pca_directions"] = f.pca_directions ? matrix_json(*f.pca_directions) : json(nullptr);
  write_json(path, j);
}

FittedModel load_fitted(const fs::path& path) {
  const json j = read_json(path);
  FittedModel f;
  try {
    if (j.at("format") != "bipmixed-fit/1") throw Error(ErrorKind::IOError, path.string() + ": unknown archive format");
    f.method = parse_method(j.at("method").get<std::string>());
    f.hyper = hyper_from_json(j.at("hyper"), "hyper");
    f.options.loading_variance_factor = j.at("options").at("loading_variance_factor").get<bool>();
    f.options.covariates_as_view = j.at("options").at("covariates_as_view").get<bool>();
    for (const auto& s : j.at("scaler").at("views")) f.scaler.views.push_back(json_scaling(s));
    if (!j.at("scaler").at("covariates").is_null()) f.scaler.covariates = json_scaling(j["scaler"]["covariates"]);
    f.site_ids = j.at("site_ids").get<std::vector<std::string>>();
    f.family_ids = j.at("family_ids").get<std::vector<std::string>>();
    f.family_site = j.at("family_site").get<std::vector<int>>();
    f.single_site = j.at("single_site").get<bool>();

    const json& post = j.at("posterior");
    PosteriorSummary& p = f.posterior;
    for (const auto& m : post.at("mpp_eta")) p.mpp_eta.push_back(json_matrix(m));
    for (const auto& g : post.at("mpp_gamma")) p.mpp_gamma.push_back(json_vector(g));
    for (const auto& v : post.at("feat_var_hat")) p.feat_var_hat.push_back(json_vector(v));
    p.U_bar = json_matrix(post.at("U_bar"));
    p.beta_hat = json_vector(post.at("beta_hat"));
    p.theta_hat = json_vector(post.at("theta_hat"));
    p.xi_hat = json_vector(post.at("xi_hat"));
    p.mu_hat = post.at("mu_hat").get<double>();
    p.sigma2 = json_interval(post.at("sigma2"));
    p.sigma_xi2 = json_interval(post.at("sigma_xi2"));
    for (const auto& s : post.at("sigma_theta2")) p.sigma_theta2.push_back(json_interval(s));
    p.sigma_theta2_site_mean = json_interval(post.at("sigma_theta2_site_mean"));
    p.n_kept = post.at("n_kept").get<int>();
    p.n_distinct_models = post.at("n_distinct_models").get<int>();
    std::vector<int> view_features;
    for (const auto& m : p.mpp_eta) view_features.push_back(static_cast<int>(m.cols()));
    const int r = p.mpp_gamma.empty() ? 0 : static_cast<int>(p.mpp_gamma[0].size());
    for (const auto& m : post.at("registry")) {
      RegisteredModel rm;
      rm.hash = unhex(m.at("hash").get<std::string>());
      rm.frequency = m.at("frequency").get<double>();
      rm.selection = decode_selection_key(m.at("key").get<std::string>(), r, view_features);
      p.registry.push_back(std::move(rm));
    }

    for (const auto& mj : j.at("models")) {
      ModelLoadings m;
      m.hash = unhex(mj.at("hash").get<std::string>());
      m.weight = mj.at("weight").get<double>();
      m.alpha = json_vector(mj.at("alpha"));
      for (const auto& a : mj.at("views")) m.views.push_back(json_matrix(a));
      f.models.push_back(std::move(m));
    }
    if (!j.at("pca_directions").is_null()) f.pca_directions = json_matrix(j["pca_directions"]);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::IOError, path.string() + ": " + e.what());
  }
  return f;
}

void write_predictions(const fs::path& path, const std::vector<std::string>& site,
                       const std::vector<std::string>& family, const Eigen::VectorXd& y_hat) {
  if (site.size() != static_cast<std::size_t>(y_hat.size()) || family.size() != site.size()) {
    throw Error(ErrorKind::LengthMismatch, "prediction labels and values differ in length");
  }
  auto out = open_out(path);
  out << "row_id,site,family,y_hat\n";
  for (Eigen::Index i = 0; i < y_hat.size(); ++i) {
    out << (i + 1) << ',' << site[i] << ',' << family[i] << ',' << format_double(y_hat(i)) << '\n';
  }
}

Eigen::VectorXd read_predictions(const fs::path& path) {
  auto in = open_in(path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("row_id,site,family,y_hat", 0) != 0) throw Error(ErrorKind::IOError, path.string() + ": bad header");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    values.push_back(parse_double(std::string_view(line).substr(comma + 1), path, line_no));
  }
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_selection_csv(const fs::path& path, const FittedModel& fitted,
                         const std::vector<std::vector<std::string>>& feature_names) {
  auto out = open_out(path);
  const auto& mpp = fitted.posterior.mpp_eta;
  const Eigen::Index r = mpp.empty() ? 0 : mpp[0].rows();
  out << "view,feature,importance";
  for (Eigen::Index l = 0; l < r; ++l) out << ",mpp_c" << (l + 1);
  out << '\n';
  for (std::size_t m = 1; m < mpp.size(); ++m) {
    const auto importance = feature_importance(mpp[m]);
    for (Eigen::Index j = 0; j < mpp[m].cols(); ++j) {
      const bool named = m - 1 < feature_names.size() && static_cast<std::size_t>(j) < feature_names[m - 1].size();
      out << m << ',' << (named ? feature_names[m - 1][j] : "v" + std::to_string(m) + "_f" + std::to_string(j + 1))
          << ',' << format_double(importance[j]);
      for (Eigen::Index l = 0; l < r; ++l) out << ',' << format_double(mpp[m](l, j));
      out << '\n';
    }
  }
}

void write_trace_csv(const fs::path& path, const std::vector<TraceRow>& trace) {
  auto out = open_out(path);
  out << "iteration,mu,sigma2,sigma_xi2";
  const std::size_t views = trace.empty() ? 0 : trace[0].active_per_view.size();
  for (std::size_t m = 0; m < views; ++m) out << ",active_v" << m;
  out << '\n';
  for (const auto& t : trace) {
    out << t.iteration << ',' << format_double(t.mu) << ',' << format_double(t.sigma2) << ','
        << format_double(t.sigma_xi2);
    for (int a : t.active_per_view) out << ',' << a;
    out << '\n';
  }
}

}  // namespace bipmixed::io
