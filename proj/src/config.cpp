#include "bipmixed/config.hpp"

#include "bipmixed/error.hpp"

#include <fstream>
#include <set>

namespace bipmixed {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::ConfigError, path + ": " + what);
}

template <typename T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(where + "." + key, "wrong type");
  }
}

void read_ig(const json& j, const std::string& where, const char* key, InverseGammaPrior& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    bad(where + "." + key, "expected [shape, scale]");
  }
  out = {v[0].get<double>(), v[1].get<double>()};
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& known) {
  if (!j.is_object()) bad(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) bad(where + "." + key, "unknown field");
  }
}

const std::set<std::string> kHyperKeys = {
    "r",       "q_eta",      "q_gamma",        "tau2",    "sigma_beta2",           "sigma_mu2",
    "ig_xi",   "ig_theta",   "ig_sigma",       "ig_feature", "n_iter",             "n_burn",
    "thin",    "seed",       "max_bma_models", "random_effects_enabled", "covariates_in_outcome",
    "standardize", "legacy_formulas"};

void read_hyper_fields(const json& j, const std::string& where, Hyperparameters& h) {
  read(j, where, "r", h.r);
  read(j, where, "q_eta", h.q_eta);
  read(j, where, "q_gamma", h.q_gamma);
  read(j, where, "tau2", h.tau2);
  read(j, where, "sigma_beta2", h.sigma_beta2);
  read(j, where, "sigma_mu2", h.sigma_mu2);
  read_ig(j, where, "ig_xi", h.ig_xi);
  read_ig(j, where, "ig_theta", h.ig_theta);
  read_ig(j, where, "ig_sigma", h.ig_sigma);
  read_ig(j, where, "ig_feature", h.ig_feature);
  read(j, where, "n_iter", h.n_iter);
  read(j, where, "n_burn", h.n_burn);
  read(j, where, "thin", h.thin);
  read(j, where, "seed", h.seed);
  read(j, where, "max_bma_models", h.max_bma_models);
  read(j, where, "random_effects_enabled", h.random_effects_enabled);
  read(j, where, "covariates_in_outcome", h.covariates_in_outcome);
  read(j, where, "standardize", h.standardize);
  bool legacy = h.formulas == OutcomeFormulas::Legacy;
  read(j, where, "legacy_formulas", legacy);
  h.formulas = legacy ? OutcomeFormulas::Legacy : OutcomeFormulas::PriorConsistent;
}

}  // namespace

json hyper_to_json(const Hyperparameters& h) {
  auto ig = [](const InverseGammaPrior& p) { return json::array({p.shape, p.scale}); };
  return {{"r", h.r},
          {"q_eta", h.q_eta},
          {"q_gamma", h.q_gamma},
          {"tau2", h.tau2},
          {"sigma_beta2", h.sigma_beta2},
          {"sigma_mu2", h.sigma_mu2},
          {"ig_xi", ig(h.ig_xi)},
          {"ig_theta", ig(h.ig_theta)},
          {"ig_sigma", ig(h.ig_sigma)},
          {"ig_feature", ig(h.ig_feature)},
          {"n_iter", h.n_iter},
          {"n_burn", h.n_burn},
          {"thin", h.thin},
          {"seed", h.seed},
          {"max_bma_models", h.max_bma_models},
          {"random_effects_enabled", h.random_effects_enabled},
          {"covariates_in_outcome", h.covariates_in_outcome},
          {"standardize", h.standardize},
          {"legacy_formulas", h.formulas == OutcomeFormulas::Legacy}};
}

Hyperparameters hyper_from_json(const json& j, const std::string& where) {
  reject_unknown(j, where, kHyperKeys);
  Hyperparameters h;
  read_hyper_fields(j, where, h);
  return h;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  reject_unknown(j, "config", {"data", "model", "mcmc", "prediction", "output"});

  if (j.contains("data")) {
    const json& d = j["data"];
    reject_unknown(d, "data", {"train", "test", "fitted", "predictions", "truth"});
    read(d, "data", "train", c.train);
    read(d, "data", "test", c.test);
    read(d, "data", "fitted", c.fitted);
    read(d, "data", "predictions", c.predictions);
    read(d, "data", "truth", c.truth);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    std::set<std::string> known = {"method", "r", "q_eta", "q_gamma", "tau2", "sigma_beta2", "sigma_mu2",
                                   "ig_xi", "ig_theta", "ig_sigma", "ig_feature", "covariates_in_outcome",
                                   "covariates_as_view", "standardize", "legacy_formulas", "loading_variance_factor",
                                   "pca_components", "pca_family_only"};
    reject_unknown(m, "model", known);
    std::string method;
    read(m, "model", "method", method);
    if (!method.empty()) {
      try {
        c.method = parse_method(method);
      } catch (const Error&) {
        bad("model.method", "expected bipmixed, bip or pca2step");
      }
    }
    read_hyper_fields(m, "model", c.hyper);
    read(m, "model", "covariates_as_view", c.fit.covariates_as_view);
    read(m, "model", "loading_variance_factor", c.fit.loading_variance_factor);
    read(m, "model", "pca_components", c.pca.components);
    read(m, "model", "pca_family_only", c.pca.family_only);
  }
  if (j.contains("mcmc")) {
    const json& m = j["mcmc"];
    reject_unknown(m, "mcmc", {"n_iter", "n_burn", "thin", "seed", "trace"});
    read_hyper_fields(m, "mcmc", c.hyper);
    read(m, "mcmc", "trace", c.fit.keep_trace);
  }
  if (j.contains("prediction")) {
    const json& p = j["prediction"];
    reject_unknown(p, "prediction", {"max_bma_models", "stochastic_unseen", "seed"});
    read(p, "prediction", "max_bma_models", c.hyper.max_bma_models);
    read(p, "prediction", "stochastic_unseen", c.prediction.stochastic_unseen);
    read(p, "prediction", "seed", c.prediction.seed);
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown(o, "output", {"dir", "workers"});
    read(o, "output", "dir", c.out_dir);
    read(o, "output", "workers", c.workers);
  }
  c.hyper.random_effects_enabled = c.method != Method::BIP;
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace bipmixed
