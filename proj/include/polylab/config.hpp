#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "polylab/env.hpp"
#include "polylab/dp.hpp"
#include "polylab/walk.hpp"

namespace polylab {

using json = nlohmann::json;

// Thrown for malformed configuration; message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config key `" + key + "`");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key `" + key + "` has the wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key `" + key + "` has the wrong type");
  }
}

}  // namespace detail

inline EnvironmentLaw parse_env(const json& j) {
  std::string kind = detail::require<std::string>(j, "kind");
  try {
    if (kind == "gaussian")
      return EnvironmentLaw::gaussian(detail::require<double>(j, "mean"),
                                      detail::require<double>(j, "sd"));
    if (kind == "exponential")
      return EnvironmentLaw::exponential(detail::require<double>(j, "rate"));
    if (kind == "bernoulli")
      return EnvironmentLaw::bernoulli(detail::require<double>(j, "p"),
                                       detail::require<double>(j, "lo"),
                                       detail::require<double>(j, "hi"));
    if (kind == "uniform")
      return EnvironmentLaw::uniform(detail::require<double>(j, "lo"),
                                     detail::require<double>(j, "hi"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("env: ") + e.what());
  }
  throw ConfigError("env.kind must be gaussian|exponential|bernoulli|uniform");
}

inline StepDistribution parse_walk(const json& j) {
  std::string kind = detail::require<std::string>(j, "kind");
  try {
    if (kind == "srw") return StepDistribution::srw(detail::require<int>(j, "d"));
    if (kind == "power_law")
      return StepDistribution::power_law_1d(detail::require<double>(j, "exponent"),
                                            detail::require<int>(j, "cutoff"));
    if (kind == "custom") {
      int d = detail::require<int>(j, "d");
      auto steps = detail::require<std::vector<json>>(j, "steps");
      std::map<Vec, double> pmf;
      for (const auto& s : steps) {
        if (!s.is_array() || s.size() != 2)
          throw ConfigError("walk.steps entries must be [offset, prob]");
        Vec z{0, 0, 0};
        if (s[0].is_number()) {
          z[0] = s[0].get<std::int32_t>();
        } else {
          auto off = s[0].get<std::vector<std::int32_t>>();
          if (int(off.size()) != d) throw ConfigError("walk.steps offset has wrong dimension");
          for (int k = 0; k < d; ++k) z[std::size_t(k)] = off[std::size_t(k)];
        }
        pmf[z] += s[1].get<double>();
      }
      return StepDistribution(d, std::move(pmf));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("walk: ") + e.what());
  } catch (const json::exception&) {
    throw ConfigError("walk: malformed steps");
  }
  throw ConfigError("walk.kind must be srw|power_law|custom");
}

struct BetaGrid {
  std::vector<double> values;
};

inline BetaGrid parse_beta(const json& j) {
  if (!j.contains("beta")) throw ConfigError("missing config key `beta`");
  const json& b = j.at("beta");
  BetaGrid g;
  if (b.is_number()) {
    g.values.push_back(b.get<double>());
    return g;
  }
  if (b.is_object()) {
    double start = detail::require<double>(b, "start");
    double stop = detail::require<double>(b, "stop");
    int count = detail::require<int>(b, "count");
    if (count < 1) throw ConfigError("beta.count must be >= 1");
    if (count == 1) {
      g.values.push_back(start);
      return g;
    }
    for (int i = 0; i < count; ++i)
      g.values.push_back(start + (stop - start) * double(i) / double(count - 1));
    return g;
  }
  throw ConfigError("beta must be a number or {start, stop, count}");
}

struct LocalizationParams {
  std::vector<double> eps_constants{0.2, 0.05, 0.01};
  bool eps_decay = true;
  double delta = 0.5;
  std::int64_t K = 10;
};

struct ExperimentConfig {
  EnvironmentLaw env;
  StepDistribution walk;
  BetaGrid beta;
  std::int64_t n;
  int seed_count;
  std::uint64_t base_seed;
  double alpha;          // resolved value (auto rule applied per beta if NaN)
  bool alpha_auto;
  LocalizationParams loc;
  TruncationPolicy trunc;
  std::string outputs;
  json echo;             // the raw config, for the manifest
};

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg{
      parse_env(detail::require<json>(j, "env")),
      parse_walk(detail::require<json>(j, "walk")),
      parse_beta(j),
      detail::require<std::int64_t>(j, "n"),
      1,
      0,
      2.0,
      true,
      {},
      {},
      detail::get_or<std::string>(j, "outputs", "out"),
      j};

  if (cfg.n < 1) throw ConfigError("n must be >= 1");

  json seeds = detail::get_or<json>(j, "seeds", json{{"count", 1}, {"base", 1}});
  cfg.seed_count = detail::get_or<int>(seeds, "count", 1);
  cfg.base_seed = detail::get_or<std::uint64_t>(seeds, "base", 1);
  if (cfg.seed_count < 1) throw ConfigError("seeds.count must be >= 1");

  if (j.contains("alpha") && j.at("alpha").is_number()) {
    cfg.alpha = j.at("alpha").get<double>();
    cfg.alpha_auto = false;
    if (!(cfg.alpha > 1)) throw ConfigError("alpha must be > 1");
  }

  if (j.contains("localization")) {
    const json& l = j.at("localization");
    cfg.loc.eps_constants =
        detail::get_or<std::vector<double>>(l, "eps", cfg.loc.eps_constants);
    cfg.loc.eps_decay = detail::get_or<bool>(l, "eps_decay", true);
    cfg.loc.delta = detail::get_or<double>(l, "delta", 0.5);
    cfg.loc.K = detail::get_or<std::int64_t>(l, "K", 10);
    for (double e : cfg.loc.eps_constants)
      if (!(e >= 0) || e >= 1) throw ConfigError("localization.eps values must lie in [0,1)");
    if (!(cfg.loc.delta > 0) || cfg.loc.delta >= 1)
      throw ConfigError("localization.delta must lie in (0,1)");
    if (cfg.loc.K < 0) throw ConfigError("localization.K must be >= 0");
  }

  if (j.contains("truncation")) {
    const json& t = j.at("truncation");
    cfg.trunc.tau_rel = detail::get_or<double>(t, "tau_rel", 1e-14);
    cfg.trunc.ledger_warn = detail::get_or<double>(t, "ledger_warn", 1e-6);
    cfg.trunc.enabled = detail::get_or<bool>(t, "enabled", true);
    if (t.contains("max_support"))
      cfg.trunc.max_support = detail::require<std::uint64_t>(t, "max_support");
    if (!(cfg.trunc.tau_rel >= 0)) throw ConfigError("truncation.tau_rel must be >= 0");
  }

  // beta-grid feasibility against the law
  double bm = beta_max(cfg.env);
  std::vector<double> bad;
  for (double b : cfg.beta.values) {
    bool ok = b > 0 && b < bm;
    if (ok && !cfg.alpha_auto) ok = cfg.alpha * b < bm;
    if (!ok) bad.push_back(b);
  }
  if (!bad.empty()) {
    std::string msg = "beta values out of range (need 0 < beta";
    msg += cfg.alpha_auto ? " < beta_max):" : " and alpha*beta < beta_max):";
    for (double b : bad) msg += " " + std::to_string(b);
    throw ConfigError(msg);
  }
  return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace polylab
