#pragma once

// JSON forms of PhysicalParams (configuration files) and ModelParams (full
// model dumps). Sites are 1-based in JSON, matching Label::to_string.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "darkwire/observables.hpp"
#include "darkwire/optimize.hpp"
#include "json.hpp"

namespace darkwire {

using json = nlohmann::json;

/// What a configuration file describes: the physical parameters plus the
/// objective used by steady-state and optimization commands.
struct RunConfig {
  PhysicalParams physical;
  Objective objective = Objective::power;
  double fast_ec_rate = default_fast_ec_rate;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(std::string("config key '") + key + "': " + e.what());
  }
}

template <class T>
void read_key(const json& j, const char* key, std::optional<T>& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  T v{};
  read_key(j, key, v);
  out = v;
}

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "n_sites",   "delta_e",       "J",           "eps_g",           "eps_e",        "eps_alpha",
      "eps_beta",  "gamma_em",      "gamma_inj",   "gamma_phonon",    "Gamma",        "omega0",
      "gamma_n_alpha", "gamma_alpha_beta", "gamma_beta_g", "gamma_nr", "t_hot",     "t_cold",
      "t_ph",      "scale_gamma_em", "include_optical", "onsite_energies", "positions", "objective",
      "fast_ec_rate"};
  return keys;
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  const PhysicalParams& p = c.physical;
  json j = {{"n_sites", p.n_sites},
            {"delta_e", p.delta_e},
            {"J", p.J},
            {"eps_g", p.eps_g},
            {"eps_e", p.eps_e},
            {"eps_alpha", p.eps_alpha},
            {"eps_beta", p.eps_beta},
            {"gamma_em", p.gamma_em},
            {"gamma_inj", p.gamma_inj},
            {"gamma_phonon", p.gamma_phonon},
            {"Gamma", p.Gamma},
            {"gamma_n_alpha", p.gamma_n_alpha},
            {"gamma_beta_g", p.gamma_beta_g},
            {"gamma_nr", p.gamma_nr},
            {"t_hot", p.t_hot},
            {"t_cold", p.t_cold},
            {"t_ph", p.t_ph},
            {"scale_gamma_em", p.scale_gamma_em},
            {"include_optical", p.include_optical},
            {"objective", to_string(c.objective)},
            {"fast_ec_rate", c.fast_ec_rate}};
  if (p.omega0) j["omega0"] = *p.omega0;
  if (p.gamma_alpha_beta) j["gamma_alpha_beta"] = *p.gamma_alpha_beta;
  if (p.onsite_energies) j["onsite_energies"] = *p.onsite_energies;
  if (p.positions) j["positions"] = *p.positions;
  return j;
}

/// Missing keys keep their defaults; unknown keys are an error.
inline RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!detail::config_keys().count(key)) throw Error("unknown config key '" + key + "'");
  RunConfig c;
  PhysicalParams& p = c.physical;
  using detail::read_key;
  read_key(j, "n_sites", p.n_sites);
  read_key(j, "delta_e", p.delta_e);
  read_key(j, "J", p.J);
  read_key(j, "eps_g", p.eps_g);
  read_key(j, "eps_e", p.eps_e);
  read_key(j, "eps_alpha", p.eps_alpha);
  read_key(j, "eps_beta", p.eps_beta);
  read_key(j, "gamma_em", p.gamma_em);
  read_key(j, "gamma_inj", p.gamma_inj);
  read_key(j, "gamma_phonon", p.gamma_phonon);
  read_key(j, "Gamma", p.Gamma);
  read_key(j, "omega0", p.omega0);
  read_key(j, "gamma_n_alpha", p.gamma_n_alpha);
  read_key(j, "gamma_alpha_beta", p.gamma_alpha_beta);
  read_key(j, "gamma_beta_g", p.gamma_beta_g);
  read_key(j, "gamma_nr", p.gamma_nr);
  read_key(j, "t_hot", p.t_hot);
  read_key(j, "t_cold", p.t_cold);
  read_key(j, "t_ph", p.t_ph);
  read_key(j, "scale_gamma_em", p.scale_gamma_em);
  read_key(j, "include_optical", p.include_optical);
  read_key(j, "onsite_energies", p.onsite_energies);
  read_key(j, "positions", p.positions);
  read_key(j, "fast_ec_rate", c.fast_ec_rate);
  if (j.contains("objective")) {
    std::string o;
    read_key(j, "objective", o);
    if (o == "power") {
      c.objective = Objective::power;
    } else if (o == "current") {
      c.objective = Objective::current;
    } else {
      throw Error("objective must be 'power' or 'current'");
    }
  }
  if (p.onsite_energies) p.n_sites = static_cast<int>(p.onsite_energies->size());
  return c;
}

/// Reads and validates a configuration file.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error("config file '" + path + "': " + e.what());
  }
  RunConfig c = run_config_from_json(j);
  const auto errs = validate(c.physical);
  if (!errs.empty()) {
    std::string msg = "invalid config '" + path + "':";
    for (const auto& e : errs) msg += "\n  " + e;
    throw Error(msg);
  }
  return c;
}

// ---------------------------------------------------------------------------
// ModelParams

inline json to_json(const OperatorPattern& op) {
  struct V {
    json operator()(const LocalDephase& o) const { return {{"kind", "local_dephase"}, {"site", o.site + 1}}; }
    json operator()(const CollectiveOptical&) const { return {{"kind", "collective_optical"}}; }
    json operator()(const TwoLevel& o) const {
      return {{"kind", "two_level"}, {"a", o.a.to_string()}, {"b", o.b.to_string()}};
    }
    json operator()(const LocalDecay& o) const { return {{"kind", "local_decay"}, {"site", o.site + 1}}; }
  };
  return std::visit(V{}, op);
}

inline json to_json(const SpectralDensity& s) {
  struct V {
    json operator()(const DrudeLorentz& d) const {
      return {{"kind", "drude_lorentz"},
              {"gamma_phonon", d.gamma_phonon},
              {"width", d.width},
              {"omega0", d.omega0},
              {"temperature", d.temperature}};
    }
    json operator()(const Flat& f) const {
      return {{"kind", "flat"}, {"gamma", f.gamma}, {"temperature", f.temperature}};
    }
  };
  return std::visit(V{}, s);
}

inline json to_json(const ModelParams& m) {
  json chain = {{"onsite_energies", m.chain.onsite_energies},
                {"eps_g", m.chain.eps_g},
                {"eps_alpha", m.chain.eps_alpha},
                {"eps_beta", m.chain.eps_beta}};
  if (const auto* d = std::get_if<DistanceDependent>(&m.chain.coupling)) {
    chain["coupling"] = {{"law", "distance"}, {"J", d->J}, {"positions", d->positions}};
  } else {
    chain["coupling"] = {{"law", "nearest_neighbor"}, {"J", coupling_constant(m.chain.coupling)}};
  }
  json procs = json::array();
  for (const auto& p : m.processes)
    procs.push_back({{"name", p.name}, {"op", to_json(p.op)}, {"spectrum", to_json(p.spectrum)}});
  return {{"chain", chain},
          {"processes", procs},
          {"optimize_gamma_ab", m.optimize_gamma_ab},
          {"optical_disabled", m.optical_disabled}};
}

inline OperatorPattern operator_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "local_dephase") return LocalDephase{j.at("site").get<int>() - 1};
  if (kind == "collective_optical") return CollectiveOptical{};
  if (kind == "two_level")
    return TwoLevel{Label::parse(j.at("a").get<std::string>()), Label::parse(j.at("b").get<std::string>())};
  if (kind == "local_decay") return LocalDecay{j.at("site").get<int>() - 1};
  throw Error("unknown operator kind '" + kind + "'");
}

inline SpectralDensity spectrum_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "drude_lorentz")
    return DrudeLorentz{j.at("gamma_phonon").get<double>(), j.at("width").get<double>(), j.at("omega0").get<double>(),
                        j.at("temperature").get<double>()};
  if (kind == "flat") return Flat{j.at("gamma").get<double>(), j.at("temperature").get<double>()};
  throw Error("unknown spectrum kind '" + kind + "'");
}

inline ModelParams model_from_json(const json& j) {
  try {
    ModelParams m;
    const json& c = j.at("chain");
    m.chain.onsite_energies = c.at("onsite_energies").get<std::vector<double>>();
    m.chain.eps_g = c.at("eps_g").get<double>();
    m.chain.eps_alpha = c.at("eps_alpha").get<double>();
    m.chain.eps_beta = c.at("eps_beta").get<double>();
    const json& law = c.at("coupling");
    if (law.at("law").get<std::string>() == "distance") {
      m.chain.coupling =
          DistanceDependent{law.at("J").get<double>(), law.at("positions").get<std::vector<std::array<double, 3>>>()};
    } else {
      m.chain.coupling = NearestNeighbor{law.at("J").get<double>()};
    }
    for (const auto& p : j.at("processes"))
      m.processes.push_back({p.at("name").get<std::string>(), operator_from_json(p.at("op")),
                             spectrum_from_json(p.at("spectrum"))});
    m.optimize_gamma_ab = j.value("optimize_gamma_ab", true);
    m.optical_disabled = j.value("optical_disabled", false);
    return m;
  } catch (const json::exception& e) {
    throw Error(std::string("model JSON: ") + e.what());
  }
}

}  // namespace darkwire
