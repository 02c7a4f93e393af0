#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../grid.hpp"
#include "../lindblad.hpp"
#include "../potentials.hpp"

namespace qld::bench {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr double kBoltzmann = 0.82904;

inline const std::vector<std::string>& algorithms() {
  static const std::vector<std::string> a{"qld", "qld_time_dependent", "fpe", "qhd",
                                          "qaa", "sgd",                "nagd", "bath"};
  return a;
}

struct ExperimentConfig {
  json resolved;  // every field filled; the hash is taken over this object
  std::string hash;

  std::string algorithm() const { return resolved.at("algorithm").get<std::string>(); }
  std::string potential_name() const { return resolved.at("potential").at("name").get<std::string>(); }
  double num(const std::string& k) const { return resolved.at(k).get<double>(); }
};

inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

// nlohmann::json keeps object keys sorted, so the dump is order independent.
inline std::string config_hash(const json& resolved) {
  json h = resolved;
  h.erase("output");
  h.erase("sweep");
  return fnv1a_hex(h.dump());
}

namespace detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw config_error("config field '" + field + "': " + msg);
}

inline double get_num(const json& j, const std::string& key, double def) {
  if (!j.contains(key) || j.at(key).is_null()) return def;
  if (!j.at(key).is_number()) fail(key, "expected a number");
  return j.at(key).get<double>();
}

inline void require_positive(const json& j, const std::string& key) {
  if (!(j.at(key).get<double>() > 0)) fail(key, "must be positive");
}

inline json curve_json(const json& in, const std::string& which, double t_f) {
  if (in.is_string()) {
    std::string s = in.get<std::string>();
    if (s != "preset") fail("schedule_" + which, "unknown schedule '" + s + "'");
    Curve c = which == "hbar" ? hbar_preset(t_f) : temperature_preset(t_f);
    return json{{"yl", c.yl}, {"yu", c.yu}, {"k", c.k}, {"tau", c.tau}};
  }
  if (in.is_number()) return json{{"constant", in.get<double>()}};
  if (!in.is_object()) fail("schedule_" + which, "expected \"preset\", a number or an object");
  if (in.contains("constant")) return json{{"constant", get_num(in, "constant", 0)}};
  for (const char* k : {"yl", "yu", "k", "tau"})
    if (!in.contains(k)) fail("schedule_" + which, std::string("missing '") + k + "'");
  return json{{"yl", get_num(in, "yl", 0)},
              {"yu", get_num(in, "yu", 0)},
              {"k", get_num(in, "k", 0)},
              {"tau", get_num(in, "tau", 0)}};
}

}  // namespace detail

inline Curve curve_from_json(const json& j) {
  if (j.contains("constant")) return Curve::constant(j.at("constant").get<double>());
  return Curve::inverted_sigmoid(j.at("yl").get<double>(), j.at("yu").get<double>(),
                                 j.at("k").get<double>(), j.at("tau").get<double>());
}

// Fills defaults and validates. The input is the user-facing object with any sweep removed.
inline ExperimentConfig resolve_config(const json& in) {
  using detail::fail;
  using detail::get_num;
  if (!in.is_object()) throw config_error("config: top level must be an object");
  static const std::vector<std::string> known{
      "schema_version", "algorithm", "potential", "n",       "domain",        "hbar",
      "m",              "omega",     "eta",       "k",       "T",             "schedule_hbar",
      "schedule_T",     "initial",   "dt",        "t_f",     "record_stride", "schedule_stride",
      "epsilon",        "seed",      "gamma",     "sigma",   "s",             "samples",
      "s1",             "s2",        "oscillators", "steady_stop", "output", "sweep", "min_eig"};
  for (auto it = in.begin(); it != in.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      fail(it.key(), "unknown field");

  json r;
  int version = static_cast<int>(get_num(in, "schema_version", kSchemaVersion));
  if (version != kSchemaVersion) fail("schema_version", "unsupported version " + std::to_string(version));
  r["schema_version"] = version;

  if (!in.contains("algorithm")) fail("algorithm", "missing required field");
  if (!in.at("algorithm").is_string()) fail("algorithm", "expected a string");
  const std::string alg = in.at("algorithm").get<std::string>();
  if (std::find(algorithms().begin(), algorithms().end(), alg) == algorithms().end())
    fail("algorithm", "unknown algorithm '" + alg + "'");
  r["algorithm"] = alg;
  const bool td = alg == "qld_time_dependent";

  // grid
  double n = get_num(in, "n", alg == "bath" ? 64 : 128);
  if (n != std::floor(n) || n < 4) fail("n", "must be an integer >= 4");
  r["n"] = static_cast<std::int64_t>(n);
  json dom = in.value("domain", json::array({-1.0, 1.0}));
  if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number())
    fail("domain", "expected [lo, hi]");
  if (!(dom[0].get<double>() < dom[1].get<double>())) fail("domain", "empty interval");
  r["domain"] = json::array({dom[0].get<double>(), dom[1].get<double>()});
  if (alg == "qaa" && !is_power_of_two(static_cast<std::size_t>(n)))
    fail("n", "qaa requires a power of two");
  const double dx = (r["domain"][1].get<double>() - r["domain"][0].get<double>()) / n;

  // physical parameters; defaults follow the quadratic and time-dependent experiments
  r["hbar"] = get_num(in, "hbar", td ? 0.5 : (alg == "bath" ? 1.0 : 2.1108));
  r["m"] = get_num(in, "m", alg == "bath" ? 10.0 : 1.0);
  r["omega"] = get_num(in, "omega", td ? 300.0 : 223.2728);
  r["eta"] = get_num(in, "eta", td ? 10.0 : 5.0);
  r["k"] = get_num(in, "k", kBoltzmann);
  r["T"] = get_num(in, "T", td ? 2.0 : 200.0);
  for (const char* f : {"hbar", "m", "omega", "k"}) detail::require_positive(r, f);
  if (r["eta"].get<double>() < 0) fail("eta", "must be non-negative");
  if (r["T"].get<double>() < 0) fail("T", "must be non-negative");

  // potential
  json pot = in.value("potential", json("quadratic"));
  if (pot.is_string()) pot = json{{"name", pot.get<std::string>()}};
  if (pot.is_object() && !pot.contains("name")) pot["name"] = "quadratic";
  if (!pot.is_object() || !pot.contains("name") || !pot["name"].is_string())
    fail("potential", "expected a name or an object with 'name'");
  std::string pname = pot["name"].get<std::string>();
  json rp{{"name", pname}};
  if (pname == "quadratic") {
    rp["m"] = get_num(pot, "m", r["m"].get<double>());
    rp["omega"] = get_num(pot, "omega", r["omega"].get<double>());
  } else if (pname == "asymmetric_well") {
    rp["m"] = get_num(pot, "m", 10.0);
    rp["w"] = get_num(pot, "w", 2.0);
    rp["a"] = get_num(pot, "a", 0.5);
  } else if (pname == "constant") {
    rp["c"] = get_num(pot, "c", 0.0);
  } else if (std::find(catalog_names().begin(), catalog_names().end(), pname) == catalog_names().end()) {
    fail("potential", "unknown potential '" + pname + "'");
  }
  r["potential"] = rp;

  // time stepping
  const bool steady = in.value("steady_stop", false);
  if (steady && alg != "qld" && !td && alg != "fpe")
    fail("steady_stop", "only supported for qld, qld_time_dependent and fpe");
  double t_f = get_num(in, "t_f", alg == "bath" || steady ? 100.0 : 10.0);
  if (!(t_f > 0)) fail("t_f", "must be positive");
  if (steady && t_f > 100.0) fail("t_f", "steady-state runs are capped at t_f <= 100");
  r["t_f"] = t_f;
  double dt_default = 0.05 * dx * dx;
  if (alg == "fpe") dt_default = 0.5 * dx * dx;
  if (alg == "qhd" || alg == "bath") dt_default = 0.0;  // chosen from the spectral radius
  if (alg == "sgd" || alg == "nagd") dt_default = 0.0;  // step size is 's'
  r["dt"] = get_num(in, "dt", dt_default);
  if (r["dt"].get<double>() < 0) fail("dt", "must be non-negative");
  r["record_stride"] = static_cast<std::int64_t>(get_num(in, "record_stride", 100));
  if (r["record_stride"].get<std::int64_t>() < 1) fail("record_stride", "must be >= 1");
  r["epsilon"] = get_num(in, "epsilon", 0.15);
  if (!(r["epsilon"].get<double>() >= 0)) fail("epsilon", "must be non-negative");
  r["seed"] = static_cast<std::uint64_t>(get_num(in, "seed", 0));
  r["steady_stop"] = steady;
  r["min_eig"] = in.value("min_eig", true);

  if (alg == "qld" || td) {
    r["schedule_stride"] = static_cast<std::int64_t>(get_num(in, "schedule_stride", 64));
    if (td) {
      r["schedule_hbar"] = detail::curve_json(in.value("schedule_hbar", json("preset")), "hbar", t_f);
      r["schedule_T"] = detail::curve_json(in.value("schedule_T", json("preset")), "T", t_f);
    }
    json init = in.value("initial", json("approx_uniform"));
    if (init.is_string()) init = json{{"kind", init.get<std::string>()}};
    std::string kind = init.value("kind", "approx_uniform");
    json ri{{"kind", kind}};
    if (kind == "gaussian") {
      ri["x1"] = get_num(init, "x1", 0.6);
      ri["sigma"] = get_num(init, "sigma", 0.08);
      if (!(ri["sigma"].get<double>() > 0)) fail("initial", "gaussian sigma must be positive");
    } else if (kind != "approx_uniform" && kind != "mirrored_ground") {
      fail("initial", "unknown kind '" + kind + "'");
    }
    r["initial"] = ri;
  }
  if (alg == "fpe") {
    r["gamma"] = get_num(in, "gamma", 2.0 * r["m"].get<double>() * 20.0);
    detail::require_positive(r, "gamma");
  }
  if (alg == "sgd" || alg == "nagd") {
    r["s"] = get_num(in, "s", 0.05 * dx * dx);
    detail::require_positive(r, "s");
    if (!in.contains("record_stride")) {
      // about one hundred snapshots per run
      auto steps = static_cast<std::int64_t>(std::llround(t_f / r["s"].get<double>()));
      r["record_stride"] = std::max<std::int64_t>(1, steps / 100);
    }
    r["samples"] = static_cast<std::int64_t>(get_num(in, "samples", 20000));
    if (r["samples"].get<std::int64_t>() < 1) fail("samples", "must be >= 1");
    if (alg == "sgd") {
      if (!in.contains("sigma")) fail("sigma", "sgd requires sigma");
      r["sigma"] = get_num(in, "sigma", 1.0);
      if (r["sigma"].get<double>() < 0) fail("sigma", "must be non-negative");
    }
  }
  if (alg == "qhd") {
    r["s1"] = get_num(in, "s1", 0.01);
    r["s2"] = get_num(in, "s2", 0.01);
    detail::require_positive(r, "s1");
    detail::require_positive(r, "s2");
  }
  if (alg == "bath") {
    json osc = in.value("oscillators", json{{"omega", json::array({0.905 * 2.0})}});
    json ro;
    ro["mass"] = get_num(osc, "mass", 1.0);
    ro["k_scale"] = get_num(osc, "k_scale", 1.0);
    if (osc.contains("omega")) {
      if (!osc["omega"].is_array()) fail("oscillators", "'omega' must be a list");
      ro["omega"] = osc["omega"];
    } else {
      ro["count"] = static_cast<std::int64_t>(get_num(osc, "count", 1));
      ro["omega_lo"] = get_num(osc, "omega_lo", 0.7 * 2.0);
      ro["omega_hi"] = get_num(osc, "omega_hi", 1.3 * 2.0);
    }
    r["oscillators"] = ro;
  }
  r["output"] = in.value("output", std::string("results"));

  ExperimentConfig c;
  c.resolved = r;
  c.hash = config_hash(r);
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw config_error("cannot open config file: " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw config_error("config parse error in " + path + ": " + e.what());
  }
}

// Dotted paths address nested fields, e.g. "potential.omega".
inline void set_path(json& j, const std::string& path, const json& v) {
  json* cur = &j;
  std::stringstream ss(path);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (cur->contains(parts[i]) && (*cur)[parts[i]].is_string())
      (*cur)[parts[i]] = json{{"name", (*cur)[parts[i]]}};
    cur = &(*cur)[parts[i]];
  }
  (*cur)[parts.back()] = v;
}

// Cartesian product over the lists in "sweep"; one resolved config per point.
inline std::vector<ExperimentConfig> expand_sweep(const json& in) {
  json base = in;
  json sweep = base.contains("sweep") ? base["sweep"] : json::object();
  base.erase("sweep");
  // sweep points run to steady state unless told otherwise
  if (in.contains("sweep") && !base.contains("steady_stop") && base.contains("algorithm") &&
      base["algorithm"].is_string()) {
    std::string a = base["algorithm"].get<std::string>();
    if (a == "qld" || a == "qld_time_dependent" || a == "fpe") base["steady_stop"] = true;
  }
  if (!sweep.is_object()) throw config_error("config field 'sweep': expected an object of lists");
  std::vector<json> points{base};
  for (auto it = sweep.begin(); it != sweep.end(); ++it) {
    if (!it.value().is_array() || it.value().empty())
      throw config_error("config field 'sweep." + it.key() + "': expected a non-empty list");
    for (const auto& v : it.value())
      if (v.is_object() || v.is_array())
        throw config_error("config field 'sweep." + it.key() + "': values must be scalars");
    std::vector<json> next;
    for (const auto& p : points)
      for (const auto& v : it.value()) {
        json q = p;
        set_path(q, it.key(), v);
        next.push_back(q);
      }
    points = std::move(next);
  }
  std::vector<ExperimentConfig> out;
  for (const auto& p : points) out.push_back(resolve_config(p));
  return out;
}

inline ExperimentConfig parse_config(const std::string& path) {
  json j = read_json_file(path);
  if (j.contains("sweep")) {
    auto all = expand_sweep(j);
    if (all.size() != 1) throw config_error("config has a sweep; use the sweep command");
    return all.front();
  }
  return resolve_config(j);
}

inline Grid grid_of(const ExperimentConfig& c) {
  const auto& r = c.resolved;
  return build_grid(r["n"].get<std::size_t>(), r["domain"][0].get<double>(), r["domain"][1].get<double>());
}

inline Potential potential_of(const ExperimentConfig& c) {
  const auto& p = c.resolved.at("potential");
  PotentialSpec s;
  s.name = p["name"].get<std::string>();
  s.m = p.value("m", 1.0);
  s.omega = p.value("omega", 1.0);
  s.w = p.value("w", 2.0);
  s.a = p.value("a", 0.5);
  s.c = p.value("c", 0.0);
  return potential_by_name(s);
}

inline PhysicalParams params_of(const ExperimentConfig& c) {
  const auto& r = c.resolved;
  PhysicalParams p;
  p.hbar = r["hbar"];
  p.m = r["m"];
  p.omega = r["omega"];
  p.eta = r["eta"];
  p.k = r["k"];
  p.T = r["T"];
  return p;
}

inline Schedule schedule_of(const ExperimentConfig& c) {
  Schedule s;
  s.base = params_of(c);
  if (c.resolved.contains("schedule_hbar")) s.hbar = curve_from_json(c.resolved["schedule_hbar"]);
  if (c.resolved.contains("schedule_T")) s.T = curve_from_json(c.resolved["schedule_T"]);
  return s;
}

}  // namespace qld::bench
