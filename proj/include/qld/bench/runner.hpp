#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "../classical.hpp"
#include "../lindblad.hpp"
#include "../schrodinger.hpp"
#include "config.hpp"
#include "io.hpp"
#include "svg.hpp"

namespace qld::bench {

namespace fs = std::filesystem;

struct RunOptions {
  std::string out_root = "results";
  bool force = false;
  std::size_t threads = 0;  // ensemble threads inside one run
};

struct RunResult {
  std::string config_hash;
  fs::path dir;
  fs::path trajectory_csv;
  fs::path distributions_csv;
  fs::path summary_json;
  json summary;
  bool cache_hit = false;
};

struct run_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<BathOscillator> oscillators_of(const ExperimentConfig& c) {
  const json& o = c.resolved.at("oscillators");
  std::vector<double> omegas;
  if (o.contains("omega")) {
    for (const auto& w : o["omega"]) omegas.push_back(w.get<double>());
  } else {
    std::mt19937_64 rng(c.resolved["seed"].get<std::uint64_t>());
    std::uniform_real_distribution<double> u(o["omega_lo"].get<double>(), o["omega_hi"].get<double>());
    for (std::int64_t i = 0; i < o["count"].get<std::int64_t>(); ++i) omegas.push_back(u(rng));
  }
  std::vector<BathOscillator> out;
  for (double w : omegas) {
    BathOscillator b;
    b.omega = w;
    b.mass = o["mass"].get<double>();
    b.k = o["k_scale"].get<double>() * b.mass * w * w;
    out.push_back(b);
  }
  return out;
}

// Runs the engine selected by the config and returns its trajectory.
inline Trajectory run_engine(const ExperimentConfig& c, std::size_t threads = 0) {
  const json& r = c.resolved;
  const std::string alg = c.algorithm();
  const Grid g = grid_of(c);
  const Potential pot = potential_of(c);
  const double eps = r["epsilon"];
  const double dt = r["dt"];
  const double t_f = r["t_f"];
  const auto stride = r["record_stride"].get<std::size_t>();

  if (alg == "qld" || alg == "qld_time_dependent") {
    Schedule s = schedule_of(c);
    InitialState init;
    const std::string kind = r["initial"]["kind"];
    if (kind == "gaussian") {
      init.kind = InitialState::Kind::gaussian;
      init.x1 = r["initial"]["x1"];
      init.sigma = r["initial"]["sigma"];
    } else if (kind == "mirrored_ground") {
      init.kind = InitialState::Kind::mirrored_ground;
      init.hbar = s.at(0).hbar;
      init.m = s.base.m;
    }
    QldOptions o;
    o.dt = dt;
    o.t_f = t_f;
    o.record_stride = stride;
    o.schedule_stride = r["schedule_stride"].get<std::size_t>();
    o.epsilon = eps;
    o.min_eig = r["min_eig"];
    o.stop_tol = r["steady_stop"].get<bool>() ? 1e-7 : 0.0;
    return evolve_qld(g, pot, s, initial_density(g, init, &pot), o);
  }
  if (alg == "fpe") {
    FpeOptions o;
    o.gamma = r["gamma"];
    o.kT = r["k"].get<double>() * r["T"].get<double>();
    o.dt = dt;
    o.t_f = t_f;
    o.record_stride = stride;
    o.epsilon = eps;
    o.stop_tol = r["steady_stop"].get<bool>() ? 1e-7 : 0.0;
    Vec rho0 = approx_uniform_density(g).diagonal().real();
    return evolve_fpe(g, pot, rho0, o);
  }
  if (alg == "qhd") {
    QhdOptions o;
    o.s1 = r["s1"];
    o.s2 = r["s2"];
    o.dt = dt;
    o.t_f = t_f;
    o.record_stride = stride;
    o.epsilon = eps;
    return qhd_evolve(g, pot, o);
  }
  if (alg == "qaa") {
    QaaOptions o;
    o.dt = dt;
    o.t_f = t_f;
    o.record_stride = stride;
    o.epsilon = eps;
    return qaa_evolve(g, pot, o);
  }
  if (alg == "sgd" || alg == "nagd") {
    EnsembleOptions o;
    o.s = r["s"];
    o.sigma = r.value("sigma", 0.0);
    o.samples = r["samples"].get<std::size_t>();
    o.t_f = t_f;
    o.seed = r["seed"];
    o.record_stride = stride;
    o.threads = threads;
    o.epsilon = eps;
    auto e = alg == "sgd" ? sgd_run(g, pot, o) : nagd_run(g, pot, o);
    return e.traj;
  }
  if (alg == "bath") {
    BathOptions o;
    o.hbar = r["hbar"];
    o.m = r["m"];
    o.dt = dt;
    o.t_f = t_f;
    o.record_stride = stride;
    CVec psi0 = mirrored_ground(g, pot, o.hbar, o.m);
    auto bt = bath_evolve(g, pot, oscillators_of(c), psi0, o);
    Trajectory tr;
    tr.algorithm = "bath";
    for (std::size_t i = 0; i < bt.times.size(); ++i) {
      Observables ob;
      ob.success = bt.P[i];
      tr.times.push_back(bt.times[i]);
      tr.obs.push_back(ob);
    }
    tr.diagnostics.push_back("p_max=" + fmt(bt.p_max));
    tr.diagnostics.push_back("t_at_max=" + fmt(bt.t_at_max));
    tr.diagnostics.push_back("max_norm_drift=" + fmt(bt.max_norm_drift));
    return tr;
  }
  throw config_error("unknown algorithm " + alg);
}

inline json summary_of(const ExperimentConfig& c, const Trajectory& tr, double wall) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json s;
  s["config_hash"] = c.hash;
  s["algorithm"] = c.algorithm();
  s["potential"] = c.potential_name();
  s["final_V"] = tr.size() ? num(tr.back().V) : json(nullptr);
  s["final_success"] = tr.size() ? num(tr.back().success) : json(nullptr);
  s["wall_seconds"] = wall;
  s["diagnostics"] = tr.diagnostics;
  return s;
}

inline void write_plots(const fs::path& dir, const Trajectory& tr, const Grid& g) {
  std::vector<double> V, S;
  for (const auto& o : tr.obs) {
    V.push_back(o.V);
    S.push_back(o.success);
  }
  write_text((dir / "V_mean.svg").string(), line_plot("<V>(t)", "t", "<V>", {{"V_mean", tr.times, V}}));
  write_text((dir / "success.svg").string(),
             line_plot("success probability", "t", "Pr", {{"success_prob", tr.times, S}}));
  if (!tr.distributions.empty()) {
    const Vec& d = tr.distributions.back();
    std::vector<double> xs(g.nodes.data(), g.nodes.data() + g.nodes.size());
    std::vector<double> ys(d.data(), d.data() + d.size());
    write_text((dir / "final_distribution.svg").string(),
               line_plot("final distribution", "x", "mass per node", {{"final", xs, ys}}));
  }
}

inline RunResult result_paths(const fs::path& dir, const std::string& hash) {
  RunResult res;
  res.config_hash = hash;
  res.dir = dir;
  res.trajectory_csv = dir / "trajectory.csv";
  res.distributions_csv = dir / "distributions.csv";
  res.summary_json = dir / "summary.json";
  return res;
}

// Writes <out_root>/<hash>/{config.json, trajectory.csv, distributions.csv, summary.json, *.svg}.
// Output goes to a temporary directory first and is moved into place on success.
inline RunResult run_experiment(const ExperimentConfig& c, const RunOptions& opt = {}) {
  const fs::path dir = fs::path(opt.out_root) / c.hash;
  RunResult res = result_paths(dir, c.hash);
  if (!opt.force && fs::exists(res.summary_json)) {
    res.summary = json::parse(read_text(res.summary_json.string()));
    res.cache_hit = true;
    return res;
  }
  static std::atomic<unsigned> counter{0};
  fs::create_directories(opt.out_root);
  const fs::path tmp = fs::path(opt.out_root) /
                       (c.hash + ".tmp" + std::to_string(counter.fetch_add(1)) + "-" +
                        std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  try {
    auto t0 = std::chrono::steady_clock::now();
    Trajectory tr = run_engine(c, opt.threads);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    tr.config_hash = c.hash;
    tr.seed = c.resolved["seed"];
    const Grid g = grid_of(c);
    write_text((tmp / "config.json").string(), c.resolved.dump(2) + "\n");
    write_text((tmp / "trajectory.csv").string(), trajectory_csv(tr));
    if (!tr.distributions.empty())
      write_text((tmp / "distributions.csv").string(), distributions_csv(tr, g.nodes));
    res.summary = summary_of(c, tr, wall);
    write_text((tmp / "summary.json").string(), res.summary.dump(2) + "\n");
    write_plots(tmp, tr, g);
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(tmp, ec);
    throw run_error("run " + c.hash + " failed: " + e.what());
  }
  return res;
}

// Runs every config with up to `workers` concurrent runs; results keep input order.
inline std::vector<RunResult> run_matrix(const std::vector<ExperimentConfig>& configs, const RunOptions& opt,
                                         std::size_t workers, std::vector<std::string>* errors = nullptr) {
  std::vector<RunResult> out(configs.size());
  std::vector<std::string> errs(configs.size());
  std::atomic<std::size_t> next{0};
  if (workers == 0) workers = 1;
  RunOptions inner = opt;
  if (workers > 1) inner.threads = 1;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, configs.size()); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < configs.size();) {
        try {
          out[i] = run_experiment(configs[i], inner);
        } catch (const std::exception& e) {
          errs[i] = e.what();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (errors) *errors = errs;
  return out;
}

}  // namespace qld::bench
