#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "io.hpp"
#include "svg.hpp"

namespace qld::bench {

namespace fs = std::filesystem;

struct LoadedRun {
  fs::path dir;
  json config;
  json summary;
  Trajectory traj;
  Distributions dist;
  bool has_dist = false;

  std::string algorithm() const { return summary.at("algorithm").get<std::string>(); }
  std::string potential() const { return summary.at("potential").get<std::string>(); }
};

inline LoadedRun load_run(const fs::path& dir) {
  LoadedRun r;
  r.dir = dir;
  r.config = json::parse(read_text((dir / "config.json").string()));
  r.summary = json::parse(read_text((dir / "summary.json").string()));
  r.traj = parse_trajectory_csv(read_text((dir / "trajectory.csv").string()));
  if (fs::exists(dir / "distributions.csv")) {
    r.dist = parse_distributions_csv(read_text((dir / "distributions.csv").string()));
    r.has_dist = true;
  }
  return r;
}

struct ReportOptions {
  double epsilon = -1.0;  // < 0 keeps the success values stored with each run
  std::vector<double> slices{0.0, 0.01, 0.1, 1.0, 5.0, 10.0};
};

struct Report {
  std::string success_csv;
  std::string ranking_csv;
  std::string panels_csv;
  std::vector<std::pair<std::string, double>> ranking;  // algorithm, final success
};

inline double mass_within(const std::vector<double>& nodes, const std::vector<double>& row, double xs,
                          double eps) {
  double s = 0;
  for (std::size_t i = 0; i < nodes.size() && i < row.size(); ++i)
    if (std::abs(nodes[i] - xs) <= eps) s += row[i];
  return s;
}

inline std::string run_label(const LoadedRun& r) {
  return r.algorithm() + "[" + r.summary.at("config_hash").get<std::string>().substr(0, 8) + "]";
}

// Pure function of the loaded runs: identical inputs give identical text.
inline Report build_report(const std::vector<LoadedRun>& runs, const ReportOptions& opt = {}) {
  if (runs.empty()) throw config_error("compare: no results given");
  for (const auto& r : runs)
    if (r.potential() != runs.front().potential())
      throw config_error("compare: mismatched potentials (" + runs.front().potential() + " vs " +
                         r.potential() + ")");
  Potential pot;
  {
    ExperimentConfig c;
    c.resolved = runs.front().config;
    pot = potential_of(c);
  }
  std::map<std::string, int> seen;
  for (const auto& r : runs) ++seen[r.algorithm()];
  auto label = [&](const LoadedRun& r) { return seen[r.algorithm()] > 1 ? run_label(r) : r.algorithm(); };

  Report rep;
  std::ostringstream sc;
  sc << "algorithm,t,success_prob\n";
  for (const auto& r : runs) {
    for (std::size_t i = 0; i < r.traj.size(); ++i) {
      double s = r.traj.obs[i].success;
      if (opt.epsilon >= 0 && r.has_dist && i < r.dist.rows.size())
        s = mass_within(r.dist.nodes, r.dist.rows[i], pot.x_star, opt.epsilon);
      sc << label(r) << ',' << fmt(r.traj.times[i]) << ',' << fmt(s) << '\n';
    }
    double fin = r.traj.size() ? r.traj.obs.back().success : kNaN;
    if (opt.epsilon >= 0 && r.has_dist && !r.dist.rows.empty())
      fin = mass_within(r.dist.nodes, r.dist.rows.back(), pot.x_star, opt.epsilon);
    rep.ranking.emplace_back(label(r), fin);
  }
  rep.success_csv = sc.str();
  std::stable_sort(rep.ranking.begin(), rep.ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::ostringstream rc;
  rc << "rank,algorithm,final_success\n";
  for (std::size_t i = 0; i < rep.ranking.size(); ++i)
    rc << i + 1 << ',' << rep.ranking[i].first << ',' << fmt(rep.ranking[i].second) << '\n';
  rep.ranking_csv = rc.str();

  std::ostringstream pc;
  pc << "algorithm,t_slice,t_recorded,x,mass\n";
  for (const auto& r : runs) {
    if (!r.has_dist || r.dist.times.empty()) continue;
    for (double ts : opt.slices) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < r.dist.times.size(); ++i)
        if (std::abs(r.dist.times[i] - ts) < std::abs(r.dist.times[best] - ts)) best = i;
      for (std::size_t k = 0; k < r.dist.nodes.size(); ++k)
        pc << label(r) << ',' << fmt(ts) << ',' << fmt(r.dist.times[best]) << ',' << fmt(r.dist.nodes[k])
           << ',' << fmt(r.dist.rows[best][k]) << '\n';
    }
  }
  rep.panels_csv = pc.str();
  return rep;
}

inline void write_report(const std::vector<LoadedRun>& runs, const fs::path& out,
                         const ReportOptions& opt = {}) {
  Report rep = build_report(runs, opt);
  fs::create_directories(out);
  write_text((out / "success_curves.csv").string(), rep.success_csv);
  write_text((out / "ranking.csv").string(), rep.ranking_csv);
  write_text((out / "panels.csv").string(), rep.panels_csv);

  // success curves on a log time axis
  std::map<std::string, Series> curves;
  std::istringstream is(rep.success_csv);
  std::string line;
  std::getline(is, line);
  std::vector<std::string> order;
  while (std::getline(is, line)) {
    auto f = split(line);
    if (!curves.count(f[0])) order.push_back(f[0]);
    auto& s = curves[f[0]];
    s.name = f[0];
    s.x.push_back(parse_field(f[1]));
    s.y.push_back(parse_field(f[2]));
  }
  std::vector<Series> ser;
  for (const auto& k : order) ser.push_back(curves[k]);
  write_text((out / "success_curves.svg").string(),
             line_plot("success probability", "t", "Pr(|x - x*| <= eps)", ser, true));

  // one panel per time slice
  std::map<std::string, std::map<std::string, Series>> panels;
  std::istringstream ps(rep.panels_csv);
  std::getline(ps, line);
  std::vector<std::string> slice_order;
  while (std::getline(ps, line)) {
    auto f = split(line);
    if (!panels.count(f[1])) slice_order.push_back(f[1]);
    auto& s = panels[f[1]][f[0]];
    s.name = f[0];
    s.x.push_back(parse_field(f[3]));
    s.y.push_back(parse_field(f[4]));
  }
  for (const auto& sl : slice_order) {
    std::vector<Series> v;
    for (const auto& k : order)
      if (panels[sl].count(k)) v.push_back(panels[sl][k]);
    write_text((out / ("panel_t" + sl + ".svg")).string(), line_plot("distribution at t = " + sl, "x", "mass", v));
  }
}

// Cross-landscape table for one algorithm: flags landscapes where the final score falls
// below the minimum over the reference set.
struct LandscapeRow {
  std::string potential;
  double final_success = 0;
  bool degraded = false;
};

inline std::vector<LandscapeRow> landscape_table(const std::vector<LoadedRun>& runs, const std::string& algorithm,
                                                 const std::vector<std::string>& reference) {
  std::vector<LandscapeRow> rows;
  double ref_min = std::numeric_limits<double>::infinity();
  for (const auto& r : runs) {
    if (r.algorithm() != algorithm) continue;
    double s = r.traj.size() ? r.traj.obs.back().success : kNaN;
    rows.push_back({r.potential(), s, false});
    if (std::find(reference.begin(), reference.end(), r.potential()) != reference.end())
      ref_min = std::min(ref_min, s);
  }
  for (auto& row : rows)
    if (std::find(reference.begin(), reference.end(), row.potential) == reference.end())
      row.degraded = row.final_success < ref_min;
  return rows;
}

inline std::string landscape_csv(const std::vector<LandscapeRow>& rows) {
  std::ostringstream os;
  os << "potential,final_success,degraded\n";
  for (const auto& r : rows) os << r.potential << ',' << fmt(r.final_success) << ',' << (r.degraded ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace qld::bench
