#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../metrics.hpp"

namespace qld::bench {

inline const char* kTrajectoryHeader =
    "t,V_mean,Ek_mean,H_mean,x_mean,x2_mean,xp_anticomm,success_prob,loss,min_eig";

// Shortest representation that parses back to the same double; NaN becomes an empty field.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_field(const std::string& s) {
  if (s.empty()) return kNaN;
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw std::runtime_error("csv: bad number '" + s + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto& o = tr.obs[i];
    os << fmt(tr.times[i]) << ',' << fmt(o.V) << ',' << fmt(o.Ek) << ',' << fmt(o.H) << ','
       << fmt(o.x) << ',' << fmt(o.x2) << ',' << fmt(o.xp) << ',' << fmt(o.success) << ','
       << fmt(o.loss) << ',' << fmt(o.min_eig) << '\n';
  }
  return os.str();
}

inline Trajectory parse_trajectory_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || split(line) != split(kTrajectoryHeader))
    throw std::runtime_error("csv: unexpected trajectory header");
  Trajectory tr;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != 10) throw std::runtime_error("csv: expected 10 fields");
    Observables o;
    double* dst[] = {&o.V, &o.Ek, &o.H, &o.x, &o.x2, &o.xp, &o.success, &o.loss, &o.min_eig};
    for (int k = 0; k < 9; ++k) *dst[k] = parse_field(f[static_cast<std::size_t>(k) + 1]);
    tr.times.push_back(parse_field(f[0]));
    tr.obs.push_back(o);
  }
  return tr;
}

// One row per recorded time: t followed by the distribution over nodes.
inline std::string distributions_csv(const Trajectory& tr, const Vec& nodes) {
  std::ostringstream os;
  os << "t";
  for (Eigen::Index i = 0; i < nodes.size(); ++i) os << ",x=" << fmt(nodes[i]);
  os << '\n';
  for (std::size_t r = 0; r < tr.distributions.size(); ++r) {
    os << fmt(tr.times[r]);
    for (Eigen::Index i = 0; i < tr.distributions[r].size(); ++i) os << ',' << fmt(tr.distributions[r][i]);
    os << '\n';
  }
  return os.str();
}

struct Distributions {
  std::vector<double> nodes;
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
};

inline Distributions parse_distributions_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Distributions d;
  if (!std::getline(is, line)) throw std::runtime_error("csv: empty distributions file");
  auto head = split(line);
  for (std::size_t i = 1; i < head.size(); ++i) d.nodes.push_back(parse_field(head[i].substr(2)));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    d.times.push_back(parse_field(f[0]));
    std::vector<double> row;
    for (std::size_t i = 1; i < f.size(); ++i) row.push_back(parse_field(f[i]));
    d.rows.push_back(std::move(row));
  }
  return d;
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline void write_text(const std::string& path, const std::string& s) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << s;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace qld::bench
