#pragma once

#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "grid.hpp"
#include "potentials.hpp"

namespace qld {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Shortest round-trip decimal form.
inline std::string num_str(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Observables {
  double V = kNaN;
  double Ek = kNaN;
  double H = kNaN;
  double x = kNaN;
  double x2 = kNaN;
  double xp = kNaN;  // <xp + px>
  double success = kNaN;
  double loss = kNaN;
  double min_eig = kNaN;
};

struct Trajectory {
  std::string algorithm;
  std::string config_hash;
  unsigned long long seed = 0;
  std::vector<double> times;
  std::vector<Observables> obs;
  std::vector<Vec> distributions;
  std::vector<double> hbar;         // parameter snapshot per record (time-dependent runs)
  std::vector<double> trace_drift;  // |tr - 1| of the step ending at each record
  std::vector<std::string> diagnostics;

  void push(double t, const Observables& o, Vec dist) {
    times.push_back(t);
    obs.push_back(o);
    distributions.push_back(std::move(dist));
  }
  std::size_t size() const { return times.size(); }
  const Observables& back() const { return obs.back(); }
};

inline double success_probability(const Vec& nodes, const Vec& mass, double x_star,
                                  double epsilon = 0.15) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < nodes.size(); ++i)
    if (std::abs(nodes[i] - x_star) <= epsilon) s += mass[i];
  return s;
}

inline double success_probability(const std::vector<double>& samples, double x_star,
                                  double epsilon = 0.15) {
  if (samples.empty()) return 0.0;
  std::size_t hit = 0;
  for (double x : samples)
    if (std::abs(x - x_star) <= epsilon) ++hit;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

inline double loss(double V_mean, const Potential& pot) { return V_mean - pot.v_star; }

struct PositivityResult {
  double min_eigenvalue = 0.0;
  bool pass = true;
};

inline PositivityResult positivity_check(const CMat& rho, double tol = 1e-6) {
  Eigen::SelfAdjointEigenSolver<CMat> es(rho, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("positivity_check: eigensolver failed");
  PositivityResult r;
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  r.pass = r.min_eigenvalue >= -tol;
  return r;
}

// Quantum expectations with the same D/L matrices used by the generator.
// rho carries the dx factor already, so trace(rho) = 1.
inline Observables expectations(const CMat& rho, const Grid& g, const Potential& pot,
                                double hbar, double m, double epsilon = 0.15) {
  if (rho.rows() != static_cast<Eigen::Index>(g.n) || rho.cols() != rho.rows())
    throw std::invalid_argument("expectations: dimension mismatch");
  const Eigen::Index n = rho.rows();
  const double idx2 = 1.0 / (g.dx * g.dx);
  const double i2dx = 1.0 / (2.0 * g.dx);
  Observables o;
  double V = 0, x1 = 0, x2 = 0, lap = 0;
  cplx xd(0.0, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double xi = g.nodes[i];
    double p = rho(i, i).real();
    V += pot.value(xi) * p;
    x1 += xi * p;
    x2 += xi * xi * p;
    // tr(L rho) and tr((XD + DX) rho), tridiagonal stencils
    cplx l = -2.0 * idx2 * rho(i, i);
    if (i > 0) {
      l += idx2 * rho(i - 1, i);
      xd += -(xi + g.nodes[i - 1]) * i2dx * rho(i - 1, i);
    }
    if (i + 1 < n) {
      l += idx2 * rho(i + 1, i);
      xd += (xi + g.nodes[i + 1]) * i2dx * rho(i + 1, i);
    }
    lap += l.real();
  }
  o.V = V;
  o.Ek = -hbar * hbar / (2.0 * m) * lap;
  o.H = o.V + o.Ek;
  o.x = x1;
  o.x2 = x2;
  // P = -i hbar D
  o.xp = (cplx(0.0, -hbar) * xd).real();
  Vec diag = rho.diagonal().real();
  o.success = success_probability(g.nodes, diag, pot.x_star, epsilon);
  o.loss = loss(o.V, pot);
  return o;
}

// Classical distribution: mass per node summing to one.
inline Observables expectations(const Vec& mass, const Grid& g, const Potential& pot,
                                double epsilon = 0.15) {
  if (mass.size() != static_cast<Eigen::Index>(g.n))
    throw std::invalid_argument("expectations: dimension mismatch");
  Observables o;
  double V = 0, x1 = 0, x2 = 0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    double xi = g.nodes[i];
    V += pot.value(xi) * mass[i];
    x1 += xi * mass[i];
    x2 += xi * xi * mass[i];
  }
  o.V = V;
  o.H = V;
  o.x = x1;
  o.x2 = x2;
  o.success = success_probability(g.nodes, mass, pot.x_star, epsilon);
  o.loss = loss(V, pot);
  return o;
}

inline Observables expectations(const std::vector<double>& samples, const Potential& pot,
                                double epsilon = 0.15) {
  Observables o;
  double V = 0, x1 = 0, x2 = 0;
  for (double x : samples) {
    V += pot.value(x);
    x1 += x;
    x2 += x * x;
  }
  double inv = samples.empty() ? 0.0 : 1.0 / static_cast<double>(samples.size());
  o.V = V * inv;
  o.H = o.V;
  o.x = x1 * inv;
  o.x2 = x2 * inv;
  o.success = success_probability(samples, pot.x_star, epsilon);
  o.loss = loss(o.V, pot);
  return o;
}

// Histogram of samples on the grid cells, normalized to unit mass.
inline Vec histogram(const std::vector<double>& samples, const Grid& g) {
  Vec h = Vec::Zero(static_cast<Eigen::Index>(g.n));
  for (double x : samples) {
    auto i = static_cast<Eigen::Index>(std::floor((x - g.lo) / g.dx));
    if (i < 0) i = 0;
    if (i >= h.size()) i = h.size() - 1;
    h[i] += 1.0;
  }
  if (!samples.empty()) h /= static_cast<double>(samples.size());
  return h;
}

}  // namespace qld
