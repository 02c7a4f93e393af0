#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include "grid.hpp"
#include "lindblad.hpp"
#include "params.hpp"

namespace qld {

struct MomentState {
  double x2 = 0.0;  // <x^2>
  double xp = 0.0;  // <xp + px>
  double p2 = 0.0;  // <p^2>
};

struct MomentSample {
  double t = 0.0;
  MomentState s;
};

inline MomentState moment_rhs(const MomentState& s, const PhysicalParams& p) {
  const auto mn = mu_nu(p);
  const double h2 = p.hbar * p.hbar;
  const double w2 = p.omega * p.omega;
  MomentState d;
  d.x2 = s.xp / p.m - 2.0 * p.eta * s.x2 + 2.0 * h2 * mn.nu2;
  d.xp = 2.0 / p.m * s.p2 - 2.0 * p.m * w2 * s.x2 - 2.0 * p.eta * s.xp;
  d.p2 = -p.m * w2 * s.xp - 2.0 * p.eta * s.p2 + 2.0 * h2 * mn.mu2;
  return d;
}

inline std::vector<MomentSample> integrate_moments(const MomentState& init, const PhysicalParams& p,
                                                   double t_f, double dt,
                                                   std::size_t record_stride = 1) {
  p.validate();
  if (!(dt > 0) || dt * p.omega >= 0.1)
    throw config_error("integrate_moments: need 0 < dt * omega < 0.1");
  if (record_stride == 0) record_stride = 1;
  auto axpy = [](const MomentState& a, double h, const MomentState& b) {
    return MomentState{a.x2 + h * b.x2, a.xp + h * b.xp, a.p2 + h * b.p2};
  };
  const auto steps = static_cast<std::size_t>(std::llround(t_f / dt));
  std::vector<MomentSample> out;
  out.push_back({0.0, init});
  MomentState s = init;
  for (std::size_t k = 0; k < steps; ++k) {
    MomentState k1 = moment_rhs(s, p);
    MomentState k2 = moment_rhs(axpy(s, 0.5 * dt, k1), p);
    MomentState k3 = moment_rhs(axpy(s, 0.5 * dt, k2), p);
    MomentState k4 = moment_rhs(axpy(s, dt, k3), p);
    s.x2 += dt / 6.0 * (k1.x2 + 2 * k2.x2 + 2 * k3.x2 + k4.x2);
    s.xp += dt / 6.0 * (k1.xp + 2 * k2.xp + 2 * k3.xp + k4.xp);
    s.p2 += dt / 6.0 * (k1.p2 + 2 * k2.p2 + 2 * k3.p2 + k4.p2);
    if ((k + 1) % record_stride == 0 || k + 1 == steps)
      out.push_back({static_cast<double>(k + 1) * dt, s});
  }
  return out;
}

// Diffusion constant of the steady state.
inline double moment_diffusion(const PhysicalParams& p) {
  const auto mn = mu_nu(p);
  const double h2 = p.hbar * p.hbar;
  return 4.0 / (p.m * p.m) * mn.mu2 * h2 + 4.0 * (p.omega * p.omega + 2 * p.eta * p.eta) * mn.nu2 * h2;
}

struct SteadyValues {
  double V = 0.0;
  double Ek = 0.0;
};

inline SteadyValues steady_values(const PhysicalParams& p) {
  if (!(p.eta > 0)) throw config_error("steady_values: eta must be positive");
  const auto mn = mu_nu(p);
  const double D = moment_diffusion(p);
  const double w2 = p.omega * p.omega, e2 = p.eta * p.eta;
  SteadyValues s;
  s.V = 0.5 * p.m * w2 * D / (8.0 * p.eta * (w2 + e2));
  s.Ek = p.m * (2 * e2 + w2) * D / (16.0 * p.eta * (w2 + e2)) - p.m * p.hbar * p.hbar * mn.nu2 * p.eta;
  return s;
}

inline MomentState steady_moments(const PhysicalParams& p) {
  const auto sv = steady_values(p);
  const auto mn = mu_nu(p);
  MomentState s;
  s.x2 = 2.0 * sv.V / (p.m * p.omega * p.omega);
  s.p2 = 2.0 * p.m * sv.Ek;
  s.xp = p.m * (2.0 * p.eta * s.x2 - 2.0 * p.hbar * p.hbar * mn.nu2);
  return s;
}

inline MomentState moments_of(const DensityMatrix& rho, const Grid& g, double hbar, double m) {
  // the potential only enters V, which is not needed here
  static const Potential zero = make_constant(0.0);
  auto o = expectations(rho, g, zero, hbar, m);
  return {o.x2, o.xp, 2.0 * m * o.Ek};
}

inline DensityMatrix harmonic_ground_density(const Grid& g, double m, double omega, double hbar) {
  const double sigma = std::sqrt(hbar / (2.0 * m * omega));
  if (sigma < 4.0 * g.dx) throw config_error("harmonic_ground_density: width under 4 cells");
  if (-4.0 * sigma <= g.lo || 4.0 * sigma >= g.hi)
    throw config_error("harmonic_ground_density: 4 sigma not inside the domain");
  CVec psi(g.nodes.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double x = g.nodes[i];
    psi[i] = std::exp(-m * omega * x * x / (2.0 * hbar));
  }
  return pure_density(psi);
}

namespace detail {

struct Eig {
  Vec values;
  CMat vectors;
};

inline Eig hermitian_eig(const CMat& a) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline CMat psd_sqrt(const CMat& a) {
  auto e = hermitian_eig(0.5 * (a + a.adjoint()));
  Vec s = e.values.unaryExpr([](double l) { return l < 1e-10 ? 0.0 : std::sqrt(l); });
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

}  // namespace detail

// Tr sqrt(sqrt(a) b sqrt(a)) is the sum of singular values of sqrt(a) sqrt(b).
inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("fidelity: dimension mismatch");
  CMat M = detail::psd_sqrt(a) * detail::psd_sqrt(b);
  Eigen::JacobiSVD<CMat> svd(M);
  double tr = svd.singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

// D(a||b) = Tr a (log a - log b), eigenvalues floored at `floor`.
// Returns +inf when more than `support_tol` of a's mass sits where b is below the floor.
inline double relative_entropy(const DensityMatrix& a, const DensityMatrix& b, double floor = 1e-12,
                               double support_tol = 1e-2) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("relative_entropy: dimension mismatch");
  auto ea = detail::hermitian_eig(0.5 * (a + a.adjoint()));
  auto eb = detail::hermitian_eig(0.5 * (b + b.adjoint()));
  double s_a = 0.0;
  for (Eigen::Index i = 0; i < ea.values.size(); ++i) {
    double l = std::max(ea.values[i], floor);
    s_a += l * std::log(l);
  }
  // Tr(a log b) in b's eigenbasis
  CMat ab = eb.vectors.adjoint() * a * eb.vectors;
  double cross = 0.0, outside = 0.0;
  for (Eigen::Index i = 0; i < eb.values.size(); ++i) {
    double w = ab(i, i).real();
    if (eb.values[i] < floor) outside += w;
    cross += w * std::log(std::max(eb.values[i], floor));
  }
  if (outside > support_tol) return std::numeric_limits<double>::infinity();
  return std::max(0.0, s_a - cross);
}

struct OscillationFit {
  double decay = 0.0;      // gamma in exp(-gamma t)
  double frequency = 0.0;  // angular
  double A = 0.0, B = 0.0, C = 0.0;
  double rms = 0.0;
  bool ok = false;
};

// Fits y(t) = exp(-gamma t) (A + B cos(w t) + C sin(w t)). A, B, C are eliminated by
// linear least squares, so only (gamma, w) are iterated.
inline OscillationFit fit_damped_oscillation(const std::vector<double>& t, const std::vector<double>& y,
                                             double gamma0, double w0) {
  const auto N = static_cast<Eigen::Index>(t.size());
  auto linear = [&](double gm, double w, Vec& coef) {
    Eigen::MatrixXd A(N, 3);
    Vec b(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      double e = std::exp(-gm * t[i]);
      A(i, 0) = e;
      A(i, 1) = e * std::cos(w * t[i]);
      A(i, 2) = e * std::sin(w * t[i]);
      b[i] = y[i];
    }
    coef = A.colPivHouseholderQr().solve(b);
    return Vec(A * coef - b);
  };
  struct Functor : Eigen::DenseFunctor<double> {
    std::function<Vec(double, double)> f;
    Functor(Eigen::Index m, std::function<Vec(double, double)> fn)
        : Eigen::DenseFunctor<double>(2, static_cast<int>(m)), f(std::move(fn)) {}
    int operator()(const InputType& x, ValueType& r) const {
      r = f(x[0], x[1]);
      return 0;
    }
  };
  double scale = Vec::Map(y.data(), N).cwiseAbs().maxCoeff();
  if (scale == 0) scale = 1;
  Functor fn(N, [&](double gm, double w) {
    Vec c;
    return Vec(linear(gm, w, c) / scale);
  });
  Eigen::NumericalDiff<Functor> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor>> lm(nd);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(4000);
  Vec x(2);
  x << gamma0, w0;
  auto status = lm.minimize(x);
  OscillationFit out;
  Vec c;
  Vec r = linear(x[0], x[1], c);
  out.decay = x[0];
  out.frequency = std::abs(x[1]);
  out.A = c[0];
  out.B = c[1];
  out.C = c[2];
  out.rms = std::sqrt(r.squaredNorm() / static_cast<double>(N));
  out.ok = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
  return out;
}

}  // namespace qld
