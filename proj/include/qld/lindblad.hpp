#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "grid.hpp"
#include "metrics.hpp"
#include "params.hpp"
#include "potentials.hpp"
#include "schrodinger.hpp"

namespace qld {

using DensityMatrix = CMat;
using RowCMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Y(t) = Y_l + (Y_u - Y_l) / (1 + exp(k (t - tau))), or a constant.
struct Curve {
  enum class Kind { constant, inverted_sigmoid } kind = Kind::constant;
  double c = 0.0;
  double yl = 0.0, yu = 0.0, k = 0.0, tau = 0.0;

  static Curve constant(double v) {
    Curve s;
    s.c = v;
    return s;
  }
  static Curve inverted_sigmoid(double yl, double yu, double k, double tau) {
    Curve s;
    s.kind = Kind::inverted_sigmoid;
    s.yl = yl;
    s.yu = yu;
    s.k = k;
    s.tau = tau;
    return s;
  }
  double operator()(double t) const {
    if (kind == Kind::constant) return c;
    return yl + (yu - yl) / (1.0 + std::exp(k * (t - tau)));
  }
};

inline Curve hbar_preset(double t_f) { return Curve::inverted_sigmoid(0.5, 25.0, 1.2, 0.4 * t_f); }
inline Curve temperature_preset(double t_f) {
  return Curve::inverted_sigmoid(2.0, 3000.0, 1.2, 0.52 * t_f);
}

inline double schedule_eval(const Curve& c, double t) { return c(t); }

struct Schedule {
  PhysicalParams base;
  std::optional<Curve> hbar;
  std::optional<Curve> T;
  std::optional<Curve> eta;

  bool time_dependent() const { return hbar || T || eta; }
  PhysicalParams at(double t) const {
    PhysicalParams p = base;
    if (hbar) p.hbar = (*hbar)(t);
    if (T) p.T = (*T)(t);
    if (eta) p.eta = (*eta)(t);
    return p;
  }
};

namespace detail {

using Trip = Eigen::Triplet<cplx>;

// Appends coeff * (A kron B) in the row-major vectorization index i*n + j.
inline void kron_add(std::vector<Trip>& out, const RealSparse& A, const RealSparse& B, cplx coeff) {
  const Eigen::Index n = B.rows();
  for (Eigen::Index ca = 0; ca < A.outerSize(); ++ca)
    for (RealSparse::InnerIterator ia(A, ca); ia; ++ia)
      for (Eigen::Index cb = 0; cb < B.outerSize(); ++cb)
        for (RealSparse::InnerIterator ib(B, cb); ib; ++ib)
          out.emplace_back(ia.row() * n + ib.row(), ca * n + cb, coeff * ia.value() * ib.value());
}

}  // namespace detail

struct QldGenerator {
  ComplexSparse op;
  PhysicalParams params;
  std::size_t n = 0;
};

// d rho / dt = G rho with rho(x_i, x_j) stored at i*n + j.
inline QldGenerator assemble_generator(const Grid& g, const Potential& pot, const PhysicalParams& p) {
  p.validate();
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto mn = mu_nu(p);
  auto ops = diff_operators(g);
  RealSparse I = identity_sparse(n);
  RealSparse X = diag_sparse(g.nodes);
  RealSparse H = (-p.hbar * p.hbar / (2.0 * p.m)) * ops.L + diag_sparse(pot.sample(g));
  const cplx mi(0.0, -1.0 / p.hbar);
  const double nh = mn.nu2 * p.hbar * p.hbar;

  std::vector<detail::Trip> t;
  t.reserve(static_cast<std::size_t>(n * n) * 20);
  detail::kron_add(t, H, I, mi);
  detail::kron_add(t, I, H, -mi);
  detail::kron_add(t, X, ops.D, p.eta);
  detail::kron_add(t, ops.D, X, p.eta);
  detail::kron_add(t, ops.L, I, nh);
  detail::kron_add(t, ops.D, ops.D, 2.0 * nh);
  detail::kron_add(t, I, ops.L, nh);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double d = g.nodes[i] - g.nodes[j];
      t.emplace_back(i * n + j, i * n + j, -mn.mu2 * d * d + p.eta);
    }
  QldGenerator G;
  G.op.resize(n * n, n * n);
  G.op.setFromTriplets(t.begin(), t.end());
  G.op.makeCompressed();
  G.params = p;
  G.n = g.n;
  return G;
}

inline CVec vectorize(const DensityMatrix& rho) {
  RowCMat r = rho;
  return Eigen::Map<const CVec>(r.data(), r.size());
}

inline DensityMatrix devectorize(const CVec& v, Eigen::Index n) {
  return Eigen::Map<const RowCMat>(v.data(), n, n);
}

inline DensityMatrix pure_density(const CVec& psi) {
  CVec u = psi / psi.norm();
  return u * u.adjoint();
}

inline DensityMatrix approx_uniform_density(const Grid& g) {
  CVec psi(g.nodes.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double x = g.nodes[i];
    double q = -0.4742 * std::pow(x, 10) - 0.0063 * x * x + 0.4903;
    psi[i] = std::abs(q);  // sqrt of q^2
  }
  return pure_density(psi);
}

inline DensityMatrix gaussian_density(const Grid& g, double x1, double sigma) {
  if (!(sigma > 0)) throw config_error("gaussian: sigma must be positive");
  CVec psi(g.nodes.size());
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    double d = g.nodes[i] - x1;
    psi[i] = std::exp(-d * d / (2.0 * sigma * sigma));
  }
  return pure_density(psi);
}

struct InitialState {
  enum class Kind { approx_uniform, gaussian, mirrored_ground } kind = Kind::approx_uniform;
  double x1 = 0.6;
  double sigma = 0.08;
  double hbar = 1.0;  // mirrored_ground only
  double m = 1.0;
};

inline DensityMatrix initial_density(const Grid& g, const InitialState& s,
                                     const Potential* pot = nullptr) {
  switch (s.kind) {
    case InitialState::Kind::approx_uniform:
      return approx_uniform_density(g);
    case InitialState::Kind::gaussian:
      return gaussian_density(g, s.x1, s.sigma);
    case InitialState::Kind::mirrored_ground:
      if (!pot) throw config_error("mirrored_ground needs a potential");
      return pure_density(mirrored_ground(g, *pot, s.hbar, s.m));
  }
  throw config_error("initial_density: unknown kind");
}

struct factorization_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct positivity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string describe(const PhysicalParams& p) {
  std::ostringstream os;
  os.precision(10);
  os << "hbar=" << p.hbar << " m=" << p.m << " omega=" << p.omega << " eta=" << p.eta
     << " k=" << p.k << " T=" << p.T;
  return os.str();
}

// Cached LU of (I - dt G); immutable once built.
class ImplicitEulerStepper {
 public:
  ImplicitEulerStepper(const QldGenerator& G, double dt) : dt_(dt), params_(G.params), n_(G.n) {
    ComplexSparse A(G.op.rows(), G.op.cols());
    A.setIdentity();
    A -= dt * G.op;
    A.makeCompressed();
    lu_.analyzePattern(A);
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success)
      throw factorization_error("implicit Euler: singular factorization (" + describe(params_) +
                                " dt=" + num_str(dt) + ")");
  }
  CVec step(const CVec& v) const { return lu_.solve(v); }
  double dt() const { return dt_; }
  const PhysicalParams& params() const { return params_; }

 private:
  double dt_;
  PhysicalParams params_;
  std::size_t n_;
  // solve() is const in Eigen; the factorization is never modified after construction
  Eigen::SparseLU<ComplexSparse, Eigen::COLAMDOrdering<int>> lu_;
};

// Hermitize in place; returns the trace before renormalization.
inline double enforce_density(CVec& v, Eigen::Index n) {
  double tr = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i * n + i] = v[i * n + i].real();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      cplx a = 0.5 * (v[i * n + j] + std::conj(v[j * n + i]));
      v[i * n + j] = a;
      v[j * n + i] = std::conj(a);
    }
    tr += v[i * n + i].real();
  }
  v /= tr;
  return tr;
}

struct QldOptions {
  double dt = 0.0;  // 0 selects 0.05 dx^2
  double t_f = 10.0;
  std::size_t record_stride = 100;
  std::size_t schedule_stride = 64;
  double epsilon = 0.15;
  bool min_eig = true;
  double warn_eig = -1e-6;
  double abort_eig = -1e-4;
  double trace_drift_tol = 1e-6;
  double stop_tol = 0.0;  // > 0 stops once successive recorded success values differ less
  std::function<void(double, const DensityMatrix&, const PhysicalParams&)> on_record;
};

inline Trajectory evolve_qld(const Grid& g, const Potential& pot, const Schedule& sched,
                             const DensityMatrix& rho0, const QldOptions& opt) {
  const double dt = opt.dt > 0 ? opt.dt : 0.05 * g.dx * g.dx;
  if (!(opt.t_f > 0)) throw config_error("evolve_qld: t_f must be positive");
  const auto n = static_cast<Eigen::Index>(g.n);
  if (rho0.rows() != n || rho0.cols() != n) throw std::invalid_argument("evolve_qld: rho0 size");
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_f / dt));
  const std::size_t stride = opt.record_stride ? opt.record_stride : 1;
  const std::size_t K = sched.time_dependent() ? std::max<std::size_t>(1, opt.schedule_stride) : 0;

  Trajectory tr;
  tr.algorithm = sched.time_dependent() ? "qld_time_dependent" : "qld";
  std::size_t warn_count = 0, drift_count = 0;
  double max_drift = 0.0, worst_eig = 1.0;

  double last_drift = 0.0;
  auto record = [&](double t, const CVec& v, const PhysicalParams& p) {
    DensityMatrix rho = devectorize(v, n);
    Observables o = expectations(rho, g, pot, p.hbar, p.m, opt.epsilon);
    if (opt.min_eig) {
      o.min_eig = positivity_check(rho).min_eigenvalue;
      worst_eig = std::min(worst_eig, o.min_eig);
      if (o.min_eig < opt.abort_eig)
        throw positivity_error("evolve_qld: min eigenvalue " + num_str(o.min_eig) +
                               " at t=" + num_str(t) + " (" + describe(p) + ")");
      if (o.min_eig < opt.warn_eig) ++warn_count;
    }
    tr.push(t, o, rho.diagonal().real());
    tr.hbar.push_back(p.hbar);
    tr.trace_drift.push_back(last_drift);
    if (opt.on_record) opt.on_record(t, rho, p);
  };

  CVec v = vectorize(rho0);
  enforce_density(v, n);
  PhysicalParams p = sched.at(0.0);
  std::optional<ImplicitEulerStepper> stepper;
  stepper.emplace(assemble_generator(g, pot, p), dt);
  record(0.0, v, p);
  double prev_success = tr.back().success;

  for (std::size_t k = 0; k < steps; ++k) {
    if (K && k > 0 && k % K == 0) {
      p = sched.at(static_cast<double>(k) * dt);
      stepper.emplace(assemble_generator(g, pot, p), dt);
    }
    v = stepper->step(v);
    double tr_before = enforce_density(v, n);
    double drift = std::abs(tr_before - 1.0);
    last_drift = drift;
    max_drift = std::max(max_drift, drift);
    if (drift > opt.trace_drift_tol) ++drift_count;
    const double t = static_cast<double>(k + 1) * dt;
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      record(t, v, p);
      // steady-state rule, applied between successive records
      if (opt.stop_tol > 0) {
        double s = tr.back().success;
        if (std::abs(s - prev_success) < opt.stop_tol) {
          tr.diagnostics.push_back("steady_stop_t=" + num_str(t));
          break;
        }
        prev_success = s;
      }
    }
  }
  tr.diagnostics.push_back("dt=" + num_str(dt));
  tr.diagnostics.push_back("max_trace_drift=" + num_str(max_drift));
  tr.diagnostics.push_back("trace_drift_steps=" + std::to_string(drift_count));
  if (opt.min_eig) {
    tr.diagnostics.push_back("worst_min_eig=" + num_str(worst_eig));
    tr.diagnostics.push_back("min_eig_warnings=" + std::to_string(warn_count));
  }
  return tr;
}

inline Trajectory evolve_qld(const Grid& g, const Potential& pot, const PhysicalParams& p,
                             const DensityMatrix& rho0, const QldOptions& opt) {
  Schedule s;
  s.base = p;
  return evolve_qld(g, pot, s, rho0, opt);
}

}  // namespace qld
