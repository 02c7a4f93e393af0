#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "grid.hpp"
#include "metrics.hpp"
#include "potentials.hpp"

namespace qld {

// Real symmetric Hamiltonian H(t) in units where hbar = 1.
// apply(t, in, out) computes out = H(t) * in.
struct HamiltonianSchedule {
  Eigen::Index dim = 0;
  std::function<void(double, const Vec&, Vec&)> apply;
};

struct stability_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double spectral_radius(const HamiltonianSchedule& h, double t, int iters = 200) {
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Vec v(h.dim), w(h.dim);
  for (Eigen::Index i = 0; i < h.dim; ++i) v[i] = nd(rng);
  v.normalize();
  double lam = 0.0;
  for (int k = 0; k < iters; ++k) {
    h.apply(t, v, w);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    lam = nw;
    v = w / nw;
  }
  // power iteration underestimates slightly; pad by 5%
  return 1.05 * lam;
}

struct LeapfrogResult {
  CVec psi;
  double max_norm_drift = 0.0;
  std::size_t steps = 0;
};

// State at an integer step: R_n with the neighbouring half-step imaginary parts.
// For a real symmetric S, R.SR + I+.SI- is exactly conserved whenever S commutes with a
// static H, so norms, densities and projections are read in that form. Values are
// divided by the form's initial value `q0` (the form differs from |psi0|^2 at O(dt^2)).
struct LeapfrogFrame {
  double t = 0.0;
  double dt = 0.0;
  const Vec* R = nullptr;
  const Vec* Im = nullptr;  // I_{n-1/2}
  const Vec* Ip = nullptr;  // I_{n+1/2}
  double q0 = 1.0;

  Vec density() const {
    return (R->cwiseAbs2() + Im->cwiseProduct(*Ip)) / q0;
  }
  double norm2() const { return (R->squaredNorm() + Im->dot(*Ip)) / q0; }
  // <S> for a real symmetric operator given by its action
  template <class Apply>
  double expect(Apply&& S) const {
    Vec a(R->size());
    S(*R, a);
    double r = R->dot(a);
    S(*Im, a);
    return (r + Ip->dot(a)) / q0;
  }
  // sum_b <phi|P_b psi>^2 style overlaps: <u, R>^2 + <u, I+><u, I->
  double overlap2(const Eigen::Ref<const Vec>& u, Eigen::Index offset, Eigen::Index stride) const {
    double r = 0, ip = 0, im = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      Eigen::Index k = offset + i * stride;
      r += u[i] * (*R)[k];
      ip += u[i] * (*Ip)[k];
      im += u[i] * (*Im)[k];
    }
    return (r * r + ip * im) / q0;
  }
  // synchronized amplitude, I_n = (I_{n-1/2} + I_{n+1/2}) / 2
  CVec psi() const {
    return R->cast<cplx>() + cplx(0, 1) * (0.5 * (*Im + *Ip)).cast<cplx>();
  }
};

// Staggered scheme: R on integer steps, I on half steps.
// psi = R + iI, i dpsi/dt = H psi  =>  dR/dt = H I, dI/dt = -H R.
inline LeapfrogResult leapfrog_evolve(
    const HamiltonianSchedule& h, const CVec& psi0, double dt, double t_f,
    std::size_t record_stride,
    const std::function<void(const LeapfrogFrame&)>& record = nullptr, bool check_stability = true) {
  if (!(dt > 0) || !(t_f > 0)) throw config_error("leapfrog: dt and t_f must be positive");
  if (psi0.size() != h.dim) throw std::invalid_argument("leapfrog: dimension mismatch");
  if (record_stride == 0) record_stride = 1;
  const auto steps = static_cast<std::size_t>(std::llround(t_f / dt));
  if (check_stability) {
    for (double t : {0.0, t_f}) {
      double r = spectral_radius(h, t);
      if (dt * r >= 2.0)
        throw stability_error("leapfrog: dt * rho(H) = " + num_str(dt * r) +
                              " at t = " + num_str(t));
    }
  }
  Vec R = psi0.real(), tmp(h.dim);
  h.apply(0.0, R, tmp);
  Vec Im = Vec(psi0.imag()) + 0.5 * dt * tmp;  // I_{-1/2}
  Vec I = Vec(psi0.imag()) - 0.5 * dt * tmp;   // I_{1/2}
  LeapfrogFrame f{0.0, dt, &R, &Im, &I, 1.0};
  const double q0 = f.norm2();
  f.q0 = q0;
  LeapfrogResult res;
  if (record) record(f);
  Vec Inext(h.dim);
  for (std::size_t k = 0; k < steps; ++k) {
    double t = static_cast<double>(k) * dt;
    h.apply(t + 0.5 * dt, I, tmp);
    R += dt * tmp;
    double t1 = t + dt;
    h.apply(t1, R, tmp);
    Inext = I - dt * tmp;  // I_{k+3/2}
    bool rec = ((k + 1) % record_stride == 0) || (k + 1 == steps);
    if (rec) {
      LeapfrogFrame fr{t1, dt, &R, &I, &Inext, q0};
      double drift = std::abs(fr.norm2() - 1.0);
      res.max_norm_drift = std::max(res.max_norm_drift, drift);
      if (drift > 1e-4)
        throw stability_error("leapfrog: norm drift " + num_str(drift) + " at t = " +
                              num_str(t1));
      if (record) record(fr);
    }
    I.swap(Inext);
  }
  double tf = static_cast<double>(steps) * dt;
  h.apply(tf, R, tmp);
  res.psi = R.cast<cplx>() + cplx(0, 1) * (I + 0.5 * dt * tmp).cast<cplx>();
  res.steps = steps;
  return res;
}

struct GroundState {
  CVec psi;
  double energy = 0.0;
  double residual = 0.0;
};

// Lowest eigenpair of a real symmetric sparse matrix.
inline GroundState ground_state(const RealSparse& H) {
  if (H.rows() != H.cols()) throw std::invalid_argument("ground_state: matrix not square");
  GroundState gs;
  Vec v;
  if (H.rows() <= 4096) {
    Eigen::MatrixXd dense = Eigen::MatrixXd(H);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw std::runtime_error("ground_state: no convergence");
    gs.energy = es.eigenvalues()[0];
    v = es.eigenvectors().col(0);
  } else {
    // shift-invert from below the Gershgorin bound
    double lo = 0.0;
    for (Eigen::Index c = 0; c < H.outerSize(); ++c) {
      double d = 0, off = 0;
      for (RealSparse::InnerIterator it(H, c); it; ++it) {
        if (it.row() == c) d += it.value();
        else off += std::abs(it.value());
      }
      lo = std::min(lo, d - off);
    }
    RealSparse A = H - (lo - 1.0) * identity_sparse(H.rows());
    Eigen::SparseLU<RealSparse> lu(A);
    if (lu.info() != Eigen::Success) throw std::runtime_error("ground_state: factorization failed");
    v = Vec::Ones(H.rows()).normalized();
    double e = 0;
    for (int it = 0; it < 20000; ++it) {
      Vec w = lu.solve(v);
      w.normalize();
      if (w.dot(v) < 0) w = -w;
      double diff = (w - v).norm();
      v = w;
      e = v.dot(H * v);
      if (diff < 1e-13) break;
    }
    gs.energy = e;
  }
  if (v.sum() < 0) v = -v;
  gs.residual = (H * v - gs.energy * v).norm();
  gs.psi = v.cast<cplx>();
  return gs;
}

inline RealSparse grid_hamiltonian(const Grid& g, const Potential& pot, double hbar, double m) {
  auto ops = diff_operators(g);
  RealSparse H = (-hbar * hbar / (2.0 * m)) * ops.L + diag_sparse(pot.sample(g));
  H.makeCompressed();
  return H;
}

namespace detail {

// out = a * (-1/2 L) in + b * diag(v) in on a uniform grid, tridiagonal stencil.
inline void apply_kinetic_potential(const Grid& g, const Vec& v, double a, double b,
                                    const Vec& in, Vec& out) {
  const Eigen::Index n = in.size();
  const double c = -0.5 * a / (g.dx * g.dx);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lap = -2.0 * in[i];
    if (i > 0) lap += in[i - 1];
    if (i + 1 < n) lap += in[i + 1];
    out[i] = c * lap + b * v[i] * in[i];
  }
}

inline Observables wave_observables(const LeapfrogFrame& f, const Grid& g, const Potential& pot,
                                    double epsilon) {
  Vec p = f.density();
  Observables o = expectations(p, g, pot, epsilon);
  // kinetic energy -1/2 <L> with hbar = m = 1
  Vec zero = Vec::Zero(p.size());
  o.Ek = f.expect([&](const Vec& in, Vec& out) { apply_kinetic_potential(g, zero, 1.0, 0.0, in, out); });
  o.H = o.V + o.Ek;
  return o;
}

}  // namespace detail

inline CVec uniform_state(Eigen::Index n) {
  return CVec::Constant(n, cplx(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
}

struct QhdOptions {
  double s1 = 0.01;
  double s2 = 0.01;
  double dt = 0.0;  // 0 selects 0.08 / rho(H), rho the larger of t = 0 and t = t_f
  double t_f = 10.0;
  std::size_t record_stride = 1000;
  double epsilon = 0.15;
};

inline HamiltonianSchedule qhd_hamiltonian(const Grid& g, const Potential& pot, double s1,
                                           double s2) {
  if (!(s1 > 0) || !(s2 > 0)) throw config_error("qhd: s1 and s2 must be positive");
  Vec v = pot.sample(g);
  HamiltonianSchedule h;
  h.dim = static_cast<Eigen::Index>(g.n);
  h.apply = [g, v, s1, s2](double t, const Vec& in, Vec& out) {
    double t3 = t * t * t;
    detail::apply_kinetic_potential(g, v, 2.0 / (s1 + t3), 2.0 * (s2 + t3), in, out);
  };
  return h;
}

inline double qhd_stable_dt(const Grid& g, const Potential& pot, double s1, double s2,
                            double t_f) {
  auto h = qhd_hamiltonian(g, pot, s1, s2);
  double r = std::max(spectral_radius(h, 0.0), spectral_radius(h, t_f));
  // the staggered norm drifts ~1e-4 (dt rho)^2 while 2/(s1+t^3) collapses; 0.08 keeps it below 1e-6
  return 0.08 / r;
}

inline Trajectory qhd_evolve(const Grid& g, const Potential& pot, const QhdOptions& opt,
                             const CVec* psi0 = nullptr) {
  auto h = qhd_hamiltonian(g, pot, opt.s1, opt.s2);
  double dt = opt.dt > 0 ? opt.dt : qhd_stable_dt(g, pot, opt.s1, opt.s2, opt.t_f);
  CVec start = psi0 ? *psi0 : uniform_state(h.dim);
  Trajectory tr;
  tr.algorithm = "qhd";
  auto res = leapfrog_evolve(h, start, dt, opt.t_f, opt.record_stride,
                             [&](const LeapfrogFrame& f) {
                               Observables o = detail::wave_observables(f, g, pot, opt.epsilon);
                               tr.push(f.t, o, f.density());
                             });
  tr.diagnostics.push_back("dt=" + num_str(dt));
  tr.diagnostics.push_back("max_norm_drift=" + num_str(res.max_norm_drift));
  return tr;
}

struct QaaOptions {
  double dt = 0.0;  // 0 selects 0.05 dx^2
  double t_f = 10.0;
  std::size_t record_stride = 1000;
  double epsilon = 0.15;
  std::function<double(double)> g;  // defaults to t / t_f
};

inline bool is_power_of_two(std::size_t n) { return n && !(n & (n - 1)); }

inline HamiltonianSchedule qaa_hamiltonian(const Grid& g, const Potential& pot,
                                           std::function<double(double)> sched) {
  if (!is_power_of_two(g.n)) throw config_error("qaa: n must be a power of two");
  unsigned nq = 0;
  while ((std::size_t{1} << nq) < g.n) ++nq;
  Vec v = pot.sample(g);
  HamiltonianSchedule h;
  h.dim = static_cast<Eigen::Index>(g.n);
  h.apply = [v, nq, sched](double t, const Vec& in, Vec& out) {
    double s = sched(t);
    const Eigen::Index n = in.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      double x = 0.0;
      for (unsigned j = 0; j < nq; ++j) x += in[i ^ (Eigen::Index{1} << j)];
      out[i] = -(1.0 - s) * x + s * v[i] * in[i];
    }
  };
  return h;
}

inline Trajectory qaa_evolve(const Grid& g, const Potential& pot, const QaaOptions& opt,
                             const CVec* psi0 = nullptr) {
  auto sched = opt.g ? opt.g : [tf = opt.t_f](double t) { return t / tf; };
  auto h = qaa_hamiltonian(g, pot, sched);
  double dt = opt.dt > 0 ? opt.dt : 0.05 * g.dx * g.dx;
  CVec start = psi0 ? *psi0 : uniform_state(h.dim);
  Trajectory tr;
  tr.algorithm = "qaa";
  auto res = leapfrog_evolve(h, start, dt, opt.t_f, opt.record_stride,
                             [&](const LeapfrogFrame& f) {
                               Vec p = f.density();
                               tr.push(f.t, expectations(p, g, pot, opt.epsilon), p);
                             });
  tr.diagnostics.push_back("max_norm_drift=" + num_str(res.max_norm_drift));
  return tr;
}

struct BathOscillator {
  double omega = 1.0;
  double mass = 1.0;
  double k = -1.0;  // coupling; negative selects mass * omega^2
  double coupling() const { return k >= 0 ? k : mass * omega * omega; }
};

struct BathOptions {
  double hbar = 1.0;
  double m = 10.0;  // system mass
  double dt = 0.0;  // 0 selects 0.5 / rho(H)
  double t_f = 100.0;
  std::size_t record_stride = 100;
};

struct BathTrajectory {
  std::vector<double> times;
  std::vector<double> P;  // population of the system ground state
  double p_max = 0.0;
  double t_at_max = 0.0;
  double ground_energy = 0.0;
  double max_norm_drift = 0.0;
};

// System index major, bath bits minor: idx = i * 2^B + b.
inline HamiltonianSchedule bath_hamiltonian(const Grid& g, const Potential& pot,
                                            const std::vector<BathOscillator>& osc,
                                            const BathOptions& opt) {
  const std::size_t B = osc.size();
  if (g.n * (std::size_t{1} << B) > (std::size_t{1} << 22))
    throw config_error("bath: dimension n * 2^B exceeds 2^22");
  const Eigen::Index nb = Eigen::Index{1} << B;
  const double hb = opt.hbar;
  Vec v = pot.sample(g);
  Vec xs = g.nodes;
  std::vector<double> kcoef(B), amp(B), en0(B), en1(B);
  double konst = 0.0, kx2 = 0.0;
  for (std::size_t j = 0; j < B; ++j) {
    kcoef[j] = osc[j].coupling();
    amp[j] = std::sqrt(hb / (2.0 * osc[j].mass * osc[j].omega));
    en0[j] = 0.5 * hb * osc[j].omega;
    en1[j] = 1.5 * hb * osc[j].omega;
    // (k/2)(q^2 - 2 q x + x^2) with q^2 = amp^2 in the two-level space
    konst += 0.5 * kcoef[j] * amp[j] * amp[j];
    kx2 += 0.5 * kcoef[j];
  }
  Vec diag_sys(xs.size());
  for (Eigen::Index i = 0; i < xs.size(); ++i) diag_sys[i] = v[i] + kx2 * xs[i] * xs[i] + konst;
  Vec diag_bath = Vec::Zero(nb);
  for (Eigen::Index b = 0; b < nb; ++b)
    for (std::size_t j = 0; j < B; ++j) diag_bath[b] += (b >> j & 1) ? en1[j] : en0[j];
  const double kin = -hb * hb / (2.0 * opt.m * g.dx * g.dx);
  const Eigen::Index n = static_cast<Eigen::Index>(g.n);
  HamiltonianSchedule h;
  h.dim = n * nb;
  h.apply = [=](double, const Vec& in, Vec& out) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index b = 0; b < nb; ++b) {
        Eigen::Index r = i * nb + b;
        double lap = -2.0 * in[r];
        if (i > 0) lap += in[r - nb];
        if (i + 1 < n) lap += in[r + nb];
        double acc = kin * lap + (diag_sys[i] + diag_bath[b]) * in[r];
        for (std::size_t j = 0; j < B; ++j)
          acc += -kcoef[j] * amp[j] * xs[i] * in[i * nb + (b ^ (Eigen::Index{1} << j))];
        out[r] = acc / hb;
      }
    }
  };
  return h;
}

// The initial joint state is psi_sys x |0...0>_bath.
inline BathTrajectory bath_evolve(const Grid& g, const Potential& pot,
                                  const std::vector<BathOscillator>& osc, const CVec& psi_sys,
                                  const BathOptions& opt) {
  auto h = bath_hamiltonian(g, pot, osc, opt);
  const Eigen::Index n = static_cast<Eigen::Index>(g.n);
  const Eigen::Index nb = Eigen::Index{1} << osc.size();
  auto gs = ground_state(grid_hamiltonian(g, pot, opt.hbar, opt.m));
  CVec psi0 = CVec::Zero(h.dim);
  for (Eigen::Index i = 0; i < n; ++i) psi0[i * nb] = psi_sys[i];
  const Vec g0 = gs.psi.real();
  double dt = opt.dt > 0 ? opt.dt : 0.5 / spectral_radius(h, 0.0);
  BathTrajectory out;
  out.ground_energy = gs.energy;
  auto res = leapfrog_evolve(h, psi0, dt, opt.t_f, opt.record_stride,
                             [&](const LeapfrogFrame& f) {
                               double P = 0.0;
                               for (Eigen::Index b = 0; b < nb; ++b) P += f.overlap2(g0, b, nb);
                               const double t = f.t;
                               out.times.push_back(t);
                               out.P.push_back(P);
                               if (P > out.p_max) {
                                 out.p_max = P;
                                 out.t_at_max = t;
                               }
                             });
  out.max_norm_drift = res.max_norm_drift;
  return out;
}

// psi_g(-x): the ground state reflected through the origin.
inline CVec mirrored_ground(const Grid& g, const Potential& pot, double hbar, double m) {
  if (std::abs(g.lo + g.hi) > 1e-12 * (g.hi - g.lo))
    throw config_error("mirrored_ground: domain must be symmetric about 0");
  auto gs = ground_state(grid_hamiltonian(g, pot, hbar, m));
  return gs.psi.reverse();
}

}  // namespace qld
