#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "qld/schrodinger.hpp"

using namespace qld;

namespace {

HamiltonianSchedule dense_schedule(const Eigen::MatrixXd& H) {
  HamiltonianSchedule h;
  h.dim = H.rows();
  h.apply = [H](double, const Vec& in, Vec& out) { out = H * in; };
  return h;
}

Eigen::MatrixXd random_symmetric(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = nd(rng);
  return 0.5 * (a + a.transpose());
}

CVec random_state(Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
  return v.normalized();
}

// <u, H v> - <H u, v>
double symmetry_defect(const HamiltonianSchedule& h, double t, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Vec u(h.dim), v(h.dim), hu(h.dim), hv(h.dim);
  for (Eigen::Index i = 0; i < h.dim; ++i) {
    u[i] = nd(rng);
    v[i] = nd(rng);
  }
  h.apply(t, u, hu);
  h.apply(t, v, hv);
  return std::abs(u.dot(hv) - hu.dot(v)) / (hu.norm() * v.norm());
}

double dense_error(const Eigen::MatrixXd& H, const CVec& psi0, double t_f, std::size_t steps) {
  CMat U = (cplx(0, -t_f) * H.cast<cplx>()).exp();
  CVec exact = U * psi0;
  auto res = leapfrog_evolve(dense_schedule(H), psi0, t_f / static_cast<double>(steps), t_f, steps);
  return (res.psi - exact).cwiseAbs().maxCoeff();
}

}  // namespace

TEST(Leapfrog, MatchesDenseUnitary) {
  auto H = random_symmetric(16, 1);
  auto psi0 = random_state(16, 2);
  const double t_f = 2.0;
  double e200 = dense_error(H, psi0, t_f, 200);
  double e800 = dense_error(H, psi0, t_f, 800);
  EXPECT_LT(e800, 1e-4);
  EXPECT_LT(e800, e200);
}

TEST(Leapfrog, SecondOrder) {
  auto H = random_symmetric(16, 3);
  auto psi0 = random_state(16, 4);
  double prev = dense_error(H, psi0, 1.0, 200);
  for (std::size_t steps : {400, 800}) {
    double e = dense_error(H, psi0, 1.0, steps);
    double r = prev / e;
    EXPECT_GE(r, 3.0);
    EXPECT_LE(r, 5.0);
    prev = e;
  }
}

TEST(Leapfrog, StationaryGroundState) {
  auto g = build_grid(64);
  auto pot = potential_by_name("double_well");
  auto H = grid_hamiltonian(g, pot, 1.0, 1.0);
  auto gs = ground_state(H);
  HamiltonianSchedule h;
  h.dim = 64;
  h.apply = [&](double, const Vec& in, Vec& out) { out = H * in; };
  Vec p0 = gs.psi.cwiseAbs2();
  double worst = 0.0;
  auto res = leapfrog_evolve(h, gs.psi, 0.05 * g.dx * g.dx, 10.0, 1000, [&](const LeapfrogFrame& f) {
    worst = std::max(worst, (f.density() - p0).cwiseAbs().maxCoeff());
    worst = std::max(worst, (f.psi().cwiseAbs2() - p0).cwiseAbs().maxCoeff());
  });
  EXPECT_LT(worst, 1e-8);
  EXPECT_LT(res.max_norm_drift, 1e-8 * 10.0);
}

TEST(Leapfrog, EnergyConservedForStaticHamiltonian) {
  auto g = build_grid(64);
  auto pot = potential_by_name("michalewicz");
  auto H = grid_hamiltonian(g, pot, 1.0, 1.0);
  HamiltonianSchedule h;
  h.dim = 64;
  h.apply = [&](double, const Vec& in, Vec& out) { out = H * in; };
  CVec psi0 = uniform_state(64);
  double e_plain = (psi0.adjoint() * (H.cast<cplx>() * psi0))(0).real();
  std::vector<double> e;
  leapfrog_evolve(h, psi0, 0.05 * g.dx * g.dx, 2.0, 500, [&](const LeapfrogFrame& f) {
    e.push_back(f.expect([&](const Vec& in, Vec& out) { out = H * in; }));
  });
  // the staggered form agrees with <psi0|H|psi0> to O(dt^2) and is then conserved
  EXPECT_NEAR(e.front() / e_plain, 1.0, 1e-2);
  for (double v : e) EXPECT_LT(std::abs(v - e.front()) / std::abs(e.front()), 1e-4);
}

TEST(Leapfrog, StabilityGuard) {
  auto H = random_symmetric(8, 5);
  double r = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H).eigenvalues().cwiseAbs().maxCoeff();
  EXPECT_THROW(leapfrog_evolve(dense_schedule(H), random_state(8, 1), 2.5 / r, 1.0, 1), stability_error);
  EXPECT_THROW(leapfrog_evolve(dense_schedule(H), random_state(8, 1), 0.0, 1.0, 1), config_error);
  EXPECT_THROW(leapfrog_evolve(dense_schedule(H), random_state(4, 1), 0.01, 1.0, 1), std::invalid_argument);
}

TEST(GroundState, HarmonicEnergy) {
  auto g = build_grid(256, -8, 8);
  auto pot = make_quadratic(1.0, 1.0);
  auto gs = ground_state(grid_hamiltonian(g, pot, 1.0, 1.0));
  EXPECT_NEAR(gs.energy, 0.5, 0.5 * 0.005);
  EXPECT_LT(gs.residual, 1e-9);
}

TEST(GroundState, ShiftInvertBranch) {
  auto g = build_grid(5000, -8, 8);
  auto pot = make_quadratic(1.0, 1.0);
  auto gs = ground_state(grid_hamiltonian(g, pot, 1.0, 1.0));
  EXPECT_NEAR(gs.energy, 0.5, 0.5 * 0.005);
  EXPECT_LT(gs.residual, 1e-9);
}

TEST(GroundState, RayleighMinimality) {
  auto g = build_grid(64);
  auto pot = potential_by_name("alpine1");
  auto H = grid_hamiltonian(g, pot, 0.3, 1.0);
  auto gs = ground_state(H);
  std::mt19937 rng(9);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 100; ++k) {
    Vec v(64);
    for (auto& x : v) x = nd(rng);
    v.normalize();
    EXPECT_GE(v.dot(H * v), gs.energy - 1e-12);
  }
}

TEST(GroundState, AsymmetricWellLocalizesInGlobalWell) {
  auto g = build_grid(64);
  auto pot = make_asymmetric_well(10.0, 2.0, 0.5);
  auto gs = ground_state(grid_hamiltonian(g, pot, 1.0, 10.0));
  Vec p = gs.psi.cwiseAbs2();
  Eigen::Index imax;
  p.maxCoeff(&imax);
  EXPECT_NEAR(g.nodes[imax], 0.5, 0.1);
  double right = 0.0;
  for (Eigen::Index i = 0; i < 64; ++i)
    if (g.nodes[i] > 0) right += p[i];
  EXPECT_GT(right, 0.5);
  auto m = mirrored_ground(g, pot, 1.0, 10.0);
  EXPECT_NEAR(std::norm(m[63 - imax]), p[imax], 1e-14);
}

TEST(Qhd, Prefactors) {
  auto g = build_grid(16);
  auto h = qhd_hamiltonian(g, make_constant(1.0), 0.01, 0.01);
  Vec e = Vec::Zero(16), out(16);
  e[5] = 1.0;
  h.apply(0.0, e, out);
  // 200 * (-1/2)(-2/dx^2) + 0.02 * 1
  EXPECT_NEAR(out[5], 200.0 / (g.dx * g.dx) + 0.02, 1e-9);
  EXPECT_NEAR(out[4], -100.0 / (g.dx * g.dx), 1e-9);
  EXPECT_THROW(qhd_hamiltonian(g, make_constant(1.0), 0.0, 0.01), config_error);
}

TEST(Qhd, HamiltoniansAreSymmetric) {
  auto g = build_grid(32);
  auto pot = potential_by_name("griewank");
  auto q = qhd_hamiltonian(g, pot, 0.01, 0.01);
  auto a = qaa_hamiltonian(g, pot, [](double t) { return t / 10.0; });
  std::vector<BathOscillator> osc{{1.8, 1.0}, {2.2, 1.0}};
  auto b = bath_hamiltonian(g, make_asymmetric_well(), osc, BathOptions{});
  for (double t : {0.0, 1.0, 5.0}) {
    EXPECT_LT(symmetry_defect(q, t, 1), 1e-12);
    EXPECT_LT(symmetry_defect(a, t, 2), 1e-12);
    EXPECT_LT(symmetry_defect(b, t, 3), 1e-12);
  }
}

// regression value from this implementation at n = 64
TEST(Qhd, ConcentratesOnQuadratic) {
  auto g = build_grid(64);
  QhdOptions opt;
  opt.t_f = 10.0;
  auto tr = qhd_evolve(g, potential_by_name("quadratic"), opt);
  EXPECT_NEAR(tr.back().success, 0.973643, 1e-3);
  EXPECT_GT(tr.back().success, tr.obs.front().success);
  for (const auto& d : tr.distributions) EXPECT_NEAR(d.sum(), 1.0, 1e-5);
}

TEST(Qaa, ConstantPotentialStaysUniform) {
  auto g = build_grid(128);
  QaaOptions opt;
  opt.t_f = 1.0;
  auto tr = qaa_evolve(g, make_constant(0.7), opt);
  for (const auto& d : tr.distributions) EXPECT_LT((d.array() - 1.0 / 128).abs().maxCoeff(), 1e-6);
}

TEST(Qaa, SlowToyFollowsGroundState) {
  auto g = build_grid(8);
  auto pot = potential_by_name("double_well");
  QaaOptions opt;
  opt.t_f = 200.0;
  opt.dt = 0.002;
  opt.record_stride = 100000;
  CVec last;
  auto h = qaa_hamiltonian(g, pot, [&](double t) { return t / opt.t_f; });
  auto res = leapfrog_evolve(h, uniform_state(8), opt.dt, opt.t_f, 100000);
  // dense ground state of H_f = diag(V)
  Eigen::MatrixXd Hf = Eigen::MatrixXd::Zero(8, 8);
  Vec e(8), col(8);
  for (int j = 0; j < 8; ++j) {
    e.setZero();
    e[j] = 1;
    h.apply(opt.t_f, e, col);
    Hf.col(j) = col;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hf);
  CVec gs = es.eigenvectors().col(0).cast<cplx>();
  EXPECT_GE(std::norm(gs.dot(res.psi)), 0.99);
}

TEST(Qaa, RejectsNonPowerOfTwo) {
  auto g = build_grid(100);
  EXPECT_THROW(qaa_hamiltonian(g, make_constant(0.0), [](double) { return 0.0; }), config_error);
  EXPECT_TRUE(is_power_of_two(128));
  EXPECT_FALSE(is_power_of_two(100));
}

TEST(Qaa, NormPreservedAtReferenceStep) {
  auto g = build_grid(128);
  QaaOptions opt;
  opt.t_f = 10.0;
  auto tr = qaa_evolve(g, potential_by_name("michalewicz"), opt);
  for (const auto& d : tr.distributions) EXPECT_NEAR(d.sum(), 1.0, 1e-6);
}

TEST(Bath, ZeroCouplingKeepsProjection) {
  auto g = build_grid(32);
  auto pot = make_asymmetric_well();
  BathOptions opt;
  opt.t_f = 20.0;
  opt.record_stride = 50;
  std::vector<BathOscillator> osc{{1.81, 1.0, 0.0}};
  auto gs = ground_state(grid_hamiltonian(g, pot, opt.hbar, opt.m));
  auto tr = bath_evolve(g, pot, osc, gs.psi, opt);
  for (double P : tr.P) EXPECT_NEAR(P, 1.0, 1e-6);
  // excited start: projection stays at its initial value
  auto tr2 = bath_evolve(g, pot, osc, mirrored_ground(g, pot, opt.hbar, opt.m), opt);
  for (double P : tr2.P) EXPECT_NEAR(P, tr2.P.front(), 1e-6);
}

TEST(Bath, DimensionGuard) {
  auto g = build_grid(1024);
  std::vector<BathOscillator> osc(13);
  EXPECT_THROW(bath_hamiltonian(g, make_asymmetric_well(), osc, BathOptions{}), config_error);
}

TEST(Bath, MirroredGroundRequiresSymmetricDomain) {
  auto g = build_grid(32, -1, 2);
  EXPECT_THROW(mirrored_ground(g, make_asymmetric_well(), 1.0, 10.0), config_error);
}
