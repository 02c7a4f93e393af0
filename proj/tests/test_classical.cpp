#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "qld/classical.hpp"

using namespace qld;

namespace {

double diagnostic(const Trajectory& tr, const std::string& key) {
  for (const auto& d : tr.diagnostics)
    if (d.rfind(key + "=", 0) == 0) return std::stod(d.substr(key.size() + 1));
  ADD_FAILURE() << "missing diagnostic " << key;
  return std::nan("");
}

}  // namespace

// interior-supported regimes: the distribution vanishes well inside the walls
TEST(Fpe, GibbsIsStationary) {
  auto g = build_grid(128);
  struct Case {
    Potential pot;
    double kT;
  };
  for (const auto& c : {Case{make_quadratic(1.0, 1.0), 0.05}, Case{make_quadratic(1.0, 2.0), 0.2}}) {
    Vec rho = gibbs_distribution(g, c.pot, c.kT);
    FpeStepper st(g, c.pot, 40.0, c.kT, 0.5 * g.dx * g.dx);
    Vec next = st.step(rho);
    EXPECT_LT(std::abs(next.sum() - 1.0), 1e-6);
    next /= next.sum();
    double worst = 0.0;
    for (Eigen::Index i = 8; i < 120; ++i)
      worst = std::max(worst, std::abs(next[i] - rho[i]) / rho.maxCoeff());
    EXPECT_LT(worst, 1e-6) << c.kT;
  }
}

// Sampled Gibbs is stationary only up to the O(dx^2) stencil error; measured away from the walls.
TEST(Fpe, GibbsResidualIsSecondOrder) {
  struct Case {
    const char* name;
    double kT;
  };
  for (const auto& c : {Case{"double_well", 0.2}, Case{"michalewicz", 0.05}}) {
    auto pot = potential_by_name(c.name);
    std::vector<double> res;
    for (std::size_t n : {256, 512, 1024}) {
      auto g = build_grid(n);
      Vec rho = gibbs_distribution(g, pot, c.kT);
      Vec r = fpe_operator(g, pot, 40.0, c.kT) * rho;
      const Eigen::Index m = static_cast<Eigen::Index>(n / 16);
      res.push_back(r.segment(m, n - 2 * m).cwiseAbs().maxCoeff() / rho.maxCoeff());
    }
    for (std::size_t i = 1; i < res.size(); ++i) {
      EXPECT_GT(res[i - 1] / res[i], 3.5) << c.name;
      EXPECT_LT(res[i - 1] / res[i], 4.5) << c.name;
    }
  }
}

TEST(Fpe, OrnsteinUhlenbeckVariance) {
  auto g = build_grid(128);
  const double m = 1.0, omega = 10.0, kT = 1.0;
  auto pot = make_quadratic(m, omega);
  FpeOptions opt;
  opt.kT = kT;
  opt.gamma = 40.0;
  opt.t_f = 4.0;
  opt.record_stride = 1000;
  auto tr = evolve_fpe(g, pot, uniform_distribution(g), opt);
  EXPECT_NEAR(tr.back().x2 / (kT / (m * omega * omega)), 1.0, 0.02);
}

TEST(Fpe, MassAndSignInInteriorRegime) {
  auto g = build_grid(128);
  auto pot = make_quadratic(1.0, 10.0);
  FpeOptions opt;
  opt.kT = 1.0;
  opt.t_f = 1.0;
  opt.record_stride = 100;
  auto tr = evolve_fpe(g, pot, gibbs_distribution(g, make_quadratic(1.0, 7.0), 1.0), opt);
  EXPECT_LT(diagnostic(tr, "max_mass_drift"), 1e-6);
  EXPECT_GE(diagnostic(tr, "min_density"), -1e-8);
  for (const auto& d : tr.distributions) EXPECT_GE(d.minCoeff(), -1e-8);
}

TEST(Fpe, DriftPullsTowardMinimum) {
  auto g = build_grid(64);
  auto pot = make_quadratic(1.0, 10.0);
  FpeOptions opt;
  opt.kT = 1e-3;
  opt.t_f = 0.2;
  opt.record_stride = 50;
  Vec rho0 = Vec::Zero(64);
  rho0[48] = 1.0;
  auto tr = evolve_fpe(g, pot, rho0, opt);
  EXPECT_LT(std::abs(tr.back().x), std::abs(tr.obs.front().x));
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_LE(tr.obs[i].V, tr.obs[i - 1].V + 1e-12);
}

TEST(Fpe, HigherTemperatureSpreadsMore) {
  auto g = build_grid(64);
  auto pot = make_quadratic(1.0, 10.0);
  double prev = 0.0;
  for (double kT : {0.2, 0.5, 1.0}) {
    FpeOptions opt;
    opt.kT = kT;
    opt.t_f = 3.0;
    opt.record_stride = 10000;
    auto tr = evolve_fpe(g, pot, uniform_distribution(g), opt);
    EXPECT_GT(tr.back().x2, prev);
    prev = tr.back().x2;
  }
}

TEST(Fpe, RejectsBadInput) {
  auto g = build_grid(16);
  auto pot = make_quadratic(1.0, 1.0);
  FpeOptions opt;
  Vec neg = uniform_distribution(g);
  neg[3] = -0.1;
  EXPECT_THROW(evolve_fpe(g, pot, neg, opt), config_error);
  EXPECT_THROW(evolve_fpe(g, pot, Vec::Ones(8), opt), std::invalid_argument);
  EXPECT_THROW(fpe_operator(g, pot, 0.0, 1.0), config_error);
}

TEST(Fpe, SteadyStop) {
  auto g = build_grid(64);
  FpeOptions opt;
  opt.kT = 1.0;
  opt.t_f = 100.0;
  opt.record_stride = 200;
  opt.stop_tol = 1e-9;
  auto tr = evolve_fpe(g, make_quadratic(1.0, 10.0), uniform_distribution(g), opt);
  EXPECT_LT(tr.times.back(), 100.0);
}

TEST(Sgd, NoiselessSolvesQuadratic) {
  auto g = build_grid(128);
  auto pot = make_quadratic(1.0, 223.2728);
  EnsembleOptions opt;
  opt.sigma = 0.0;
  opt.samples = 2000;
  opt.seed = 7;
  auto r = sgd_run(g, pot, opt);
  for (double x : r.final_positions) EXPECT_LT(std::abs(x), 1e-6);
  EXPECT_DOUBLE_EQ(r.traj.back().success, 1.0);
}

TEST(Sgd, NoiselessConstantPotentialIsStatic) {
  auto g = build_grid(128);
  EnsembleOptions opt;
  opt.sigma = 0.0;
  opt.samples = 1000;
  opt.t_f = 0.01;
  opt.record_stride = 1;
  auto r = sgd_run(g, make_constant(2.0), opt);
  auto start = detail::initial_positions(opt);
  EXPECT_EQ(r.final_positions, start);
}

TEST(Sgd, PositionsStayInDomain) {
  auto g = build_grid(128);
  EnsembleOptions opt;
  opt.sigma = 1.0;
  opt.samples = 3000;
  opt.t_f = 0.5;
  opt.s = 1e-3;  // large kicks to reach the walls
  auto r = sgd_run(g, potential_by_name("alpine1"), opt);
  for (double x : r.final_positions) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Sgd, DeterministicAcrossThreadCounts) {
  auto g = build_grid(128);
  auto pot = potential_by_name("michalewicz");
  EnsembleOptions opt;
  opt.samples = 5000;
  opt.t_f = 0.05;
  opt.record_stride = 1000;
  opt.seed = 42;
  opt.threads = 1;
  auto a = sgd_run(g, pot, opt);
  opt.threads = 7;
  auto b = sgd_run(g, pot, opt);
  EXPECT_EQ(a.final_positions, b.final_positions);
  ASSERT_EQ(a.traj.size(), b.traj.size());
  for (std::size_t i = 0; i < a.traj.size(); ++i) {
    EXPECT_EQ(a.traj.obs[i].V, b.traj.obs[i].V);
    EXPECT_EQ(a.traj.distributions[i], b.traj.distributions[i]);
  }
  opt.seed = 43;
  auto c = sgd_run(g, pot, opt);
  EXPECT_NE(a.final_positions, c.final_positions);
}

TEST(Sgd, RecordTimesFollowEffectiveTime) {
  auto g = build_grid(64);
  EnsembleOptions opt;
  opt.samples = 100;
  opt.s = 1e-3;
  opt.t_f = 1.0;
  opt.record_stride = 250;
  auto r = sgd_run(g, make_quadratic(1.0, 1.0), opt);
  std::vector<double> expect{0.0, 0.25, 0.5, 0.75, 1.0};
  ASSERT_EQ(r.traj.times.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(r.traj.times[i], expect[i], 1e-12);
}

TEST(Nagd, BeatsGradientDescentOnQuadratic) {
  auto pot = make_quadratic(1.0, 1.0);
  const double s = 0.05 * (2.0 / 128) * (2.0 / 128);
  auto gd = gd_iterations(pot, s, 0.8, 1e-4);
  auto ng = nagd_iterations(pot, s, 0.8, 1e-4);
  EXPECT_LT(ng, gd);
  EXPECT_LT(ng, 10000000u);
}

TEST(Nagd, ConstantPotentialIsStatic) {
  auto g = build_grid(64);
  EnsembleOptions opt;
  opt.samples = 500;
  opt.t_f = 0.01;
  auto r = nagd_run(g, make_constant(-1.0), opt);
  EXPECT_EQ(r.final_positions, detail::initial_positions(opt));
}

TEST(Nagd, DeterministicAndClamped) {
  auto g = build_grid(64);
  auto pot = potential_by_name("bohachevsky2");
  EnsembleOptions opt;
  opt.samples = 1000;
  opt.t_f = 0.05;
  opt.seed = 5;
  auto a = nagd_run(g, pot, opt);
  opt.threads = 3;
  auto b = nagd_run(g, pot, opt);
  EXPECT_EQ(a.final_positions, b.final_positions);
  for (double x : a.final_positions) {
    EXPECT_GE(x, -1.0);
    EXPECT_LE(x, 1.0);
  }
}

TEST(Ensemble, RejectsNonPositiveStep) {
  auto g = build_grid(16);
  EnsembleOptions opt;
  opt.s = 0.0;
  EXPECT_THROW(sgd_run(g, make_constant(0.0), opt), config_error);
  opt.s = 1e-3;
  opt.sigma = -1.0;
  EXPECT_THROW(sgd_run(g, make_constant(0.0), opt), config_error);
}
