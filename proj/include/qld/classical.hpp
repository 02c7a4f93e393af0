#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/SparseLU>

#include "grid.hpp"
#include "metrics.hpp"
#include "potentials.hpp"

namespace qld {

struct FpeOptions {
  double gamma = 40.0;
  double kT = 1.0;
  double dt = 0.0;  // 0 selects 0.5 dx^2
  double t_f = 10.0;
  std::size_t record_stride = 100;
  double epsilon = 0.15;
  double stop_tol = 0.0;  // > 0 stops once successive recorded success values differ less
};

// Drift-diffusion generator acting on node masses:
// (1/gamma) D (V' rho) + (kT/gamma) L rho, zero ghosts outside the domain.
inline RealSparse fpe_operator(const Grid& g, const Potential& pot, double gamma, double kT) {
  if (!(gamma > 0)) throw config_error("fpe: gamma must be positive");
  auto ops = diff_operators(g);
  Vec grad(g.nodes.size());
  for (Eigen::Index i = 0; i < grad.size(); ++i) grad[i] = pot.gradient(g.nodes[i]);
  RealSparse A = (1.0 / gamma) * (ops.D * diag_sparse(grad)) + (kT / gamma) * ops.L;
  A.makeCompressed();
  return A;
}

inline Vec gibbs_distribution(const Grid& g, const Potential& pot, double kT) {
  Vec r(g.nodes.size());
  double vmin = pot.sample(g).minCoeff();
  for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = std::exp(-(pot.value(g.nodes[i]) - vmin) / kT);
  return r / r.sum();
}

inline Vec uniform_distribution(const Grid& g) {
  return Vec::Constant(static_cast<Eigen::Index>(g.n), 1.0 / static_cast<double>(g.n));
}

class FpeStepper {
 public:
  FpeStepper(const Grid& g, const Potential& pot, double gamma, double kT, double dt) {
    RealSparse A = fpe_operator(g, pot, gamma, kT);
    RealSparse M = identity_sparse(A.rows()) - dt * A;
    M.makeCompressed();
    lu_.compute(M);
    if (lu_.info() != Eigen::Success) throw std::runtime_error("fpe: singular factorization");
  }
  Vec step(const Vec& rho) const { return lu_.solve(rho); }

 private:
  Eigen::SparseLU<RealSparse> lu_;
};

inline Trajectory evolve_fpe(const Grid& g, const Potential& pot, const Vec& rho0, const FpeOptions& opt) {
  if (rho0.size() != static_cast<Eigen::Index>(g.n)) throw std::invalid_argument("fpe: rho0 size");
  if (rho0.minCoeff() < 0) throw config_error("fpe: rho0 must be nonnegative");
  const double dt = opt.dt > 0 ? opt.dt : 0.5 * g.dx * g.dx;
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_f / dt));
  const std::size_t stride = opt.record_stride ? opt.record_stride : 1;
  FpeStepper stepper(g, pot, opt.gamma, opt.kT, dt);
  Trajectory tr;
  tr.algorithm = "fpe";
  Vec rho = rho0 / rho0.sum();
  tr.push(0.0, expectations(rho, g, pot, opt.epsilon), rho);
  double max_drift = 0.0, min_val = 0.0;
  std::size_t neg_steps = 0;
  for (std::size_t k = 0; k < steps; ++k) {
    rho = stepper.step(rho);
    double mass = rho.sum();
    max_drift = std::max(max_drift, std::abs(mass - 1.0));
    double mn = rho.minCoeff();
    if (mn < -1e-8) ++neg_steps;
    min_val = std::min(min_val, mn);
    rho /= mass;
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      double prev = tr.back().success;
      tr.push(static_cast<double>(k + 1) * dt, expectations(rho, g, pot, opt.epsilon), rho);
      if (opt.stop_tol > 0 && std::abs(tr.back().success - prev) < opt.stop_tol) {
        tr.diagnostics.push_back("steady_stop_t=" + num_str(tr.times.back()));
        break;
      }
    }
  }
  tr.diagnostics.push_back("dt=" + num_str(dt));
  tr.diagnostics.push_back("max_mass_drift=" + num_str(max_drift));
  tr.diagnostics.push_back("min_density=" + num_str(min_val));
  tr.diagnostics.push_back("negative_steps=" + std::to_string(neg_steps));
  return tr;
}

struct EnsembleOptions {
  double s = 0.05 * (2.0 / 128) * (2.0 / 128);
  double sigma = 1.0;  // sgd only
  std::size_t samples = 20000;
  double t_f = 10.0;
  std::uint64_t seed = 0;
  std::size_t record_stride = 10000;
  std::size_t threads = 0;  // 0 uses hardware concurrency
  double epsilon = 0.15;
  double lo = -1.0, hi = 1.0;
  const std::vector<double>* x0 = nullptr;  // explicit starts; uniform draw otherwise
};

namespace detail {

inline constexpr std::size_t kChunk = 256;

inline std::mt19937_64 chunk_rng(std::uint64_t seed, std::size_t chunk, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// Runs body(chunk_index, begin, end) over fixed chunks; chunking (not thread count)
// fixes the random streams, so results do not depend on the number of threads.
template <class F>
void for_chunks(std::size_t total, std::size_t threads, F&& body) {
  const std::size_t chunks = (total + kChunk - 1) / kChunk;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(chunks, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += threads)
        body(c, c * kChunk, std::min(total, (c + 1) * kChunk));
    });
  for (auto& t : pool) t.join();
}

inline std::vector<double> initial_positions(const EnsembleOptions& opt) {
  if (opt.x0) return *opt.x0;
  std::vector<double> x(opt.samples);
  for_chunks(opt.samples, opt.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto rng = chunk_rng(opt.seed, c, 0);
    std::uniform_real_distribution<double> u(opt.lo, opt.hi);
    for (std::size_t i = b; i < e; ++i) x[i] = u(rng);
  });
  return x;
}

}  // namespace detail

struct EnsembleTrajectory {
  Trajectory traj;
  std::vector<double> final_positions;
};

// Records histogram/observables at multiples of record_stride iterations.
// Each chunk advances independently, so every sample sees the same step sequence.
template <class Update>
EnsembleTrajectory run_ensemble(const Grid& g, const Potential& pot, const EnsembleOptions& opt,
                                const std::string& name, Update update) {
  if (!(opt.s > 0)) throw config_error(name + ": step size s must be positive");
  const auto steps = static_cast<std::size_t>(std::llround(opt.t_f / opt.s));
  const std::size_t stride = opt.record_stride ? opt.record_stride : steps;
  std::vector<double> x = detail::initial_positions(opt);
  std::vector<std::size_t> marks;
  for (std::size_t k = stride; k < steps; k += stride) marks.push_back(k);
  marks.push_back(steps);
  std::vector<std::vector<double>> snaps(marks.size(), std::vector<double>(x.size()));
  const std::vector<double> start = x;
  detail::for_chunks(x.size(), opt.threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto rng = detail::chunk_rng(opt.seed, c, 1);
    update(x, b, e, steps, marks, snaps, rng);
  });
  EnsembleTrajectory out;
  out.traj.algorithm = name;
  out.traj.seed = opt.seed;
  out.traj.push(0.0, expectations(start, pot, opt.epsilon), histogram(start, g));
  for (std::size_t r = 0; r < marks.size(); ++r)
    out.traj.push(static_cast<double>(marks[r]) * opt.s, expectations(snaps[r], pot, opt.epsilon),
                  histogram(snaps[r], g));
  out.final_positions = snaps.back();
  return out;
}

inline EnsembleTrajectory sgd_run(const Grid& g, const Potential& pot, const EnsembleOptions& opt) {
  if (opt.sigma < 0) throw config_error("sgd: sigma must be non-negative");
  return run_ensemble(g, pot, opt, "sgd",
                      [&](std::vector<double>& x, std::size_t b, std::size_t e, std::size_t steps,
                          const std::vector<std::size_t>& marks, std::vector<std::vector<double>>& snaps,
                          std::mt19937_64& rng) {
                        std::normal_distribution<double> nd(0.0, opt.sigma > 0 ? opt.sigma : 1.0);
                        const double noise = opt.sigma > 0 ? 1.0 : 0.0;
                        std::size_t next = 0;
                        for (std::size_t k = 1; k <= steps; ++k) {
                          for (std::size_t i = b; i < e; ++i) {
                            double xi = noise ? nd(rng) : 0.0;
                            double v = x[i] - opt.s * pot.gradient(x[i]) - opt.s * xi;
                            x[i] = std::clamp(v, opt.lo, opt.hi);
                          }
                          if (k == marks[next]) {
                            std::copy(x.begin() + b, x.begin() + e, snaps[next].begin() + b);
                            ++next;
                          }
                        }
                      });
}

inline EnsembleTrajectory nagd_run(const Grid& g, const Potential& pot, const EnsembleOptions& opt) {
  return run_ensemble(g, pot, opt, "nagd",
                      [&](std::vector<double>& x, std::size_t b, std::size_t e, std::size_t steps,
                          const std::vector<std::size_t>& marks, std::vector<std::vector<double>>& snaps,
                          std::mt19937_64&) {
                        std::vector<double> y(x.begin() + b, x.begin() + e);
                        std::size_t next = 0;
                        for (std::size_t k = 1; k <= steps; ++k) {
                          double beta = static_cast<double>(k - 1) / static_cast<double>(k + 2);
                          for (std::size_t i = b; i < e; ++i) {
                            double& yi = y[i - b];
                            double xn = std::clamp(yi - opt.s * pot.gradient(yi), opt.lo, opt.hi);
                            yi = std::clamp(xn + beta * (xn - x[i]), opt.lo, opt.hi);
                            x[i] = xn;
                          }
                          if (k == marks[next]) {
                            std::copy(x.begin() + b, x.begin() + e, snaps[next].begin() + b);
                            ++next;
                          }
                        }
                      });
}

// Single-trajectory iteration counts used to compare plain and accelerated descent.
inline std::size_t gd_iterations(const Potential& pot, double s, double x0, double tol,
                                 std::size_t cap = 10000000) {
  double x = x0;
  for (std::size_t k = 1; k <= cap; ++k) {
    x = std::clamp(x - s * pot.gradient(x), -1.0, 1.0);
    if (std::abs(x - pot.x_star) < tol) return k;
  }
  return cap;
}

inline std::size_t nagd_iterations(const Potential& pot, double s, double x0, double tol,
                                   std::size_t cap = 10000000) {
  double x = x0, y = x0;
  for (std::size_t k = 1; k <= cap; ++k) {
    double xn = std::clamp(y - s * pot.gradient(y), -1.0, 1.0);
    y = std::clamp(xn + static_cast<double>(k - 1) / static_cast<double>(k + 2) * (xn - x), -1.0, 1.0);
    x = xn;
    if (std::abs(x - pot.x_star) < tol) return k;
  }
  return cap;
}

}  // namespace qld
