#pragma once

// Dense reference constructions shared by the unit tests and the acceptance binary.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qld/lindblad.hpp"

namespace qld::oracles {

// Standard-form Lindblad generator with a single jump operator
//   L = mu x + i nu p = mu X + nu hbar D
// built column by column from its action on basis matrices. L^dagger L is closed with
// the continuum commutator [x, p] = i hbar and p^2 = -hbar^2 Lap, so
//   K = mu^2 X^2 - nu^2 hbar^2 Lap - mu nu hbar.
inline CMat standard_form_generator(const Grid& g, const Potential& pot, const PhysicalParams& p) {
  const auto n = static_cast<Eigen::Index>(g.n);
  const auto mn = mu_nu(p);
  const double mu = std::sqrt(mn.mu2), nu = std::sqrt(mn.nu2);
  auto ops = diff_operators(g);
  CMat D = CMat(ops.D.cast<cplx>());
  CMat Lap = CMat(ops.L.cast<cplx>());
  CMat X = CMat::Zero(n, n);
  CMat V = CMat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, i) = g.nodes[i];
    V(i, i) = pot.value(g.nodes[i]);
  }
  CMat I = CMat::Identity(n, n);
  CMat H = -p.hbar * p.hbar / (2.0 * p.m) * Lap + V;
  CMat Lj = mu * X + nu * p.hbar * D;
  CMat Ljd = Lj.adjoint();
  CMat K = mn.mu2 * X * X - mn.nu2 * p.hbar * p.hbar * Lap - mu * nu * p.hbar * I;
  const cplx mi(0.0, -1.0 / p.hbar);

  CMat G(n * n, n * n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      CMat E = CMat::Zero(n, n);
      E(a, b) = 1.0;
      CMat R = mi * (H * E - E * H) + 2.0 * Lj * E * Ljd - K * E - E * K;
      G.col(a * n + b) = vectorize(R);
    }
  return G;
}

inline CMat dense_generator(const Grid& g, const Potential& pot, const PhysicalParams& p) {
  return CMat(assemble_generator(g, pot, p).op);
}

// exp(t G) v
inline CVec exact_propagate(const CMat& G, const CVec& v, double t) {
  CMat tG = t * G;
  CMat E = tG.exp();
  return E * v;
}

}  // namespace qld::oracles
