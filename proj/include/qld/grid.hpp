#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qld {

using cplx = std::complex<double>;
using RealSparse = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using ComplexSparse = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cell-centered uniform grid. Nodes never touch the interval ends, so the
// Dirichlet ghost values sit half a cell outside on both sides.
struct Grid {
  std::size_t n = 0;
  double lo = -1.0;
  double hi = 1.0;
  double dx = 0.0;
  Vec nodes;

  double x(std::size_t i) const { return nodes[static_cast<Eigen::Index>(i)]; }
};

inline Grid build_grid(std::size_t n, double lo = -1.0, double hi = 1.0) {
  if (n < 4) throw config_error("grid: n must be >= 4, got " + std::to_string(n));
  if (!(lo < hi)) throw config_error("grid: empty interval");
  Grid g;
  g.n = n;
  g.lo = lo;
  g.hi = hi;
  g.dx = (hi - lo) / static_cast<double>(n);
  g.nodes.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    g.nodes[static_cast<Eigen::Index>(i)] = lo + (static_cast<double>(i) + 0.5) * g.dx;
  return g;
}

struct DiffOperators {
  RealSparse D;  // central first derivative
  RealSparse L;  // three-point Laplacian
};

// Boundary rows are plain truncations of the interior stencil (zero ghosts).
inline DiffOperators diff_operators(const Grid& g) {
  const auto n = static_cast<Eigen::Index>(g.n);
  std::vector<Eigen::Triplet<double>> td, tl;
  td.reserve(2 * g.n);
  tl.reserve(3 * g.n);
  const double a = 1.0 / (2.0 * g.dx);
  const double b = 1.0 / (g.dx * g.dx);
  for (Eigen::Index i = 0; i < n; ++i) {
    tl.emplace_back(i, i, -2.0 * b);
    if (i > 0) {
      td.emplace_back(i, i - 1, -a);
      tl.emplace_back(i, i - 1, b);
    }
    if (i + 1 < n) {
      td.emplace_back(i, i + 1, a);
      tl.emplace_back(i, i + 1, b);
    }
  }
  DiffOperators ops;
  ops.D.resize(n, n);
  ops.L.resize(n, n);
  ops.D.setFromTriplets(td.begin(), td.end());
  ops.L.setFromTriplets(tl.begin(), tl.end());
  return ops;
}

inline RealSparse diag_sparse(const Vec& d) {
  RealSparse m(d.size(), d.size());
  m.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) m.insert(i, i) = d[i];
  m.makeCompressed();
  return m;
}

inline RealSparse identity_sparse(Eigen::Index n) {
  RealSparse m(n, n);
  m.setIdentity();
  return m;
}

}  // namespace qld
