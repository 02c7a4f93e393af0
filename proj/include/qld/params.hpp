#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "grid.hpp"

namespace qld {

struct PhysicalParams {
  double hbar = 1.0;
  double m = 1.0;
  double omega = 1.0;
  double eta = 0.0;
  double k = 1.0;  // Boltzmann constant in simulation units
  double T = 0.0;

  double kT() const { return k * T; }

  void validate() const {
    if (!(hbar > 0) || !(m > 0) || !(omega > 0) || !(k > 0))
      throw config_error("params: hbar, m, omega, k must be positive");
    if (!(eta >= 0) || !(T >= 0)) throw config_error("params: eta and T must be non-negative");
  }
};

struct MuNu {
  double mu2 = 0.0;
  double nu2 = 0.0;
};

// coth(a) with a = hbar*Omega/(4kT); T = 0 is the a -> infinity limit.
inline double coth_quarter(const PhysicalParams& p) {
  if (p.T == 0.0) return 1.0;
  double a = p.hbar * p.omega / (4.0 * p.kT());
  if (a < 1e-4) return 1.0 / a + a / 3.0 - a * a * a / 45.0;
  return 1.0 / std::tanh(a);
}

inline double tanh_quarter(const PhysicalParams& p) {
  if (p.T == 0.0) return 1.0;
  return std::tanh(p.hbar * p.omega / (4.0 * p.kT()));
}

inline MuNu mu_nu(const PhysicalParams& p) {
  MuNu r;
  r.mu2 = p.eta * p.m * p.omega / (2.0 * p.hbar) * coth_quarter(p);
  r.nu2 = p.eta / (2.0 * p.hbar * p.m * p.omega) * tanh_quarter(p);
  return r;
}

}  // namespace qld
