#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace qld {

struct Potential {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> gradient;
  double x_star = 0.0;
  double v_star = 0.0;
  std::vector<double> kinks;  // points where gradient is a convention, not a derivative

  Vec sample(const Grid& g) const {
    Vec v(g.nodes.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = value(g.nodes[i]);
    return v;
  }
};

struct PotentialSpec {
  std::string name = "quadratic";
  double m = 1.0;      // quadratic / asymmetric_well mass
  double omega = 1.0;  // quadratic frequency
  double w = 2.0;      // asymmetric_well frequency
  double a = 0.5;      // asymmetric_well half-separation
  double c = 0.0;      // constant level
};

namespace detail {

// Golden-section search followed by a few secant steps on the gradient.
inline double refine_min(const std::function<double(double)>& f,
                         const std::function<double(double)>& df, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-14; ++it) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a); fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  double h = 1e-6;
  for (int it = 0; it < 20; ++it) {
    double g0 = df(x);
    double g1 = (df(x + h) - df(x - h)) / (2 * h);
    if (g1 <= 0 || !std::isfinite(g1)) break;
    double step = g0 / g1;
    if (std::abs(step) > 1e-6) break;
    x -= step;
    if (std::abs(step) < 1e-16) break;
  }
  return x;
}

inline double scan_min(const std::function<double(double)>& f, double lo, double hi, int samples) {
  double best = lo, fb = f(lo);
  for (int i = 1; i <= samples; ++i) {
    double x = lo + (hi - lo) * i / samples;
    double v = f(x);
    if (v < fb) { fb = v; best = x; }
  }
  return best;
}

inline Potential shifted(std::string name, std::function<double(double)> f,
                         std::function<double(double)> df, double x_star,
                         std::vector<double> kinks = {}) {
  double shift = f(x_star);
  Potential p;
  p.name = std::move(name);
  p.value = [f, shift](double x) { return f(x) - shift; };
  p.gradient = std::move(df);
  p.x_star = x_star;
  p.v_star = 0.0;
  p.kinks = std::move(kinks);
  return p;
}

inline Potential numeric_min(std::string name, std::function<double(double)> f,
                             std::function<double(double)> df, double lo, double hi) {
  double x0 = scan_min(f, lo, hi, 20000);
  double step = (hi - lo) / 20000.0;
  double xs = refine_min(f, df, x0 - 2 * step, x0 + 2 * step);
  return shifted(std::move(name), std::move(f), std::move(df), xs);
}

}  // namespace detail

inline Potential make_quadratic(double m, double omega) {
  double k = m * omega * omega;
  Potential p;
  p.name = "quadratic";
  p.value = [k](double x) { return 0.5 * k * x * x; };
  p.gradient = [k](double x) { return k * x; };
  return p;
}

inline Potential make_constant(double c) {
  Potential p;
  p.name = "constant";
  p.value = [c](double) { return c; };
  p.gradient = [](double) { return 0.0; };
  p.v_star = 0.0;
  return p;
}

inline Potential make_asymmetric_well(double m = 10.0, double w = 2.0, double a = 0.5) {
  const double v0 = m * w * w * a * a / 8.0;
  auto f = [v0, a](double x) {
    double u = x / a;
    return v0 * ((u * u - 1) * (u * u - 1) - 1 - 0.3 * u);
  };
  auto df = [v0, a](double x) {
    double u = x / a;
    return v0 * (4 * u * (u * u - 1) - 0.3) / a;
  };
  auto p = detail::numeric_min("asymmetric_well", f, df, 0.0, 2.0 * a);
  return p;
}

inline Potential potential_by_name(const PotentialSpec& s) {
  using std::cos, std::sin, std::sqrt, std::abs, std::pow;
  constexpr double pi = std::numbers::pi;
  const std::string& n = s.name;
  if (n == "quadratic") return make_quadratic(s.m, s.omega);
  if (n == "constant") return make_constant(s.c);
  if (n == "asymmetric_well") return make_asymmetric_well(s.m, s.w, s.a);
  if (n == "dcs") {
    auto f = [](double x) {
      double r = sqrt(42.25 * x * x + 25.0);
      return 0.1 * (42.25 * x * x + 25.0) - cos(5.0 * r);
    };
    auto df = [](double x) {
      double r = sqrt(42.25 * x * x + 25.0);
      return 0.2 * 42.25 * x + sin(5.0 * r) * 5.0 * 42.25 * x / r;
    };
    return detail::shifted("dcs", f, df, 0.0);
  }
  if (n == "csendes") {
    auto f = [](double x) { return x == 0.0 ? 0.0 : pow(x, 6) * (2.0 + sin(1.0 / x)); };
    auto df = [](double x) {
      if (x == 0.0) return 0.0;
      return 6 * pow(x, 5) * (2.0 + sin(1.0 / x)) - pow(x, 4) * cos(1.0 / x);
    };
    return detail::shifted("csendes", f, df, 0.0, {0.0});
  }
  if (n == "michalewicz") {
    auto f = [](double x) {
      double u = 1.2 * (x + 1.7);
      return -sin(u) * pow(sin(2 * u * u / pi), 20);
    };
    auto df = [](double x) {
      double u = 1.2 * (x + 1.7);
      double s = sin(2 * u * u / pi);
      return -1.2 * (cos(u) * pow(s, 20) +
                     sin(u) * 20 * pow(s, 19) * cos(2 * u * u / pi) * 4 * u / pi);
    };
    return detail::numeric_min("michalewicz", f, df, -1.0, 1.0);
  }
  if (n == "alpine1") {
    auto g = [](double x) { return 8 * x * sin(8 * x) + 0.8 * x; };
    auto f = [g](double x) { return abs(g(x)); };
    auto df = [g](double x) {
      double v = g(x);
      if (v == 0.0) return 0.0;
      double d = 8 * sin(8 * x) + 64 * x * cos(8 * x) + 0.8;
      return v > 0 ? d : -d;
    };
    // zeros of g other than the origin: sin(8x) = -0.1
    std::vector<double> kinks{0.0};
    for (int k = -3; k <= 3; ++k) {
      for (double base : {std::asin(-0.1), pi - std::asin(-0.1)}) {
        double z = (base + 2 * pi * k) / 8.0;
        if (z >= -1.0 && z <= 1.0) kinks.push_back(z);
      }
    }
    return detail::shifted("alpine1", f, df, 0.0, kinks);
  }
  if (n == "bohachevsky2") {
    auto f = [pi](double x) { return 9 * x * x - 0.3 * cos(9 * pi * x) + 0.3; };
    auto df = [pi](double x) { return 18 * x + 0.3 * 9 * pi * sin(9 * pi * x); };
    return detail::shifted("bohachevsky2", f, df, 0.0);
  }
  if (n == "griewank") {
    auto f = [](double x) { return 225.0 * x * x / 4000.0 - cos(15 * x) + 1.0; };
    auto df = [](double x) { return 450.0 * x / 4000.0 + 15.0 * sin(15 * x); };
    return detail::shifted("griewank", f, df, 0.0);
  }
  if (n == "double_well") {
    auto f = [](double x) { return 83.9808 * pow(x, 4) - 64.8 * x * x + 7.2 * x + 17.0680; };
    auto df = [](double x) { return 4 * 83.9808 * pow(x, 3) - 129.6 * x + 7.2; };
    return detail::numeric_min("double_well", f, df, -1.0, 0.0);
  }
  throw config_error("unknown potential: " + n);
}

inline Potential potential_by_name(const std::string& name) {
  PotentialSpec s;
  s.name = name;
  if (name == "asymmetric_well") s.m = 10.0;
  return potential_by_name(s);
}

inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> names{"dcs",          "csendes",  "michalewicz",
                                              "alpine1",      "bohachevsky2", "griewank",
                                              "double_well"};
  return names;
}

}  // namespace qld
