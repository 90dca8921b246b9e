#pragma once

#include <cmath>
#include <functional>

#include "qim/losses.hpp"
#include "qim/measurements.hpp"
#include "qim/rng.hpp"

namespace qim::test {

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline RealVector real_part(const Vector& v) { return v.real(); }

inline Vector as_complex(const RealVector& v) { return v.cast<std::complex<double>>(); }

inline RealVector random_real(Index n, std::uint64_t seed) {
  Rng rng(seed);
  RealVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

inline RealVector random_unit(Index n, std::uint64_t seed) {
  RealVector v = random_real(n, seed);
  return v / v.norm();
}

// Central differences, step h per coordinate.
inline RealVector fd_gradient(const std::function<double(const RealVector&)>& f,
                              const RealVector& u, double h) {
  RealVector g(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    RealVector up = u, dn = u;
    up[i] += h;
    dn[i] -= h;
    g[i] = (f(up) - f(dn)) / (2.0 * h);
  }
  return g;
}

// Fourth-order second difference along xi.
inline double fd_second(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) /
         (12.0 * h * h);
}

inline double fd_first(const std::function<double(double)>& f, double h) {
  return (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12.0 * h);
}

}  // namespace qim::test
