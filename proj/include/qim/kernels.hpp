#pragma once

#include <cstdint>
#include <span>

namespace qim::kernels {

/// Per-measurement denominator D = constant + on_norm*p + on_model*q + on_data*y
/// with p = ||u||^2, q = |a.u|^2, y the datum.
struct Denominator {
  double constant = 0.0;
  double on_norm = 0.0;
  double on_model = 0.0;
  double on_data = 0.0;

  double operator()(double q, double y, double p) const {
    return constant + on_norm * p + on_model * q + on_data * y;
  }
};

/// phi(q, p) = (q - y)^2 / D and its partial derivatives in (q, p).
struct Term {
  double value;
  double dq;
  double dp;
  double dqq;
  double dqp;
  double dpp;
};

inline Term evaluate_term(const Denominator& den, double q, double y, double p) {
  const double d = den(q, y, p);
  const double inv = 1.0 / d;
  const double r = q - y;
  const double ratio = r * inv;            // N/D
  const double ratio_sq = ratio * ratio;   // N^2/D^2
  const double cq = den.on_model;
  const double cp = den.on_norm;
  Term t;
  t.value = r * ratio;
  t.dq = 2.0 * ratio - cq * ratio_sq;
  t.dp = -cp * ratio_sq;
  t.dqq = 2.0 * inv - 4.0 * cq * ratio * inv + 2.0 * cq * cq * ratio_sq * inv;
  t.dqp = -2.0 * cp * ratio * inv + 2.0 * cq * cp * ratio_sq * inv;
  t.dpp = 2.0 * cp * cp * ratio_sq * inv;
  return t;
}

/// Inputs shared by every reduction. `active` may be empty (all measurements
/// count); otherwise measurement k contributes only when active[k] != 0.
struct Measurements {
  std::span<const double> q;
  std::span<const double> y;
  std::span<const std::uint8_t> active;

  bool is_active(std::size_t k) const { return active.empty() || active[k] != 0; }
};

struct GradientSums {
  double loss = 0.0;     // sum_k phi
  double dp_sum = 0.0;   // sum_k d phi / dp
};

/// Sums for the second derivative of sum_k phi along u + t*xi (real field):
/// r = a.u, s = a.xi, w = u.xi, xi_sq = ||xi||^2.
struct CurvatureInputs {
  std::span<const double> r;
  std::span<const double> s;
  std::span<const double> y;
  std::span<const std::uint8_t> active;
  double w = 0.0;
  double xi_sq = 1.0;
};

/// Reference implementations: one sequential pass over k in index order.
/// Results are bit-reproducible and serve as the oracle for `parallel`.
namespace serial {
double loss_sum(const Denominator& den, const Measurements& in, double p);
GradientSums gradient_weights(const Denominator& den, const Measurements& in,
                              double p, std::span<double> dq_out);
double curvature_sum(const Denominator& den, const CurvatureInputs& in, double p);
}  // namespace serial

/// OpenMP versions. Measurements are split into fixed blocks of kBlockSize,
/// each block is summed sequentially and the block partials are combined by a
/// pairwise tree, so the result does not depend on the thread count. They
/// agree with `serial` to about 1e-12 relative.
namespace parallel {
inline constexpr std::size_t kBlockSize = 1024;
double loss_sum(const Denominator& den, const Measurements& in, double p);
GradientSums gradient_weights(const Denominator& den, const Measurements& in,
                              double p, std::span<double> dq_out);
double curvature_sum(const Denominator& den, const CurvatureInputs& in, double p);
}  // namespace parallel

enum class Reduction { Sequential, Blocked };

double loss_sum(Reduction mode, const Denominator& den, const Measurements& in,
                double p);
GradientSums gradient_weights(Reduction mode, const Denominator& den,
                              const Measurements& in, double p,
                              std::span<double> dq_out);
double curvature_sum(Reduction mode, const Denominator& den,
                     const CurvatureInputs& in, double p);

}  // namespace qim::kernels
