#include "qim/kernels.hpp"

#include <algorithm>
#include <vector>

#include <omp.h>

namespace qim::kernels {

namespace {

inline double curvature_term(const Denominator& den, double r, double s,
                             double y, double p, double w, double xi_sq) {
  const Term t = evaluate_term(den, r * r, y, p);
  const double dq = 2.0 * r * s;  // d q / dt
  const double dp = 2.0 * w;      // d p / dt
  return t.dqq * dq * dq + 2.0 * t.dqp * dq * dp + t.dpp * dp * dp +
         2.0 * t.dq * s * s + 2.0 * t.dp * xi_sq;
}

// Pairwise combination of block partials, fixed shape for a given count.
double tree_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  if (values.size() == 1) return values[0];
  const std::size_t half = values.size() / 2;
  return tree_sum(values.first(half)) + tree_sum(values.subspan(half));
}

std::size_t block_count(std::size_t m) {
  return (m + parallel::kBlockSize - 1) / parallel::kBlockSize;
}

}  // namespace

namespace serial {

double loss_sum(const Denominator& den, const Measurements& in, double p) {
  double sum = 0.0;
  for (std::size_t k = 0; k < in.q.size(); ++k) {
    if (!in.is_active(k)) continue;
    const double d = den(in.q[k], in.y[k], p);
    const double r = in.q[k] - in.y[k];
    sum += r * r / d;
  }
  return sum;
}

GradientSums gradient_weights(const Denominator& den, const Measurements& in,
                              double p, std::span<double> dq_out) {
  GradientSums sums;
  for (std::size_t k = 0; k < in.q.size(); ++k) {
    if (!in.is_active(k)) {
      dq_out[k] = 0.0;
      continue;
    }
    const Term t = evaluate_term(den, in.q[k], in.y[k], p);
    dq_out[k] = t.dq;
    sums.loss += t.value;
    sums.dp_sum += t.dp;
  }
  return sums;
}

double curvature_sum(const Denominator& den, const CurvatureInputs& in,
                     double p) {
  double sum = 0.0;
  for (std::size_t k = 0; k < in.r.size(); ++k) {
    if (!in.active.empty() && !in.active[k]) continue;
    sum += curvature_term(den, in.r[k], in.s[k], in.y[k], p, in.w, in.xi_sq);
  }
  return sum;
}

}  // namespace serial

namespace parallel {

double loss_sum(const Denominator& den, const Measurements& in, double p) {
  const std::size_t m = in.q.size();
  const std::size_t blocks = block_count(m);
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(m, (b + 1) * kBlockSize);
    double sum = 0.0;
    for (std::size_t k = b * kBlockSize; k < end; ++k) {
      if (!in.is_active(k)) continue;
      const double d = den(in.q[k], in.y[k], p);
      const double r = in.q[k] - in.y[k];
      sum += r * r / d;
    }
    partial[b] = sum;
  }
  return tree_sum(partial);
}

GradientSums gradient_weights(const Denominator& den, const Measurements& in,
                              double p, std::span<double> dq_out) {
  const std::size_t m = in.q.size();
  const std::size_t blocks = block_count(m);
  std::vector<double> loss(blocks, 0.0), dp(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(m, (b + 1) * kBlockSize);
    double loss_b = 0.0, dp_b = 0.0;
    for (std::size_t k = b * kBlockSize; k < end; ++k) {
      if (!in.is_active(k)) {
        dq_out[k] = 0.0;
        continue;
      }
      const Term t = evaluate_term(den, in.q[k], in.y[k], p);
      dq_out[k] = t.dq;
      loss_b += t.value;
      dp_b += t.dp;
    }
    loss[b] = loss_b;
    dp[b] = dp_b;
  }
  return {tree_sum(loss), tree_sum(dp)};
}

double curvature_sum(const Denominator& den, const CurvatureInputs& in,
                     double p) {
  const std::size_t m = in.r.size();
  const std::size_t blocks = block_count(m);
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t end = std::min(m, (b + 1) * kBlockSize);
    double sum = 0.0;
    for (std::size_t k = b * kBlockSize; k < end; ++k) {
      if (!in.active.empty() && !in.active[k]) continue;
      sum += curvature_term(den, in.r[k], in.s[k], in.y[k], p, in.w, in.xi_sq);
    }
    partial[b] = sum;
  }
  return tree_sum(partial);
}

}  // namespace parallel

double loss_sum(Reduction mode, const Denominator& den, const Measurements& in,
                double p) {
  return mode == Reduction::Blocked ? parallel::loss_sum(den, in, p)
                                    : serial::loss_sum(den, in, p);
}

GradientSums gradient_weights(Reduction mode, const Denominator& den,
                              const Measurements& in, double p,
                              std::span<double> dq_out) {
  return mode == Reduction::Blocked
             ? parallel::gradient_weights(den, in, p, dq_out)
             : serial::gradient_weights(den, in, p, dq_out);
}

double curvature_sum(Reduction mode, const Denominator& den,
                     const CurvatureInputs& in, double p) {
  return mode == Reduction::Blocked ? parallel::curvature_sum(den, in, p)
                                    : serial::curvature_sum(den, in, p);
}

}  // namespace qim::kernels
