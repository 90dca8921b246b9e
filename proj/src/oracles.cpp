#include "qim/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "qim/error.hpp"
#include "qim/rng.hpp"

namespace qim::oracles {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrtPi = 1.7724538509055160273;

// e^{x^2} - e^{x^2} erf(x), with e^{x^2} erf(x) = (2/sqrt(pi)) sum 2^n x^{2n+1}/(2n+1)!!
double erfcx_series(double x) {
  const long double xl = x;
  const long double x2 = xl * xl;
  long double term = xl;  // 2^n x^{2n+1} / (2n+1)!!
  long double sum = term;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0L * x2 / (2.0L * n + 1.0L);
    sum += term;
    if (term < sum * 1e-21L) break;
  }
  const long double two_over_sqrt_pi = 1.1283791670955125738961589L;
  return static_cast<double>(std::exp(x2) - two_over_sqrt_pi * sum);
}

// sqrt(pi) erfcx(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))), modified Lentz.
double erfcx_continued_fraction(double x) {
  const double tiny = 1e-300;
  double f = x;
  double c = f;
  double d = 0.0;
  for (int j = 1; j < 5000; ++j) {
    const double a = 0.5 * j;
    d = x + a * d;
    if (d == 0.0) d = tiny;
    c = x + a / c;
    if (c == 0.0) c = tiny;
    d = 1.0 / d;
    const double delta = c * d;
    f *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 / (kSqrtPi * f);
}

struct Welford {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    count += 1.0;
    const double delta = v - mean;
    mean += delta / count;
    m2 += delta * (v - mean);
  }
  void merge(const Welford& other) {
    if (other.count == 0.0) return;
    const double total = count + other.count;
    const double delta = other.mean - mean;
    mean += delta * other.count / total;
    m2 += other.m2 + delta * delta * count * other.count / total;
    count = total;
  }
  McValue value() const {
    McValue v;
    v.mean = mean;
    v.std_error = count > 1.0 ? std::sqrt(m2 / (count - 1.0) / count) : 0.0;
    return v;
  }
};

}  // namespace

double erfcx(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw QimError(ErrorCode::DomainError, "erfcx needs x >= 0");
  }
  if (x < 2.0) return erfcx_series(x);
  if (std::isinf(x)) return 0.0;
  return erfcx_continued_fraction(x);
}

double g_function(double x) { return 0.5 * kSqrtPi * erfcx(x); }

std::vector<ErfcBoundRecord> erfc_bounds_check(const std::vector<double>& x_grid) {
  std::vector<ErfcBoundRecord> out;
  out.reserve(x_grid.size());
  for (double x : x_grid) {
    ErfcBoundRecord rec;
    rec.x = x;
    if (!(x > 0.0) || !std::isfinite(x)) {
      out.push_back(rec);
      continue;
    }
    const double x2 = x * x;
    rec.g = g_function(x);
    rec.refined_lower = x * (5.0 + 2.0 * x2) / (3.0 + 4.0 * x2 * (3.0 + x2));
    rec.refined_upper = (1.0 + x2) / (x * (3.0 + 2.0 * x2));
    rec.classical_lower = 1.0 / (x + std::sqrt(x2 + 2.0));
    rec.classical_upper = 1.0 / (x + std::sqrt(x2 + 4.0 / kPi));
    rec.margin = std::min({rec.g - rec.refined_lower, rec.refined_upper - rec.g,
                           rec.g - rec.classical_lower, rec.classical_upper - rec.g}) /
                 rec.g;
    rec.pass = rec.margin > 0.0;
    out.push_back(rec);
  }
  return out;
}

SeriesPartialSum asymptotic_series_g(double x, int last_index) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw QimError(ErrorCode::DomainError, "asymptotic series needs x > 0");
  }
  if (last_index < 0) {
    throw QimError(ErrorCode::DomainError, "asymptotic series needs m >= 0");
  }
  SeriesPartialSum out;
  out.x = x;
  out.last_index = last_index;
  out.upper = last_index % 2 == 0;
  const double inv_x2 = 1.0 / (x * x);
  // magnitude of term k: x^{-(2k+1)} (1/2) (1/2)_k
  double magnitude = 0.5 / x;
  double sum = 0.0;
  for (int k = 0; k <= last_index; ++k) {
    sum += (k % 2 == 0 ? magnitude : -magnitude);
    magnitude *= (k + 0.5) * inv_x2;
  }
  out.sum = sum;
  out.remainder_bound = magnitude;
  return out;
}

Qim2Coefficients qim2_expected_coeffs(double beta, double R) {
  if (!(beta > 0.0) || !(R > 0.0) || !std::isfinite(beta) || !std::isfinite(R)) {
    throw QimError(ErrorCode::DomainError, "qim2 coefficients need beta, R > 0");
  }
  const double br = beta * R;
  const double sqrt_br = std::sqrt(br);
  const double e = erfcx(std::sqrt(0.5 * br));
  const double sqrt_2pi = std::sqrt(2.0 * kPi);
  Qim2Coefficients c;
  c.c2 = (3.0 + beta) / (2.0 * beta) * (br * sqrt_2pi - kPi * sqrt_br * (1.0 + br) * e);
  c.c1 = (-sqrt_2pi * br * (5.0 + br) + kPi * sqrt_br * (3.0 + br * (6.0 + br)) * e) /
         (2.0 * beta);
  boost::math::quadrature::exp_sinh<double> integrator;
  auto h = [&](double t) {
    const double t2 = t * t;
    const double weight = std::exp(-0.5 * t2);
    if (weight == 0.0) return 0.0;
    return (3.0 * R * R - 2.0 * R * t2 + t2 * t2) / (br + t2) * weight;
  };
  c.c3 = integrator.integrate(h, 0.0, std::numeric_limits<double>::infinity(), 1e-12) / R;
  return c;
}

double qim2_expected_loss(double beta, double R, double theta) {
  const Qim2Coefficients c = qim2_expected_coeffs(beta, R);
  const double s = std::cos(theta) * std::cos(theta);
  return std::sqrt(2.0 / kPi) * R * (c.c1 * s * s + 2.0 * c.c2 * s + c.c3);
}

McExpectation mc_expectation_2d(const QimModel& model, double R, double theta,
                                std::int64_t samples, std::uint64_t seed,
                                bool antithetic) {
  model.validate();
  if (!(R > 0.0)) throw QimError(ErrorCode::DomainError, "mc needs R > 0");
  if (samples < 1000) {
    throw QimError(ErrorCode::InvalidConfig, "mc needs at least 1000 samples");
  }
  constexpr std::int64_t kChunk = 1 << 16;
  const std::int64_t chunks = (samples + kChunk - 1) / kChunk;
  const auto den = model.denominator();
  const double c = std::cos(theta), s = std::sin(theta);

  struct Triple {
    double f, ft, ftt;
  };
  auto integrand = [&](double x, double y) -> Triple {
    const double z = x * c + y * s;
    const double zt = -x * s + y * c;
    const auto t = kernels::evaluate_term(den, R * z * z, x * x, R);
    const double q_t = 2.0 * R * z * zt;
    const double q_tt = 2.0 * R * (zt * zt - z * z);
    return {t.value, t.dq * q_t, t.dqq * q_t * q_t + t.dq * q_tt};
  };

  std::vector<Welford> acc(static_cast<std::size_t>(3 * chunks));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ch = 0; ch < chunks; ++ch) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ch)));
    const std::int64_t count = std::min(kChunk, samples - ch * kChunk);
    Welford* w = &acc[static_cast<std::size_t>(3 * ch)];
    for (std::int64_t i = 0; i < count; ++i) {
      const double x = rng.normal();
      const double y = rng.normal();
      Triple v = integrand(x, y);
      if (antithetic) {
        const Triple mirror = integrand(x, -y);
        v = {0.5 * (v.f + mirror.f), 0.5 * (v.ft + mirror.ft),
             0.5 * (v.ftt + mirror.ftt)};
      }
      w[0].add(v.f);
      w[1].add(v.ft);
      w[2].add(v.ftt);
    }
  }
  Welford total[3];
  for (std::int64_t ch = 0; ch < chunks; ++ch) {
    for (int j = 0; j < 3; ++j) total[j].merge(acc[static_cast<std::size_t>(3 * ch + j)]);
  }
  McExpectation out;
  out.f = total[0].value();
  out.df_dtheta = total[1].value();
  out.d2f_dtheta2 = total[2].value();
  out.samples = samples;
  return out;
}

bool OracleReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const OracleCheck& c) { return c.pass; });
}

OracleReport run_oracle_suite(const OracleSuiteOptions& options) {
  OracleReport report;

  {
    std::vector<double> grid(static_cast<std::size_t>(options.bound_points));
    const double lo = std::log(1e-3), hi = std::log(50.0);
    for (int i = 0; i < options.bound_points; ++i) {
      const double frac =
          options.bound_points > 1 ? static_cast<double>(i) / (options.bound_points - 1) : 0.0;
      grid[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * frac);
    }
    grid.front() = 1e-3;
    if (grid.size() > 1) grid.back() = 50.0;
    const auto records = erfc_bounds_check(grid);
    OracleCheck check;
    check.name = "erfc_bounds";
    check.inputs = {{"points", static_cast<double>(grid.size())},
                    {"x_min", grid.front()},
                    {"x_max", grid.back()}};
    double margin = std::numeric_limits<double>::infinity();
    double worst_x = 0.0;
    std::size_t failures = 0;
    for (const auto& r : records) {
      if (!r.pass) ++failures;
      if (r.margin < margin) {
        margin = r.margin;
        worst_x = r.x;
      }
    }
    check.values = {{"failures", static_cast<double>(failures)}, {"worst_x", worst_x}};
    check.margin = margin;
    check.pass = failures == 0 && margin > 0.0;
    report.checks.push_back(std::move(check));
  }

  for (double x : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    OracleCheck check;
    check.name = "asymptotic_series_enclosure";
    const double g = g_function(x);
    double margin = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (int m = 0; m <= 8; ++m) {
      const auto s = asymptotic_series_g(x, m);
      const double side = s.upper ? s.sum - g : g - s.sum;
      const double slack = s.remainder_bound - std::abs(g - s.sum);
      pass = pass && side > 0.0 && slack >= 0.0;
      margin = std::min({margin, side / g, slack / s.remainder_bound});
    }
    check.inputs = {{"x", x}, {"m_max", 8.0}};
    check.values = {{"g", g}};
    check.margin = margin;
    check.pass = pass;
    report.checks.push_back(std::move(check));
  }

  {
    OracleCheck check;
    check.name = "qim2_coefficient_signs";
    double margin = std::numeric_limits<double>::infinity();
    bool pass = true;
    for (double beta : {0.1, 0.5, 1.0, 2.0, 10.0}) {
      for (double R : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const auto c = qim2_expected_coeffs(beta, R);
        pass = pass && c.c1 > 0.0 && c.c2 < 0.0 && c.c1 + c.c2 < 0.0;
        margin = std::min({margin, c.c1, -c.c2, -(c.c1 + c.c2)});
      }
    }
    check.inputs = {{"grid_points", 25.0}};
    check.margin = margin;
    check.pass = pass;
    report.checks.push_back(std::move(check));
  }

  const QimModel qim2 = QimModel::qim2(1.0);
  std::uint64_t stream = 0;
  for (double R : {0.5, 1.0, 2.0}) {
    for (double theta : {0.3, kPi / 4.0, 1.2}) {
      const auto mc = mc_expectation_2d(qim2, R, theta, options.mc_samples,
                                        derive_seed(options.seed, stream++),
                                        options.antithetic);
      const double closed = qim2_expected_loss(1.0, R, theta);
      OracleCheck check;
      check.name = "qim2_expected_loss_mc";
      check.inputs = {{"beta", 1.0}, {"R", R}, {"theta", theta},
                      {"samples", static_cast<double>(options.mc_samples)}};
      check.values = {{"closed_form", closed},
                      {"mc_mean", mc.f.mean},
                      {"mc_std_error", mc.f.std_error}};
      check.margin = 3.0 * mc.f.std_error - std::abs(mc.f.mean - closed);
      check.pass = check.margin >= 0.0;
      report.checks.push_back(std::move(check));
    }
  }

  const QimModel qim3 = QimModel::qim3(0.1, 1.0);
  for (double theta : {kPi / 4.0, 3.0 * kPi / 4.0}) {
    const auto mc = mc_expectation_2d(qim3, 1.0, theta, options.mc_samples,
                                      derive_seed(options.seed, stream++),
                                      options.antithetic);
    const double expected_sign = std::sin(2.0 * theta) > 0.0 ? 1.0 : -1.0;
    OracleCheck check;
    check.name = "qim3_dtheta_sign";
    check.inputs = {{"beta1", 0.1}, {"beta2", 1.0}, {"R", 1.0}, {"theta", theta},
                    {"samples", static_cast<double>(options.mc_samples)}};
    check.values = {{"mc_mean", mc.df_dtheta.mean},
                    {"mc_std_error", mc.df_dtheta.std_error},
                    {"expected_sign", expected_sign}};
    check.margin = expected_sign * mc.df_dtheta.mean - 3.0 * mc.df_dtheta.std_error;
    check.pass = check.margin > 0.0;
    report.checks.push_back(std::move(check));
  }
  return report;
}

}  // namespace qim::oracles
