#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qim/losses.hpp"

namespace qim::oracles {

/// e^{x^2} erfc(x) for x >= 0 without overflow. Throws DomainError for x < 0.
double erfcx(double x);

/// g(x) = e^{x^2} int_x^inf e^{-t^2} dt = (sqrt(pi)/2) erfcx(x).
double g_function(double x);

struct ErfcBoundRecord {
  double x = 0.0;
  double g = 0.0;
  double refined_lower = 0.0;
  double refined_upper = 0.0;
  double classical_lower = 0.0;
  double classical_upper = 0.0;
  /// Smallest of the four gaps, relative to g. Positive when all hold.
  double margin = 0.0;
  bool pass = false;
};

/// Refined bounds x(5+2x^2)/(3+4x^2(3+x^2)) < g(x) < (1+x^2)/(x(3+2x^2)) and
/// the classical 1/(x+sqrt(x^2+2)) < g(x) <= 1/(x+sqrt(x^2+4/pi)).
/// The classical upper bound is an equality at x = 0 only, so it is checked
/// strictly on x > 0 as well.
std::vector<ErfcBoundRecord> erfc_bounds_check(const std::vector<double>& x_grid);

struct SeriesPartialSum {
  double x = 0.0;
  int last_index = 0;
  double sum = 0.0;
  /// x^{-2m-3} (1/2) (1/2)_{m+1}
  double remainder_bound = 0.0;
  /// Even m: the sum lies above g; odd m: below.
  bool upper = true;
};

/// S_m = sum_{k=0}^{m} (-1)^k x^{-(2k+1)} (1/2) (1/2)_k. Throws DomainError
/// for x <= 0 or m < 0.
SeriesPartialSum asymptotic_series_g(double x, int last_index);

struct Qim2Coefficients {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
};

/// For unit x and u = sqrt(R)(cos(theta) x + sin(theta) e_perp), the QIM2
/// expected loss is sqrt(2/pi) R (c1 s^2 + 2 c2 s + c3), s = cos^2(theta).
/// c1, c2 are closed forms in erfcx(sqrt(beta R / 2)); c3 is a 1-D
/// quadrature. Throws DomainError on nonpositive parameters.
Qim2Coefficients qim2_expected_coeffs(double beta, double R);
double qim2_expected_loss(double beta, double R, double theta);

struct McValue {
  double mean = 0.0;
  double std_error = 0.0;
};

struct McExpectation {
  McValue f;
  McValue df_dtheta;
  McValue d2f_dtheta2;
  std::int64_t samples = 0;
};

/// Monte Carlo over (X, Y) i.i.d. N(0, 1): y = X^2, q = R Z^2, p = R with
/// Z = X cos(theta) + Y sin(theta). Samples are drawn in fixed chunks with
/// per-chunk seeds and reduced in chunk order, so the result does not depend
/// on the thread count. With `antithetic`, each draw also uses (X, -Y) and
/// the pair average counts as one sample.
McExpectation mc_expectation_2d(const QimModel& model, double R, double theta,
                                std::int64_t samples, std::uint64_t seed,
                                bool antithetic = false);

struct OracleCheck {
  std::string name;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> values;
  double margin = 0.0;
  bool pass = false;
};

struct OracleSuiteOptions {
  std::int64_t mc_samples = 1000000;
  std::uint64_t seed = 1;
  int bound_points = 500;
  bool antithetic = false;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool all_pass() const;
};

/// Erfc bounds, series enclosures, QIM2 coefficient signs, QIM2 closed form
/// vs Monte Carlo and the QIM3 angular-derivative signs.
OracleReport run_oracle_suite(const OracleSuiteOptions& options);

}  // namespace qim::oracles
