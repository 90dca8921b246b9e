#include <gtest/gtest.h>

#include <omp.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "qim/error.hpp"
#include "qim/oracles.hpp"

namespace {

using namespace qim;
using namespace qim::oracles;

// e^{x^2} erfc(x) in long double; erfcl stays normal well past x = 100.
double erfcx_ref(double x) {
  const long double lx = x;
  return static_cast<double>(std::erfc(lx) * std::exp(lx * lx));
}

double g_ref(double x) { return 0.5 * std::sqrt(std::numbers::pi) * erfcx_ref(x); }

// E f for QIM2 with unit x: the Y integral is done in closed form from the
// Gaussian moments of Z = X cos + Y sin, the X integral by quadrature.
double qim2_expected_loss_ref(double beta, double R, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  auto integrand = [&](double X) {
    const double mu = X * c, s2 = s * s, X2 = X * X;
    const double ez2 = mu * mu + s2;
    const double ez4 = mu * mu * mu * mu + 6 * mu * mu * s2 + 3 * s2 * s2;
    const double num = R * R * ez4 - 2 * R * X2 * ez2 + X2 * X2;
    return std::exp(-0.5 * X2) / std::sqrt(2 * std::numbers::pi) * num / (beta * R + X2);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, -std::numeric_limits<double>::infinity(),
      std::numeric_limits<double>::infinity(), 15, 1e-13);
}

TEST(Erfcx, MatchesLongDoubleReference) {
  for (double x = 0.0; x <= 100.0; x += 0.0731) {
    EXPECT_LE(std::abs(erfcx(x) - erfcx_ref(x)), 1e-12 * erfcx_ref(x)) << x;
  }
  for (double x : {1e-8, 1e-3, 0.5, 1.9999, 2.0, 2.0001, 5.0, 26.5, 99.0}) {
    EXPECT_LE(std::abs(erfcx(x) - erfcx_ref(x)), 1e-12 * erfcx_ref(x)) << x;
  }
}

TEST(Erfcx, Examples) {
  EXPECT_EQ(erfcx(0.0), 1.0);
  EXPECT_NEAR(erfcx(1.0), 0.42758, 5e-6);
  EXPECT_NEAR(erfcx(1e3) * 1e3 * std::sqrt(std::numbers::pi), 1.0, 1e-5);
  EXPECT_THROW(erfcx(-0.1), QimError);
}

TEST(Erfcx, MonotoneDecreasing) {
  double prev = erfcx(0.0);
  for (double x = 0.01; x < 60.0; x *= 1.05) {
    const double v = erfcx(x);
    EXPECT_LT(v, prev) << x;
    prev = v;
  }
}

TEST(ErfcBounds, AtOne) {
  const auto rec = erfc_bounds_check({1.0}).front();
  EXPECT_NEAR(rec.refined_lower, 7.0 / 19.0, 1e-15);
  EXPECT_NEAR(rec.refined_upper, 0.4, 1e-15);
  EXPECT_NEAR(rec.g, 0.37894, 5e-6);
  EXPECT_NEAR(rec.g, g_ref(1.0), 1e-15);
  EXPECT_TRUE(rec.pass);
  EXPECT_GT(rec.margin, 0.0);
}

TEST(ErfcBounds, LimitsNearZero) {
  const auto rec = erfc_bounds_check({1e-6}).front();
  EXPECT_GT(rec.refined_upper, 1e5);
  EXPECT_LT(rec.refined_lower, 1e-5);
  EXPECT_TRUE(rec.pass);
}

TEST(ErfcBounds, LogGridHoldsWithPositiveMargin) {
  std::vector<double> grid;
  for (int i = 0; i < 500; ++i) grid.push_back(1e-3 * std::pow(5e4, i / 499.0));
  for (const auto& rec : erfc_bounds_check(grid)) {
    // independent recheck of all four inequalities
    const double g = g_ref(rec.x), x = rec.x;
    EXPECT_LT(x * (5 + 2 * x * x) / (3 + 4 * x * x * (3 + x * x)), g) << x;
    EXPECT_LT(g, (1 + x * x) / (x * (3 + 2 * x * x))) << x;
    EXPECT_LT(1 / (x + std::sqrt(x * x + 2)), g) << x;
    EXPECT_LE(g, 1 / (x + std::sqrt(x * x + 4 / std::numbers::pi))) << x;
    EXPECT_TRUE(rec.pass) << x;
    EXPECT_GT(rec.margin, 0.0) << x;
  }
}

TEST(Series, FirstTermIsUpperBound) {
  for (double x : {0.1, 0.5, 1.0, 4.0, 30.0}) {
    const auto s = asymptotic_series_g(x, 0);
    EXPECT_DOUBLE_EQ(s.sum, 1.0 / (2.0 * x));
    EXPECT_TRUE(s.upper);
    EXPECT_GT(s.sum, g_ref(x));
  }
}

TEST(Series, ConsecutiveSumsBracket) {
  const double g3 = g_ref(3.0);
  const auto s4 = asymptotic_series_g(3.0, 4), s5 = asymptotic_series_g(3.0, 5);
  EXPECT_GT(s4.sum, g3);
  EXPECT_LT(s5.sum, g3);
}

TEST(Series, RemainderBound) {
  const auto s = asymptotic_series_g(2.0, 3);
  // x^{-9} (1/2) (1/2)_4 with (1/2)_4 = 105/16
  EXPECT_NEAR(s.remainder_bound, std::pow(2.0, -9) * 0.5 * 105.0 / 16.0, 1e-18);
  EXPECT_LT(std::abs(g_ref(2.0) - s.sum), s.remainder_bound);
}

TEST(Series, EnclosureGrid) {
  for (double x : {0.5, 1.0, 2.0, 3.0, 5.0}) {
    const double g = g_ref(x);
    for (int m = 0; m <= 8; ++m) {
      const auto s = asymptotic_series_g(x, m);
      EXPECT_EQ(s.upper, m % 2 == 0);
      if (s.upper) {
        EXPECT_GT(s.sum, g) << x << " " << m;
      } else {
        EXPECT_LT(s.sum, g) << x << " " << m;
      }
      EXPECT_LE(std::abs(g - s.sum), s.remainder_bound) << x << " " << m;
    }
  }
  EXPECT_THROW(asymptotic_series_g(0.0, 2), QimError);
  EXPECT_THROW(asymptotic_series_g(1.0, -1), QimError);
}

TEST(Qim2Coefficients, SignsOnGrid) {
  for (double beta : {0.1, 0.5, 1.0, 2.0, 10.0}) {
    for (double R : {0.25, 0.5, 1.0, 2.0, 4.0}) {
      const auto c = qim2_expected_coeffs(beta, R);
      EXPECT_GT(c.c1, 0.0) << beta << " " << R;
      EXPECT_LT(c.c2, 0.0) << beta << " " << R;
      EXPECT_LT(c.c1 + c.c2, 0.0) << beta << " " << R;
    }
  }
  EXPECT_THROW(qim2_expected_coeffs(0.0, 1.0), QimError);
  EXPECT_THROW(qim2_expected_coeffs(1.0, -1.0), QimError);
}

TEST(Qim2Coefficients, VanishAtTruth) {
  for (double beta : {0.3, 1.0, 4.0}) {
    const auto c = qim2_expected_coeffs(beta, 1.0);
    EXPECT_NEAR(c.c1 + 2 * c.c2 + c.c3, 0.0, 1e-10 * (std::abs(c.c1) + std::abs(c.c3)));
  }
}

TEST(Qim2Coefficients, ExpectedLossMatchesQuadrature) {
  for (double beta : {0.5, 1.0, 3.0}) {
    for (double R : {0.3, 1.0, 2.5}) {
      for (double theta : {0.0, 0.4, std::numbers::pi / 4, 1.3, std::numbers::pi / 2}) {
        const double ref = qim2_expected_loss_ref(beta, R, theta);
        EXPECT_NEAR(qim2_expected_loss(beta, R, theta), ref, 1e-9 * (1.0 + std::abs(ref)))
            << beta << " " << R << " " << theta;
      }
    }
  }
}

TEST(MonteCarlo, Qim2AtTruthIsZero) {
  const auto e = mc_expectation_2d(QimModel::qim2(1.0), 1.0, 0.0, 100000, 3);
  EXPECT_LE(std::abs(e.f.mean), 3 * e.f.std_error + 1e-15);
}

TEST(MonteCarlo, Qim2MatchesClosedForm) {
  const double closed = qim2_expected_loss(1.0, 1.0, std::numbers::pi / 4);
  const auto e = mc_expectation_2d(QimModel::qim2(1.0), 1.0, std::numbers::pi / 4, 1000000, 4);
  EXPECT_EQ(e.samples, 1000000);
  EXPECT_GT(e.f.std_error, 0.0);
  EXPECT_LE(std::abs(e.f.mean - closed), 3 * e.f.std_error);
  const auto a = mc_expectation_2d(QimModel::qim2(1.0), 1.0, std::numbers::pi / 4, 400000, 5,
                                   true);
  EXPECT_LE(std::abs(a.f.mean - closed), 3 * a.f.std_error);
}

TEST(MonteCarlo, Qim3AngularDerivativeSign) {
  const auto q3 = QimModel::qim3(0.1, 1.0);
  const auto a = mc_expectation_2d(q3, 1.0, std::numbers::pi / 4, 1000000, 6);
  const auto b = mc_expectation_2d(q3, 1.0, 3 * std::numbers::pi / 4, 1000000, 7);
  EXPECT_GT(a.df_dtheta.mean, 3 * a.df_dtheta.std_error);
  EXPECT_LT(b.df_dtheta.mean, -3 * b.df_dtheta.std_error);
}

TEST(MonteCarlo, AngularDerivativeVanishesAtSymmetryAngles) {
  for (const auto& model : {QimModel::qim2(1.0), QimModel::qim3(0.1, 1.0)}) {
    for (double theta : {0.0, std::numbers::pi / 2, std::numbers::pi}) {
      const auto e = mc_expectation_2d(model, 1.3, theta, 200000, 8);
      EXPECT_LE(std::abs(e.df_dtheta.mean), 3 * e.df_dtheta.std_error + 1e-14)
          << model.name() << " " << theta;
    }
  }
}

TEST(MonteCarlo, QuadraticInCosSquared) {
  const double beta = 1.0, R = 1.4;
  std::vector<double> s, f, se;
  for (double sv : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const auto e =
        mc_expectation_2d(QimModel::qim2(beta), R, std::acos(std::sqrt(sv)), 400000, 9);
    s.push_back(sv);
    f.push_back(e.f.mean);
    se.push_back(e.f.std_error);
  }
  Eigen::MatrixXd V(5, 3);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    V(i, 0) = s[i] * s[i];
    V(i, 1) = s[i];
    V(i, 2) = 1.0;
    y[i] = f[i];
  }
  const Eigen::VectorXd coef = V.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd resid = y - V * coef;
  for (int i = 0; i < 5; ++i) EXPECT_LE(std::abs(resid[i]), 3 * se[i]) << s[i];
}

TEST(MonteCarlo, ThreadCountIndependent) {
  omp_set_num_threads(1);
  const auto a = mc_expectation_2d(QimModel::qim3(), 0.8, 1.0, 300000, 10);
  omp_set_num_threads(4);
  const auto b = mc_expectation_2d(QimModel::qim3(), 0.8, 1.0, 300000, 10);
  omp_set_num_threads(omp_get_num_procs());
  EXPECT_EQ(a.f.mean, b.f.mean);
  EXPECT_EQ(a.df_dtheta.std_error, b.df_dtheta.std_error);
  EXPECT_EQ(a.d2f_dtheta2.mean, b.d2f_dtheta2.mean);
}

TEST(MonteCarlo, TooFewSamples) {
  EXPECT_THROW(mc_expectation_2d(QimModel::qim2(), 1.0, 0.5, 999, 1), QimError);
}

TEST(Suite, SmallSampleStillPasses) {
  OracleSuiteOptions opt;
  opt.mc_samples = 1000;
  const auto report = run_oracle_suite(opt);
  EXPECT_TRUE(report.all_pass());
  std::set<std::string> names;
  for (const auto& c : report.checks) names.insert(c.name);
  for (const char* n : {"erfc_bounds", "asymptotic_series_enclosure", "qim2_coefficient_signs",
                        "qim2_expected_loss_mc", "qim3_dtheta_sign"}) {
    EXPECT_TRUE(names.count(n)) << n;
  }
}

}  // namespace
