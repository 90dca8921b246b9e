#pragma once

#include <optional>
#include <string>

#include "qim/kernels.hpp"
#include "qim/measurements.hpp"

namespace qim {

enum class ModelKind { Qim1, Qim2, Qim3, Intensity };

/// Quotient intensity loss f(u) = (1/m) sum_k (q_k - y_k)^2 / D_k with
/// q_k = |a_k . u|^2 and
///   QIM1       D_k = y_k
///   QIM2       D_k = beta ||u||^2 + y_k
///   QIM3       D_k = ||u||^2 + beta1 q_k + beta2 y_k
///   INTENSITY  D_k = 1   (plain intensity least squares)
struct QimModel {
  ModelKind kind = ModelKind::Qim2;
  double beta = 1.0;
  double beta1 = 0.1;
  double beta2 = 1.0;

  static QimModel qim1() { return {ModelKind::Qim1}; }
  static QimModel qim2(double beta = 1.0) { return {ModelKind::Qim2, beta}; }
  static QimModel qim3(double beta1 = 0.1, double beta2 = 1.0) {
    return {ModelKind::Qim3, 1.0, beta1, beta2};
  }
  static QimModel intensity() { return {ModelKind::Intensity}; }

  /// Throws DomainError unless the model's parameters are strictly positive
  /// and finite.
  void validate() const;
  std::string name() const;
  kernels::Denominator denominator() const;
};

struct EvalOptions {
  kernels::Reduction reduction = kernels::Reduction::Sequential;
  /// QIM1 only: measurements with y_k < singular_guard * mean(y) raise
  /// SingularDenominator unless drop_singular is set, in which case they are
  /// left out (and the average is taken over the remaining ones).
  bool drop_singular = false;
  double singular_guard = 1e-12;
};

struct LossEval {
  double value = 0.0;
  std::optional<Vector> gradient;
  std::size_t singular_hits = 0;
};

LossEval loss(const QimModel& model, const SensingEnsemble& ensemble,
              const IntensityData& data, const Vector& u,
              const EvalOptions& options = {});

/// Loss value plus gradient. Real field: the ordinary gradient. Complex
/// field: the Wirtinger gradient df/d(conj u), which is half the gradient of
/// the real-isomorphic embedding (re u, im u).
LossEval loss_and_gradient(const QimModel& model,
                           const SensingEnsemble& ensemble,
                           const IntensityData& data, const Vector& u,
                           const EvalOptions& options = {});

Vector gradient(const QimModel& model, const SensingEnsemble& ensemble,
                const IntensityData& data, const Vector& u,
                const EvalOptions& options = {});

/// d^2/dt^2 f(u + t xi) at t = 0. Real field only.
double dir_curvature(const QimModel& model, const SensingEnsemble& ensemble,
                     const IntensityData& data, const Vector& u,
                     const Vector& xi, const EvalOptions& options = {});

/// Dense n x n Hessian. Real field only; intended for n <= 512.
Eigen::MatrixXd hessian(const QimModel& model, const SensingEnsemble& ensemble,
                        const IntensityData& data, const Vector& u,
                        const EvalOptions& options = {});

/// u = sqrt(R) ||x|| (cos(theta) x/||x|| + sin(theta) e_perp).
/// R = 1, theta = 0 is u = x.
struct PolarPoint {
  double R = 1.0;
  double theta = 0.0;
  RealVector e_perp;
};

/// Validated constructor: R > 0, theta in [0, pi], e_perp a unit vector
/// orthogonal to x (both to 1e-12). Throws DomainError otherwise.
PolarPoint make_polar_point(double R, double theta, const RealVector& e_perp,
                            const Vector& x);

/// Unit vector along the part of v orthogonal to x (Gram-Schmidt, applied
/// twice for accuracy).
RealVector orthogonal_unit(const Vector& x, const RealVector& v);

Vector polar_to_signal(const PolarPoint& point, const Vector& x);

struct PolarDerivatives {
  double f = 0.0;
  double dR = 0.0;
  double dRR = 0.0;
  double dtheta = 0.0;
  double dthetatheta = 0.0;
};

/// The loss and its first/second derivatives in R and theta (real field).
PolarDerivatives polar_eval(const QimModel& model,
                            const SensingEnsemble& ensemble,
                            const IntensityData& data, const Vector& x,
                            const PolarPoint& point,
                            const EvalOptions& options = {});

/// Real: min(||u - x||, ||u + x||). Complex: min over phi of ||u - e^{i phi} x||.
double dist_mod_phase(const Vector& u, const Vector& x, Field field);

}  // namespace qim
