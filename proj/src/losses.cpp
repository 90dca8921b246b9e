#include "qim/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "qim/error.hpp"

namespace qim {

void QimModel::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  switch (kind) {
    case ModelKind::Qim2:
      if (!positive(beta)) throw QimError(ErrorCode::DomainError, "QIM2 needs beta > 0");
      break;
    case ModelKind::Qim3:
      if (!positive(beta1) || !positive(beta2)) {
        throw QimError(ErrorCode::DomainError, "QIM3 needs beta1, beta2 > 0");
      }
      break;
    default:
      break;
  }
}

std::string QimModel::name() const {
  switch (kind) {
    case ModelKind::Qim1: return "QIM1";
    case ModelKind::Qim2: return "QIM2";
    case ModelKind::Qim3: return "QIM3";
    case ModelKind::Intensity: return "INTENSITY";
  }
  return "?";
}

kernels::Denominator QimModel::denominator() const {
  switch (kind) {
    case ModelKind::Qim1: return {0.0, 0.0, 0.0, 1.0};
    case ModelKind::Qim2: return {0.0, beta, 0.0, 1.0};
    case ModelKind::Qim3: return {0.0, 1.0, beta1, beta2};
    case ModelKind::Intensity: return {1.0, 0.0, 0.0, 0.0};
  }
  return {};
}

namespace {

struct Prepared {
  kernels::Denominator den;
  std::vector<std::uint8_t> active;  // empty: everything counts
  double count = 0.0;
  std::size_t hits = 0;
};

Prepared prepare(const QimModel& model, const SensingEnsemble& ensemble,
                 const IntensityData& data, const EvalOptions& options) {
  model.validate();
  if (data.y.size() != ensemble.m()) {
    throw QimError(ErrorCode::DimensionMismatch, "dim(y) != m");
  }
  Prepared prep;
  prep.den = model.denominator();
  const Index m = ensemble.m();
  prep.count = static_cast<double>(m);
  if (model.kind != ModelKind::Qim1) return prep;

  const double threshold = options.singular_guard * data.mean();
  for (Index k = 0; k < m; ++k) {
    if (data.y[k] <= threshold) ++prep.hits;
  }
  if (prep.hits == 0) return prep;
  if (!options.drop_singular || prep.hits == static_cast<std::size_t>(m)) {
    throw QimError(ErrorCode::SingularDenominator,
                   std::to_string(prep.hits) + " measurement(s) below the QIM1 guard");
  }
  prep.active.resize(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) prep.active[k] = data.y[k] > threshold ? 1 : 0;
  prep.count = static_cast<double>(m - static_cast<Index>(prep.hits));
  return prep;
}

bool real_path(const SensingEnsemble& ensemble) {
  return ensemble.kind() == EnsembleKind::ExplicitGaussian &&
         ensemble.field() == Field::Real;
}

void require_real(const SensingEnsemble& ensemble, const char* what) {
  if (!real_path(ensemble)) {
    throw QimError(ErrorCode::DomainError,
                   std::string(what) + " is implemented for real explicit ensembles only");
  }
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

LossEval loss(const QimModel& model, const SensingEnsemble& ensemble,
              const IntensityData& data, const Vector& u,
              const EvalOptions& options) {
  const Prepared prep = prepare(model, ensemble, data, options);
  Eigen::VectorXd q;
  if (real_path(ensemble)) {
    q = ensemble.forward_real(u.real()).array().square().matrix();
  } else {
    q = ensemble.forward(u).cwiseAbs2();
  }
  const kernels::Measurements in{view(q), view(data.y), prep.active};
  LossEval out;
  out.value = kernels::loss_sum(options.reduction, prep.den, in, u.squaredNorm()) /
              prep.count;
  out.singular_hits = prep.hits;
  return out;
}

LossEval loss_and_gradient(const QimModel& model,
                           const SensingEnsemble& ensemble,
                           const IntensityData& data, const Vector& u,
                           const EvalOptions& options) {
  const Prepared prep = prepare(model, ensemble, data, options);
  const double p = u.squaredNorm();
  const Index m = ensemble.m();
  Eigen::VectorXd weights(m);
  std::span<double> weights_out{weights.data(), static_cast<std::size_t>(m)};
  LossEval out;
  out.singular_hits = prep.hits;

  if (real_path(ensemble)) {
    const RealVector ur = u.real();
    const RealVector r = ensemble.forward_real(ur);
    const Eigen::VectorXd q = r.array().square().matrix();
    const kernels::Measurements in{view(q), view(data.y), prep.active};
    const auto sums = kernels::gradient_weights(options.reduction, prep.den, in, p,
                                                weights_out);
    const RealVector g =
        (2.0 / prep.count) *
        (ensemble.adjoint_real(weights.cwiseProduct(r)) + sums.dp_sum * ur);
    out.value = sums.loss / prep.count;
    out.gradient = g.cast<std::complex<double>>();
    return out;
  }

  const Vector z = ensemble.forward(u);
  const Eigen::VectorXd q = z.cwiseAbs2();
  const kernels::Measurements in{view(q), view(data.y), prep.active};
  const auto sums =
      kernels::gradient_weights(options.reduction, prep.den, in, p, weights_out);
  Vector wz = z;
  for (Index k = 0; k < m; ++k) wz[k] *= weights[k];
  out.value = sums.loss / prep.count;
  out.gradient = (ensemble.adjoint(wz) + sums.dp_sum * u) / prep.count;
  return out;
}

Vector gradient(const QimModel& model, const SensingEnsemble& ensemble,
                const IntensityData& data, const Vector& u,
                const EvalOptions& options) {
  return *loss_and_gradient(model, ensemble, data, u, options).gradient;
}

double dir_curvature(const QimModel& model, const SensingEnsemble& ensemble,
                     const IntensityData& data, const Vector& u,
                     const Vector& xi, const EvalOptions& options) {
  require_real(ensemble, "dir_curvature");
  const Prepared prep = prepare(model, ensemble, data, options);
  const RealVector ur = u.real();
  const RealVector xr = xi.real();
  const RealVector r = ensemble.forward_real(ur);
  const RealVector s = ensemble.forward_real(xr);
  kernels::CurvatureInputs in{view(r), view(s), view(data.y), prep.active};
  in.w = ur.dot(xr);
  in.xi_sq = xr.squaredNorm();
  return kernels::curvature_sum(options.reduction, prep.den, in, ur.squaredNorm()) /
         prep.count;
}

Eigen::MatrixXd hessian(const QimModel& model, const SensingEnsemble& ensemble,
                        const IntensityData& data, const Vector& u,
                        const EvalOptions& options) {
  require_real(ensemble, "hessian");
  const Prepared prep = prepare(model, ensemble, data, options);
  const Eigen::MatrixXd& a = ensemble.real_rows();
  const RealVector ur = u.real();
  const RealVector r = ensemble.forward_real(ur);
  const double p = ur.squaredNorm();
  const Index m = ensemble.m();

  // H = (1/m)[A^T diag(4 phi_qq r^2 + 2 phi_q) A + 4(c u^T + u c^T)
  //           + 4 sum(phi_pp) u u^T + 2 sum(phi_p) I],  c = A^T (phi_qp r)
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd cross = Eigen::VectorXd::Zero(m);
  double pp_sum = 0.0, p_sum = 0.0;
  for (Index k = 0; k < m; ++k) {
    if (!prep.active.empty() && !prep.active[k]) continue;
    const auto t = kernels::evaluate_term(prep.den, r[k] * r[k], data.y[k], p);
    diag[k] = 4.0 * t.dqq * r[k] * r[k] + 2.0 * t.dq;
    cross[k] = t.dqp * r[k];
    pp_sum += t.dpp;
    p_sum += t.dp;
  }
  const RealVector c = a.transpose() * cross;
  Eigen::MatrixXd h = a.transpose() * diag.asDiagonal() * a;
  h += 4.0 * (c * ur.transpose() + ur * c.transpose());
  h += 4.0 * pp_sum * ur * ur.transpose();
  h.diagonal().array() += 2.0 * p_sum;
  return h / prep.count;
}

RealVector orthogonal_unit(const Vector& x, const RealVector& v) {
  const RealVector xhat = x.real().normalized();
  RealVector e = v;
  for (int pass = 0; pass < 2; ++pass) e -= xhat.dot(e) * xhat;
  const double norm = e.norm();
  if (!(norm > 1e-300) || !std::isfinite(norm)) {
    throw QimError(ErrorCode::DomainError, "vector has no component orthogonal to x");
  }
  return e / norm;
}

PolarPoint make_polar_point(double R, double theta, const RealVector& e_perp,
                            const Vector& x) {
  if (!(R > 0.0) || !std::isfinite(R)) {
    throw QimError(ErrorCode::DomainError, "polar point needs R > 0");
  }
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
    throw QimError(ErrorCode::DomainError, "polar point needs theta in [0, pi]");
  }
  const double xnorm = x.norm();
  if (!(xnorm > 0.0)) throw QimError(ErrorCode::ZeroSignal, "polar point needs x != 0");
  if (e_perp.size() != x.size()) {
    throw QimError(ErrorCode::DimensionMismatch, "dim(e_perp) != dim(x)");
  }
  if (std::abs(e_perp.norm() - 1.0) > 1e-12 ||
      std::abs(e_perp.dot(x.real()) / xnorm) > 1e-12) {
    throw QimError(ErrorCode::DomainError, "e_perp must be a unit vector orthogonal to x");
  }
  return {R, theta, e_perp};
}

Vector polar_to_signal(const PolarPoint& point, const Vector& x) {
  const double rho = x.norm();
  const RealVector xhat = x.real() / rho;
  const RealVector u = std::sqrt(point.R) * rho *
                       (std::cos(point.theta) * xhat + std::sin(point.theta) * point.e_perp);
  return u.cast<std::complex<double>>();
}

PolarDerivatives polar_eval(const QimModel& model,
                            const SensingEnsemble& ensemble,
                            const IntensityData& data, const Vector& x,
                            const PolarPoint& point,
                            const EvalOptions& options) {
  require_real(ensemble, "polar_eval");
  if (!(point.R > 0.0)) throw QimError(ErrorCode::DomainError, "polar_eval needs R > 0");
  const Prepared prep = prepare(model, ensemble, data, options);
  const double rho = x.norm();
  if (!(rho > 0.0)) throw QimError(ErrorCode::ZeroSignal, "polar_eval needs x != 0");

  const RealVector big_x = ensemble.forward_real(x.real() / rho);
  const RealVector big_y = ensemble.forward_real(point.e_perp);
  const double R = point.R;
  const double c = std::cos(point.theta), s = std::sin(point.theta);
  const double rho2 = rho * rho;
  const double p = R * rho2;

  // q = R rho^2 Z^2, p = R rho^2, Z = X cos + Y sin.
  double f = 0.0, fr = 0.0, frr = 0.0, ft = 0.0, ftt = 0.0;
  for (Index k = 0; k < ensemble.m(); ++k) {
    if (!prep.active.empty() && !prep.active[k]) continue;
    const double z = big_x[k] * c + big_y[k] * s;
    const double zt = -big_x[k] * s + big_y[k] * c;
    const double q = p * z * z;
    const auto t = kernels::evaluate_term(prep.den, q, data.y[k], p);
    const double q_r = rho2 * z * z;
    const double q_t = 2.0 * p * z * zt;
    const double q_tt = 2.0 * p * (zt * zt - z * z);
    f += t.value;
    fr += t.dq * q_r + t.dp * rho2;
    frr += t.dqq * q_r * q_r + 2.0 * t.dqp * q_r * rho2 + t.dpp * rho2 * rho2;
    ft += t.dq * q_t;
    ftt += t.dqq * q_t * q_t + t.dq * q_tt;
  }
  const double inv = 1.0 / prep.count;
  return {f * inv, fr * inv, frr * inv, ft * inv, ftt * inv};
}

double dist_mod_phase(const Vector& u, const Vector& x, Field field) {
  if (u.size() != x.size()) {
    throw QimError(ErrorCode::DimensionMismatch, "dist_mod_phase: dims differ");
  }
  if (field == Field::Real) {
    return std::min((u - x).norm(), (u + x).norm());
  }
  const std::complex<double> inner = x.dot(u);  // x^H u
  const std::complex<double> phase =
      std::abs(inner) > 0.0 ? inner / std::abs(inner) : std::complex<double>(1.0, 0.0);
  return (u - phase * x).norm();
}

}  // namespace qim
