#include "qim/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "qim/error.hpp"
#include "qim/rng.hpp"

namespace qim {

GdConfig GdConfig::for_model(const QimModel& model) {
  GdConfig cfg;
  switch (model.kind) {
    case ModelKind::Qim2: cfg.step = 0.4; break;
    case ModelKind::Qim3: cfg.step = 0.3; break;
    case ModelKind::Qim1: cfg.step = 0.3; break;
    case ModelKind::Intensity: cfg.step = 0.1; break;
  }
  return cfg;
}

void GdConfig::validate() const {
  auto bad = [](const std::string& what) {
    throw QimError(ErrorCode::InvalidConfig, what);
  };
  if (!(step > 0.0) || !std::isfinite(step)) bad("step must be > 0");
  if (max_iters < 1) bad("max_iters must be >= 1");
  if (!(tol > 0.0)) bad("tol must be > 0");
  if (record_every < 1) bad("record_every must be >= 1");
  if (!(gradient_scale > 0.0)) bad("gradient_scale must be > 0");
  if (!(divergence_threshold > 0.0)) bad("divergence_threshold must be > 0");
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "converged";
    case RunStatus::MaxIters: return "max-iters";
    case RunStatus::Diverged: return "diverged";
  }
  return "?";
}

Vector random_init(Index n, Field field, std::uint64_t seed) {
  if (n <= 0) throw QimError(ErrorCode::ZeroDimension, "random_init: n=0");
  Vector u = random_signal(n, field, seed);
  return u / u.norm();
}

Vector random_init(Index n, Field field, std::uint64_t seed,
                   const IntensityData& data) {
  return random_init(n, field, seed) * std::sqrt(data.mean());
}

Vector spectral_init(const SensingEnsemble& ensemble, const IntensityData& data,
                     int power_iters, std::uint64_t seed) {
  if (power_iters < 1) {
    throw QimError(ErrorCode::InvalidConfig, "power_iters must be >= 1");
  }
  if (data.y.size() != ensemble.m()) {
    throw QimError(ErrorCode::DimensionMismatch, "dim(y) != m");
  }
  Vector v = random_init(ensemble.n(), ensemble.field(), seed);
  for (int it = 0; it < power_iters; ++it) {
    Vector z = ensemble.forward(v);
    for (Index k = 0; k < z.size(); ++k) z[k] *= data.y[k];
    v = ensemble.adjoint(z);
    const double norm = v.norm();
    if (!(norm > 0.0)) break;
    v /= norm;
  }
  return v * std::sqrt(data.mean());
}

namespace {

RunResult descend(const QimModel& model, const SensingEnsemble& ensemble,
                  const IntensityData& data, const Vector& x_truth,
                  const GdConfig& config, const Vector& u0, double step) {
  config.validate();
  if (u0.size() != ensemble.n() || x_truth.size() != ensemble.n()) {
    throw QimError(ErrorCode::DimensionMismatch, "u0/x dimension != n");
  }
  const double xnorm = x_truth.norm();
  if (!(xnorm > 0.0)) throw QimError(ErrorCode::ZeroSignal, "x_truth = 0");

  const auto start = std::chrono::steady_clock::now();
  const Field field = ensemble.field();
  const double scale =
      step * config.gradient_scale * (field == Field::Complex ? 2.0 : 1.0);

  RunResult out;
  Vector u = u0;
  double rel = dist_mod_phase(u, x_truth, field) / xnorm;
  out.trajectory.push_back({0, rel});
  int t = 0;
  if (rel <= config.tol) {
    out.status = RunStatus::Converged;
  } else {
    for (t = 1; t <= config.max_iters; ++t) {
      const Vector g = gradient(model, ensemble, data, u, config.eval);
      u -= scale * g;
      if (!u.allFinite()) {
        throw QimError(ErrorCode::NonFinite,
                       "iterate became non-finite at iteration " + std::to_string(t));
      }
      rel = dist_mod_phase(u, x_truth, field) / xnorm;
      const bool done = rel <= config.tol;
      const bool diverged = rel > config.divergence_threshold;
      if (done || diverged || t == config.max_iters || t % config.record_every == 0) {
        out.trajectory.push_back({t, rel});
      }
      if (done) {
        out.status = RunStatus::Converged;
        break;
      }
      if (diverged) {
        out.status = RunStatus::Diverged;
        break;
      }
    }
    if (t > config.max_iters) t = config.max_iters;
  }
  out.iterates_used = t;
  out.final_dist_rel = rel;
  out.converged = out.status == RunStatus::Converged;
  out.final_iterate = std::move(u);
  out.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

RunResult gradient_descent(const QimModel& model,
                           const SensingEnsemble& ensemble,
                           const IntensityData& data, const Vector& x_truth,
                           const GdConfig& config, const Vector& u0) {
  return descend(model, ensemble, data, x_truth, config, u0, config.step);
}

RunResult wirtinger_flow_baseline(const SensingEnsemble& ensemble,
                                  const IntensityData& data,
                                  const Vector& x_truth, const GdConfig& config,
                                  int power_iters, std::uint64_t seed) {
  const Vector u0 = spectral_init(ensemble, data, power_iters, seed);
  const double norm_sq = u0.squaredNorm();
  if (!(norm_sq > 0.0)) throw QimError(ErrorCode::ZeroSignal, "spectral start is 0");
  return descend(QimModel::intensity(), ensemble, data, x_truth, config, u0,
                 config.step / norm_sq);
}

std::string trajectory_csv(const RunResult& result) {
  std::string out = "iter,rel_error\n";
  char line[64];
  for (const auto& point : result.trajectory) {
    std::snprintf(line, sizeof line, "%d,%.17g\n", point.iter, point.rel_error);
    out += line;
  }
  return out;
}

}  // namespace qim
