#pragma once

#include <string>
#include <vector>

#include "qim/losses.hpp"
#include "qim/measurements.hpp"

namespace qim {

/// Fixed-step gradient descent settings.
///
/// The update is u <- u - step * gradient_scale * g, where g is the gradient
/// of the real-isomorphic embedding: gradient() for real signals and twice the
/// Wirtinger gradient for complex ones. gradient_scale = 1/4 puts the stock
/// steps (0.4 for QIM2, 0.3 for QIM3) on a stable scale; with scale 1 they
/// diverge.
struct GdConfig {
  double step = 0.4;
  int max_iters = 2500;
  double tol = 1e-5;
  int record_every = 1;
  double gradient_scale = 0.25;
  /// Abort when the relative error exceeds this.
  double divergence_threshold = 1e6;
  EvalOptions eval;

  /// Stock step for the model: QIM2 0.4, QIM3 0.3, QIM1 0.3, INTENSITY 0.1
  /// (the latter is divided by ||u0||^2 in the Wirtinger-flow baseline).
  static GdConfig for_model(const QimModel& model);
  /// Throws InvalidConfig.
  void validate() const;
};

enum class RunStatus { Converged, MaxIters, Diverged };
const char* to_string(RunStatus status);

struct TrajectoryPoint {
  int iter = 0;
  double rel_error = 0.0;
};

struct RunResult {
  int iterates_used = 0;
  double final_dist_rel = 0.0;
  std::vector<TrajectoryPoint> trajectory;
  bool converged = false;
  RunStatus status = RunStatus::MaxIters;
  double wall_time = 0.0;  // seconds; never written to deterministic outputs
  Vector final_iterate;
};

/// Uniform direction on the sphere, unit norm.
Vector random_init(Index n, Field field, std::uint64_t seed);
/// Same direction scaled to sqrt(mean y).
Vector random_init(Index n, Field field, std::uint64_t seed,
                   const IntensityData& data);

/// Power iteration on (1/m) sum_k y_k a_k a_k^H from a seeded random start,
/// scaled to sqrt(mean y).
Vector spectral_init(const SensingEnsemble& ensemble, const IntensityData& data,
                     int power_iters, std::uint64_t seed);

/// Throws NonFinite if an iterate stops being finite; propagates
/// SingularDenominator.
RunResult gradient_descent(const QimModel& model,
                           const SensingEnsemble& ensemble,
                           const IntensityData& data, const Vector& x_truth,
                           const GdConfig& config, const Vector& u0);

/// Intensity least squares from the spectral start, step config.step/||u0||^2.
RunResult wirtinger_flow_baseline(const SensingEnsemble& ensemble,
                                  const IntensityData& data,
                                  const Vector& x_truth, const GdConfig& config,
                                  int power_iters, std::uint64_t seed);

/// Header `iter,rel_error`, one row per recorded iterate.
std::string trajectory_csv(const RunResult& result);

}  // namespace qim
