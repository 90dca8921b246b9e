#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qim/losses.hpp"
#include "qim/optimizers.hpp"

namespace qim::landscape {

/// Expected H_xixi(0) for unit xi: QIM1 -4, QIM2 -2(beta+2),
/// QIM3 2(-1/beta2^2 - (beta1+2 beta2)/beta2^2). Not defined for INTENSITY
/// (returns NaN).
double origin_curvature_target(const QimModel& model);

struct OriginCurvature {
  double probe_max = 0.0;
  std::vector<double> probes;
  /// Largest eigenvalue of the dense Hessian at 0 (n <= 256 only).
  std::optional<double> dense_max_eigenvalue;
  double target = 0.0;
};

OriginCurvature curvature_at_zero(const QimModel& model,
                                  const SensingEnsemble& ensemble,
                                  const IntensityData& data, int probes,
                                  std::uint64_t seed);

enum class DirectionTag { Aligned, NearAligned, Orthogonal, Random };
const char* to_string(DirectionTag tag);

struct RadialRecord {
  double R = 0.0;
  DirectionTag tag = DirectionTag::Random;
  int direction = 0;
  double theta = 0.0;
  double dR = 0.0;
  /// +1 / -1 predicted sign, 0 for a predicted exact zero, nullopt when the
  /// regime makes no prediction.
  std::optional<int> predicted;
  bool sign_ok = true;
};

struct RadialRules {
  double eps0 = 0.1;              // dR > 0 for R >= 1 + eps0
  double small_R = 0.05;          // QIM3: dR < 0 for R <= small_R
  double inner_lo = 0.25, inner_hi = 0.9;  // near x: dR < 0
  double outer_lo = 1.1, outer_hi = 2.0;   // near x: dR > 0
  double near_cos = 0.995;        // cos angle of the near-aligned direction
};

/// Scans dR f over R_grid along: the x direction (plus R = 1), a direction at
/// angle acos(near_cos) from x, `orthogonal` directions perpendicular to x and
/// `random` uniform directions.
std::vector<RadialRecord> radial_sign_scan(const QimModel& model,
                                           const SensingEnsemble& ensemble,
                                           const IntensityData& data,
                                           const Vector& x,
                                           const std::vector<double>& R_grid,
                                           int orthogonal, int random,
                                           const RadialRules& rules,
                                           std::uint64_t seed);

struct EquatorRecord {
  double R = 0.0;
  double theta = 0.0;
  int direction = 0;
  /// d2f/dtheta2 (QIM2/QIM3) or H along x/||x|| at the radial critical point
  /// (QIM1).
  double curvature = 0.0;
  bool ok = false;
};

/// QIM2/QIM3: d2f/dtheta2 < 0 for every R in R_grid and theta in
/// pi/2 + offsets. QIM1: dR f is affine in R, so each direction has a single
/// radial critical point R*; there the curvature along x must be negative
/// (R_grid is unused).
std::vector<EquatorRecord> equator_curvature_check(
    const QimModel& model, const SensingEnsemble& ensemble,
    const IntensityData& data, const Vector& x, const std::vector<double>& R_grid,
    const std::vector<double>& theta_offsets, int directions, std::uint64_t seed);

struct ConvexityRecord {
  int samples = 0;
  double radius = 0.0;
  /// min over sampled u of the smallest Hessian eigenvalue (n <= 256) or of
  /// sampled directional curvatures.
  double min_curvature = 0.0;
  /// min over sampled u of the curvature along (u -+ x)/||u -+ x||.
  double min_restricted = 0.0;
  /// The quantity the model's theorem bounds below: QIM2 restricted, else full.
  double certified = 0.0;
  double threshold = 0.0;  // QIM1: 1, others: 0 (strict)
  bool ok = false;
};

/// Samples u uniformly in the balls of radius radius*||x|| around +x and -x
/// (samples per ball).
ConvexityRecord convexity_near_truth(const QimModel& model,
                                     const SensingEnsemble& ensemble,
                                     const IntensityData& data, const Vector& x,
                                     double radius, int samples,
                                     std::uint64_t seed);

enum class Endpoint { Truth, Other, NonConverged };
const char* to_string(Endpoint endpoint);

struct CensusEntry {
  int trial = 0;
  Endpoint endpoint = Endpoint::NonConverged;
  double rel_error = 0.0;
  double grad_norm = 0.0;
  std::optional<double> min_curvature;
  int iterations = 0;
};

struct BasinCensus {
  int trials = 0;
  int reached_truth = 0;
  int reached_other = 0;
  int nonconverged = 0;
  int saddle_candidates = 0;
  /// Entries for every endpoint that did not reach the truth.
  std::vector<CensusEntry> misses;
};

/// Endpoint classes: Truth if dist <= tol ||x||; Other if ||grad|| <=
/// 1e-6 ||x|| away from the truth; otherwise NonConverged. Saddle candidates
/// are Other endpoints with min curvature <= -1e-6.
BasinCensus basin_census(const QimModel& model, const SensingEnsemble& ensemble,
                         const IntensityData& data, const Vector& x, int trials,
                         const GdConfig& config, std::uint64_t seed);

struct LandscapeOptions {
  std::vector<double> R_grid = {0.01, 0.1, 0.25, 0.5, 0.8, 1.2, 2.0, 4.0, 10.0};
  int orthogonal_directions = 20;
  int random_directions = 200;
  RadialRules rules;
  int origin_probes = 4;
  std::vector<double> equator_R = {0.25, 0.5, 1.0, 2.0};
  std::vector<double> equator_offsets = {-0.15, -0.1, -0.05, 0.0, 0.05, 0.1, 0.15};
  int equator_directions = 5;
  double ball_radius = 0.05;
  int ball_samples = 20;
  int census_trials = 200;
  /// Iteration budget for the census (the step comes from the model).
  int census_iters = 2500;
  double census_tol = 1e-5;
  /// m/n below this is reported as outside the theorems' sampling regime.
  double below_threshold_ratio = 4.0;
};

struct LandscapeReport {
  QimModel model;
  Index n = 0;
  Index m = 0;
  std::uint64_t seed = 0;
  bool below_threshold = false;
  OriginCurvature origin;
  std::vector<RadialRecord> radial;
  std::vector<EquatorRecord> equator;
  ConvexityRecord convexity;
  BasinCensus census;

  /// Number of failed theorem-predicted checks (origin curvature negative,
  /// radial signs, equator, convexity, reached_other == 0).
  int violations() const;
};

/// Real Gaussian ensemble and a unit-norm signal drawn from `seed`.
LandscapeReport run_landscape(const QimModel& model, Index n, Index m,
                              std::uint64_t seed, const LandscapeOptions& options);

}  // namespace qim::landscape
