#include "qim/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "qim/error.hpp"
#include "qim/rng.hpp"

namespace qim::landscape {

namespace {

constexpr Index kDenseCutoff = 256;
constexpr double kPi = std::numbers::pi;

RealVector random_direction(Index n, std::uint64_t seed) {
  return random_init(n, Field::Real, seed).real();
}

Vector as_complex(const RealVector& v) { return v.cast<std::complex<double>>(); }

double min_eigenvalue(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().maxCoeff();
}

// Smallest curvature at u: dense spectrum when small, otherwise the minimum
// over a fixed set of sampled directions.
double min_curvature_at(const QimModel& model, const SensingEnsemble& ensemble,
                        const IntensityData& data, const Vector& u,
                        std::uint64_t seed) {
  if (ensemble.n() <= kDenseCutoff) {
    return min_eigenvalue(hessian(model, ensemble, data, u));
  }
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 32; ++i) {
    const Vector xi = as_complex(random_direction(ensemble.n(), derive_seed(seed, i)));
    best = std::min(best, dir_curvature(model, ensemble, data, u, xi));
  }
  return best;
}

std::optional<int> predict_radial(const QimModel& model, DirectionTag tag,
                                  double R, const RadialRules& rules) {
  if (tag == DirectionTag::Aligned && R == 1.0) return 0;
  if (R >= 1.0 + rules.eps0) return 1;
  if (model.kind == ModelKind::Qim3 && R <= rules.small_R) return -1;
  const bool near_x =
      tag == DirectionTag::Aligned ||
      (tag == DirectionTag::NearAligned && model.kind != ModelKind::Qim1);
  if (near_x && R >= rules.inner_lo && R <= rules.inner_hi) return -1;
  if (near_x && R >= rules.outer_lo && R <= rules.outer_hi) return 1;
  return std::nullopt;
}

}  // namespace

double origin_curvature_target(const QimModel& model) {
  switch (model.kind) {
    case ModelKind::Qim1: return -4.0;
    case ModelKind::Qim2: return -2.0 * (model.beta + 2.0);
    case ModelKind::Qim3: {
      const double b2sq = model.beta2 * model.beta2;
      return 2.0 * (-1.0 / b2sq - (model.beta1 + 2.0 * model.beta2) / b2sq);
    }
    case ModelKind::Intensity: break;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

OriginCurvature curvature_at_zero(const QimModel& model,
                                  const SensingEnsemble& ensemble,
                                  const IntensityData& data, int probes,
                                  std::uint64_t seed) {
  if (probes < 1) throw QimError(ErrorCode::InvalidConfig, "probes must be >= 1");
  const Index n = ensemble.n();
  const Vector zero = Vector::Zero(n);
  OriginCurvature out;
  out.target = origin_curvature_target(model);
  out.probe_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < probes; ++i) {
    const Vector xi = as_complex(random_direction(n, derive_seed(seed, i)));
    const double h = dir_curvature(model, ensemble, data, zero, xi);
    out.probes.push_back(h);
    out.probe_max = std::max(out.probe_max, h);
  }
  if (n <= kDenseCutoff) {
    out.dense_max_eigenvalue = max_eigenvalue(hessian(model, ensemble, data, zero));
  }
  return out;
}

const char* to_string(DirectionTag tag) {
  switch (tag) {
    case DirectionTag::Aligned: return "aligned";
    case DirectionTag::NearAligned: return "near_aligned";
    case DirectionTag::Orthogonal: return "orthogonal";
    case DirectionTag::Random: return "random";
  }
  return "?";
}

std::vector<RadialRecord> radial_sign_scan(const QimModel& model,
                                           const SensingEnsemble& ensemble,
                                           const IntensityData& data,
                                           const Vector& x,
                                           const std::vector<double>& R_grid,
                                           int orthogonal, int random,
                                           const RadialRules& rules,
                                           std::uint64_t seed) {
  for (double R : R_grid) {
    if (!(R > 0.0)) throw QimError(ErrorCode::DomainError, "R grid must be positive");
  }
  const Index n = ensemble.n();
  const RealVector xhat = x.real().normalized();

  struct Direction {
    DirectionTag tag;
    int index;
    double theta;
    RealVector e_perp;
  };
  std::vector<Direction> dirs;
  std::uint64_t stream = 0;
  auto perp = [&]() {
    return orthogonal_unit(x, random_direction(n, derive_seed(seed, stream++)));
  };
  dirs.push_back({DirectionTag::Aligned, 0, 0.0, perp()});
  dirs.push_back({DirectionTag::NearAligned, 0, std::acos(rules.near_cos), perp()});
  for (int i = 0; i < orthogonal; ++i) {
    dirs.push_back({DirectionTag::Orthogonal, i, kPi / 2.0, perp()});
  }
  for (int i = 0; i < random; ++i) {
    const RealVector d = random_direction(n, derive_seed(seed, stream++));
    const double cos_angle = std::clamp(xhat.dot(d), -1.0, 1.0);
    dirs.push_back({DirectionTag::Random, i, std::acos(cos_angle),
                    orthogonal_unit(x, d)});
  }

  struct Job {
    std::size_t dir;
    double R;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < dirs.size(); ++d) {
    std::vector<double> grid = R_grid;
    if (dirs[d].tag == DirectionTag::Aligned &&
        std::find(grid.begin(), grid.end(), 1.0) == grid.end()) {
      grid.push_back(1.0);
      std::sort(grid.begin(), grid.end());
    }
    for (double R : grid) jobs.push_back({d, R});
  }

  const double zero_tol = 1e-12 * x.squaredNorm();
  std::vector<RadialRecord> out(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Direction& dir = dirs[jobs[j].dir];
    RadialRecord rec;
    rec.R = jobs[j].R;
    rec.tag = dir.tag;
    rec.direction = dir.index;
    rec.theta = dir.theta;
    const PolarPoint point{rec.R, dir.theta, dir.e_perp};
    rec.dR = polar_eval(model, ensemble, data, x, point).dR;
    rec.predicted = predict_radial(model, dir.tag, rec.R, rules);
    if (rec.predicted) {
      if (*rec.predicted == 0) {
        rec.sign_ok = std::abs(rec.dR) <= zero_tol;
      } else {
        rec.sign_ok = *rec.predicted > 0 ? rec.dR > 0.0 : rec.dR < 0.0;
      }
    }
    out[j] = rec;
  }
  return out;
}

std::vector<EquatorRecord> equator_curvature_check(
    const QimModel& model, const SensingEnsemble& ensemble,
    const IntensityData& data, const Vector& x, const std::vector<double>& R_grid,
    const std::vector<double>& theta_offsets, int directions, std::uint64_t seed) {
  for (double off : theta_offsets) {
    if (!(std::abs(off) < 0.2)) {
      throw QimError(ErrorCode::DomainError, "equator window is (pi/2 - 0.2, pi/2 + 0.2)");
    }
  }
  const Index n = ensemble.n();
  std::vector<RealVector> perps;
  for (int d = 0; d < directions; ++d) {
    perps.push_back(orthogonal_unit(x, random_direction(n, derive_seed(seed, d))));
  }
  std::vector<EquatorRecord> out;

  if (model.kind == ModelKind::Qim1) {
    const double rho = x.norm();
    const RealVector xhat = x.real() / rho;
    const RealVector big_x = ensemble.forward_real(xhat);
    out.resize(perps.size() * theta_offsets.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t j = 0; j < out.size(); ++j) {
      const std::size_t d = j / theta_offsets.size();
      const double theta = kPi / 2.0 + theta_offsets[j % theta_offsets.size()];
      const RealVector uhat = std::cos(theta) * xhat + std::sin(theta) * perps[d];
      const RealVector z = ensemble.forward_real(uhat);
      // dR f = (2 rho^2/m) sum (R Z^2 - X^2) Z^2 / X^2 vanishes at R*.
      const double r_star =
          z.squaredNorm() / (z.array().pow(4) / big_x.array().square()).sum();
      const Vector u = as_complex(std::sqrt(r_star) * rho * uhat);
      EquatorRecord rec;
      rec.R = r_star;
      rec.theta = theta;
      rec.direction = static_cast<int>(d);
      rec.curvature = dir_curvature(model, ensemble, data, u, as_complex(xhat));
      rec.ok = rec.curvature < 0.0;
      out[j] = rec;
    }
    return out;
  }
  if (model.kind == ModelKind::Intensity) return out;

  const std::size_t per_dir = R_grid.size() * theta_offsets.size();
  out.resize(perps.size() * per_dir);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < out.size(); ++j) {
    const std::size_t d = j / per_dir;
    const std::size_t rest = j % per_dir;
    EquatorRecord rec;
    rec.R = R_grid[rest / theta_offsets.size()];
    rec.theta = kPi / 2.0 + theta_offsets[rest % theta_offsets.size()];
    rec.direction = static_cast<int>(d);
    const PolarPoint point{rec.R, rec.theta, perps[d]};
    rec.curvature = polar_eval(model, ensemble, data, x, point).dthetatheta;
    rec.ok = rec.curvature < 0.0;
    out[j] = rec;
  }
  return out;
}

ConvexityRecord convexity_near_truth(const QimModel& model,
                                     const SensingEnsemble& ensemble,
                                     const IntensityData& data, const Vector& x,
                                     double radius, int samples,
                                     std::uint64_t seed) {
  if (!(radius > 0.0) || radius > 0.1) {
    throw QimError(ErrorCode::InvalidConfig, "ball radius must be in (0, 0.1]");
  }
  if (samples < 1) throw QimError(ErrorCode::InvalidConfig, "samples must be >= 1");
  const Index n = ensemble.n();
  const double rho = x.norm();
  const std::size_t total = 2 * static_cast<std::size_t>(samples);
  std::vector<double> full(total), restricted(total);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t j = 0; j < total; ++j) {
    const double sign = j < static_cast<std::size_t>(samples) ? 1.0 : -1.0;
    const std::uint64_t s = derive_seed(seed, j);
    Rng rng(derive_seed(s, 1));
    const double scale = radius * rho * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    const RealVector v = random_direction(n, s);
    const Vector u = sign * x + as_complex(scale * v);
    full[j] = min_curvature_at(model, ensemble, data, u, derive_seed(s, 2));
    restricted[j] = dir_curvature(model, ensemble, data, u, as_complex(v));
  }
  ConvexityRecord rec;
  rec.samples = samples;
  rec.radius = radius;
  rec.min_curvature = *std::min_element(full.begin(), full.end());
  rec.min_restricted = *std::min_element(restricted.begin(), restricted.end());
  if (model.kind == ModelKind::Qim2) {
    rec.certified = rec.min_restricted;
  } else {
    rec.certified = rec.min_curvature;
  }
  if (model.kind == ModelKind::Qim1) {
    rec.threshold = 1.0;
    rec.ok = rec.certified >= rec.threshold;
  } else {
    rec.threshold = 0.0;
    rec.ok = rec.certified > rec.threshold;
  }
  return rec;
}

const char* to_string(Endpoint endpoint) {
  switch (endpoint) {
    case Endpoint::Truth: return "truth";
    case Endpoint::Other: return "other";
    case Endpoint::NonConverged: return "nonconverged";
  }
  return "?";
}

BasinCensus basin_census(const QimModel& model, const SensingEnsemble& ensemble,
                         const IntensityData& data, const Vector& x, int trials,
                         const GdConfig& config, std::uint64_t seed) {
  if (trials < 1) throw QimError(ErrorCode::InvalidConfig, "trials must be >= 1");
  config.validate();
  const Index n = ensemble.n();
  const double xnorm = x.norm();
  std::vector<CensusEntry> entries(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
    CensusEntry entry;
    entry.trial = t;
    const Vector u0 =
        random_init(n, ensemble.field(), derive_seed(seed, static_cast<std::uint64_t>(t)), data);
    Vector end;
    try {
      const RunResult run = gradient_descent(model, ensemble, data, x, config, u0);
      entry.rel_error = run.final_dist_rel;
      entry.iterations = run.iterates_used;
      end = run.final_iterate;
    } catch (const QimError& err) {
      if (err.code() != ErrorCode::NonFinite) throw;
      entry.rel_error = std::numeric_limits<double>::infinity();
      entry.iterations = config.max_iters;
    }
    if (entry.rel_error <= config.tol) {
      entry.endpoint = Endpoint::Truth;
    } else if (end.size() == n) {
      entry.grad_norm = gradient(model, ensemble, data, end).norm();
      if (entry.grad_norm <= 1e-6 * xnorm) {
        entry.endpoint = Endpoint::Other;
        entry.min_curvature = min_curvature_at(
            model, ensemble, data, end, derive_seed(seed, 1000003 + static_cast<std::uint64_t>(t)));
      }
    }
    entries[static_cast<std::size_t>(t)] = entry;
  }

  BasinCensus census;
  census.trials = trials;
  for (const auto& e : entries) {
    switch (e.endpoint) {
      case Endpoint::Truth: ++census.reached_truth; break;
      case Endpoint::Other:
        ++census.reached_other;
        if (e.min_curvature && *e.min_curvature <= -1e-6) ++census.saddle_candidates;
        break;
      case Endpoint::NonConverged: ++census.nonconverged; break;
    }
    if (e.endpoint != Endpoint::Truth) census.misses.push_back(e);
  }
  return census;
}

int LandscapeReport::violations() const {
  int count = 0;
  const double origin_max =
      origin.dense_max_eigenvalue ? *origin.dense_max_eigenvalue : origin.probe_max;
  if (!(origin_max < 0.0)) ++count;
  for (const auto& r : radial) count += r.sign_ok ? 0 : 1;
  for (const auto& e : equator) count += e.ok ? 0 : 1;
  if (!convexity.ok) ++count;
  count += census.reached_other;
  return count;
}

LandscapeReport run_landscape(const QimModel& model, Index n, Index m,
                              std::uint64_t seed, const LandscapeOptions& options) {
  model.validate();
  LandscapeReport report;
  report.model = model;
  report.n = n;
  report.m = m;
  report.seed = seed;
  report.below_threshold =
      static_cast<double>(m) < options.below_threshold_ratio * static_cast<double>(n);

  const SensingEnsemble ensemble =
      SensingEnsemble::gaussian(n, m, Field::Real, derive_seed(seed, 0));
  Vector x = random_signal(n, Field::Real, derive_seed(seed, 1));
  x /= x.norm();
  const IntensityData data = intensities(ensemble, x);

  report.origin = curvature_at_zero(model, ensemble, data, options.origin_probes,
                                    derive_seed(seed, 2));
  report.radial = radial_sign_scan(model, ensemble, data, x, options.R_grid,
                                   options.orthogonal_directions,
                                   options.random_directions, options.rules,
                                   derive_seed(seed, 3));
  report.equator = equator_curvature_check(model, ensemble, data, x, options.equator_R,
                                           options.equator_offsets,
                                           options.equator_directions,
                                           derive_seed(seed, 4));
  report.convexity = convexity_near_truth(model, ensemble, data, x, options.ball_radius,
                                          options.ball_samples, derive_seed(seed, 5));
  if (options.census_trials > 0) {
    GdConfig cfg = GdConfig::for_model(model);
    cfg.max_iters = options.census_iters;
    cfg.tol = options.census_tol;
    cfg.record_every = options.census_iters;
    report.census = basin_census(model, ensemble, data, x, options.census_trials, cfg,
                                 derive_seed(seed, 6));
  }
  return report;
}

}  // namespace qim::landscape
