#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qim/landscape.hpp"
#include "qim/oracles.hpp"
#include "qim/optimizers.hpp"

namespace qim::experiments {

enum class Command { SuccessRate, Convergence, Noise, Landscape, OracleCheck };
const char* to_string(Command command);
/// Throws InvalidConfig on an unknown name.
Command parse_command(const std::string& name);

/// "qim1" | "qim2" | "qim3" | "wf" (case-insensitive). "wf" maps to the
/// INTENSITY model, which the harness always runs as the Wirtinger-flow
/// baseline (spectral start). Throws InvalidConfig on anything else.
QimModel parse_model(const std::string& name, double beta, double beta1,
                     double beta2);
/// "QIM2", "QIM3", "WF", ...
std::string algorithm_name(const QimModel& model);

struct ExperimentConfig {
  Command command = Command::SuccessRate;
  std::vector<std::string> models;
  double beta = 1.0;
  double beta1 = 0.1;
  double beta2 = 1.0;
  Index n = 128;
  /// m/n values; ignored when `m` is set.
  std::vector<double> ratios;
  std::optional<Index> m;
  int trials = 100;
  int max_iters = 2500;
  double tol = 1e-5;
  int record_every = 1;
  std::uint64_t seed = 1;
  std::vector<double> snr_db;
  Field field = Field::Real;
  /// "gaussian" or "cdp" (cdp needs integer ratios; m = ratio * n).
  std::string ensemble = "gaussian";
  int power_iters = 50;
  std::int64_t mc_samples = 1000000;
  std::string out;  // empty: stdout
  int threads = 0;  // 0: OpenMP default

  /// Per-command defaults (sizes, model lists, grids).
  static ExperimentConfig defaults(Command command);
  /// Overlay keys from a JSON object; unknown keys and wrong types throw
  /// InvalidConfig.
  void merge(const nlohmann::json& config);
  /// Throws InvalidConfig.
  void validate() const;
  std::vector<QimModel> resolved_models() const;
  /// The measurement counts to run, in order.
  std::vector<Index> measurement_counts() const;
  /// Settings echoed into JSON outputs.
  nlohmann::json to_json() const;
};

/// Seed of trial t at measurement count m: everything random in that trial
/// (ensemble, signal, start, noise) is derived from it, so models compared
/// at the same (m, t) see the same problem instance.
std::uint64_t trial_seed(std::uint64_t master, Index m, int trial);

struct Problem {
  SensingEnsemble ensemble;
  Vector x;
  IntensityData data;
  std::uint64_t seed;
};
Problem make_problem(const ExperimentConfig& config, Index m, int trial);

/// Runs one algorithm on a problem from the configured start (random for QIM,
/// spectral for WF).
RunResult run_algorithm(const QimModel& model, const Problem& problem,
                        const IntensityData& data, const ExperimentConfig& config);

struct SuccessRow {
  std::string model;
  Index n = 0;
  Index m = 0;
  int trials = 0;
  int successes = 0;
  double rate = 0.0;
};
std::vector<SuccessRow> success_rate(const ExperimentConfig& config);
std::string success_rate_csv(const std::vector<SuccessRow>& rows);

struct ConvergenceTrace {
  std::string algorithm;
  Index m = 0;
  int trial = 0;
  RunResult run;
};
std::vector<ConvergenceTrace> convergence(const ExperimentConfig& config);
std::string convergence_csv(const std::vector<ConvergenceTrace>& traces);

struct NoisePoint {
  std::string model;
  Index m = 0;
  double snr_db = 0.0;
  int trials = 0;
  /// Mean over trials of 10 log10(dist^2 / ||x||^2).
  double mse_db = 0.0;
  std::size_t clamped = 0;
};
struct NoiseFit {
  std::string model;
  Index m = 0;
  /// Least-squares slope of mse_db against snr_db over the finite SNRs.
  double slope = 0.0;
};
struct NoiseResult {
  std::vector<NoisePoint> points;
  std::vector<NoiseFit> fits;
};
NoiseResult noise(const ExperimentConfig& config);
std::string noise_csv(const NoiseResult& result);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

nlohmann::json landscape_json(const landscape::LandscapeReport& report);
nlohmann::json oracle_json(const oracles::OracleReport& report);

struct CommandOutput {
  std::string text;
  int exit_code = 0;
  std::vector<std::string> warnings;
};

/// Runs the configured command and renders its artifact. Exit code 1 when a
/// theorem-predicted check or an oracle fails.
CommandOutput run_command(const ExperimentConfig& config);

}  // namespace qim::experiments
