#include "qim/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>

#include <omp.h>

#include "qim/error.hpp"
#include "qim/rng.hpp"

namespace qim::experiments {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void config_error(const std::string& what) {
  throw QimError(ErrorCode::InvalidConfig, what);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Runs body(i) for i in [0, count) on the OpenMP team; the first exception
// (lowest index) is rethrown after the loop.
template <class Body>
void parallel_for(int count, Body body) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < count; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<double> number_list(const json& value, const char* key) {
  std::vector<double> out;
  auto one = [&](const json& v) {
    if (v.is_number()) {
      out.push_back(v.get<double>());
    } else if (v.is_string() && lower(v.get<std::string>()) == "inf") {
      out.push_back(kNoiselessSnr);
    } else {
      config_error(std::string("'") + key + "' must be a number or a list of numbers");
    }
  };
  if (value.is_array()) {
    for (const auto& v : value) one(v);
  } else {
    one(value);
  }
  return out;
}

template <class T>
T integer(const json& value, const char* key) {
  if (!value.is_number_integer()) config_error(std::string("'") + key + "' must be an integer");
  return value.get<T>();
}

double number(const json& value, const char* key) {
  if (!value.is_number()) config_error(std::string("'") + key + "' must be a number");
  return value.get<double>();
}

std::string text(const json& value, const char* key) {
  if (!value.is_string()) config_error(std::string("'") + key + "' must be a string");
  return value.get<std::string>();
}

std::vector<double> ratio_grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double r = lo + step * i;
    if (r > hi + 1e-9) break;
    out.push_back(r);
  }
  return out;
}

}  // namespace

const char* to_string(Command command) {
  switch (command) {
    case Command::SuccessRate: return "success-rate";
    case Command::Convergence: return "convergence";
    case Command::Noise: return "noise";
    case Command::Landscape: return "landscape";
    case Command::OracleCheck: return "oracle-check";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::SuccessRate, Command::Convergence, Command::Noise,
                    Command::Landscape, Command::OracleCheck}) {
    if (name == to_string(c)) return c;
  }
  config_error("unknown command '" + name + "'");
}

QimModel parse_model(const std::string& name, double beta, double beta1,
                     double beta2) {
  const std::string key = lower(name);
  QimModel model;
  if (key == "qim1") {
    model = QimModel::qim1();
  } else if (key == "qim2") {
    model = QimModel::qim2(beta);
  } else if (key == "qim3") {
    model = QimModel::qim3(beta1, beta2);
  } else if (key == "wf" || key == "intensity") {
    model = QimModel::intensity();
  } else {
    config_error("unknown model '" + name + "' (expected qim1, qim2, qim3 or wf)");
  }
  try {
    model.validate();
  } catch (const QimError& err) {
    config_error(err.what());
  }
  return model;
}

std::string algorithm_name(const QimModel& model) {
  return model.kind == ModelKind::Intensity ? "WF" : model.name();
}

ExperimentConfig ExperimentConfig::defaults(Command command) {
  ExperimentConfig cfg;
  cfg.command = command;
  switch (command) {
    case Command::SuccessRate:
      cfg.models = {"qim2", "qim3"};
      cfg.ratios = ratio_grid(1.0, 10.0, 0.5);
      break;
    case Command::Convergence:
      cfg.models = {"qim2", "qim3", "wf"};
      cfg.ratios = {6.0};
      cfg.trials = 1;
      cfg.tol = 1e-10;
      break;
    case Command::Noise:
      cfg.models = {"qim2", "qim3"};
      cfg.ratios = {8.0};
      cfg.trials = 10;
      cfg.tol = 1e-10;
      cfg.snr_db = {20, 25, 30, 35, 40, 45, 50, 55, 60};
      break;
    case Command::Landscape:
      cfg.models = {"qim1", "qim2", "qim3"};
      cfg.n = 64;
      cfg.ratios = {10.0};
      cfg.trials = 200;
      break;
    case Command::OracleCheck:
      cfg.models = {};
      cfg.ratios = {};
      break;
  }
  return cfg;
}

void ExperimentConfig::merge(const json& config) {
  if (!config.is_object()) config_error("config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    if (key == "model") {
      models.clear();
      if (value.is_array()) {
        for (const auto& v : value) models.push_back(text(v, "model"));
      } else {
        models.push_back(text(value, "model"));
      }
    } else if (key == "beta") {
      beta = number(value, "beta");
    } else if (key == "beta1") {
      beta1 = number(value, "beta1");
    } else if (key == "beta2") {
      beta2 = number(value, "beta2");
    } else if (key == "n") {
      n = integer<Index>(value, "n");
    } else if (key == "ratio") {
      ratios = number_list(value, "ratio");
    } else if (key == "m") {
      m = integer<Index>(value, "m");
    } else if (key == "trials") {
      trials = integer<int>(value, "trials");
    } else if (key == "iters") {
      max_iters = integer<int>(value, "iters");
    } else if (key == "tol") {
      tol = number(value, "tol");
    } else if (key == "record_every") {
      record_every = integer<int>(value, "record_every");
    } else if (key == "seed") {
      if (!value.is_number_unsigned() && !value.is_number_integer()) {
        config_error("'seed' must be a nonnegative integer");
      }
      if (value.is_number_integer() && value.get<std::int64_t>() < 0) {
        config_error("'seed' must be a nonnegative integer");
      }
      seed = value.get<std::uint64_t>();
    } else if (key == "snr") {
      snr_db = number_list(value, "snr");
    } else if (key == "field") {
      const std::string f = lower(text(value, "field"));
      if (f == "real") {
        field = Field::Real;
      } else if (f == "complex") {
        field = Field::Complex;
      } else {
        config_error("'field' must be real or complex");
      }
    } else if (key == "ensemble") {
      ensemble = lower(text(value, "ensemble"));
    } else if (key == "power_iters") {
      power_iters = integer<int>(value, "power_iters");
    } else if (key == "samples") {
      mc_samples = integer<std::int64_t>(value, "samples");
    } else if (key == "out") {
      out = text(value, "out");
    } else if (key == "threads") {
      threads = integer<int>(value, "threads");
    } else {
      config_error("unknown config key '" + key + "'");
    }
  }
}

void ExperimentConfig::validate() const {
  if (n < 1) config_error("n must be >= 1");
  if (trials < 1) config_error("trials must be >= 1");
  if (max_iters < 1) config_error("iters must be >= 1");
  if (!(tol > 0.0)) config_error("tol must be > 0");
  if (record_every < 1) config_error("record_every must be >= 1");
  if (threads < 0) config_error("threads must be >= 0");
  if (power_iters < 1) config_error("power_iters must be >= 1");
  if (mc_samples < 1000) config_error("samples must be >= 1000");
  if (ensemble != "gaussian" && ensemble != "cdp") {
    config_error("ensemble must be gaussian or cdp");
  }
  if (ensemble == "cdp" && field != Field::Complex) {
    config_error("cdp ensembles are complex; pass field=complex");
  }
  if (command != Command::OracleCheck) {
    if (models.empty()) config_error("at least one model is required");
    resolved_models();
    measurement_counts();
  } else if (!(beta > 0.0) || !(beta1 > 0.0) || !(beta2 > 0.0)) {
    config_error("beta, beta1, beta2 must be > 0");
  }
  if (command == Command::Landscape && field != Field::Real) {
    config_error("landscape certification runs on the real field only");
  }
  if (command == Command::Noise) {
    if (snr_db.empty()) config_error("noise needs at least one SNR value");
    for (double s : snr_db) {
      if (std::isnan(s) || s == -kNoiselessSnr) config_error("SNR must be finite or inf");
    }
  }
}

std::vector<QimModel> ExperimentConfig::resolved_models() const {
  std::vector<QimModel> out;
  for (const auto& name : models) {
    const QimModel model = parse_model(name, beta, beta1, beta2);
    if (command == Command::Landscape && model.kind == ModelKind::Intensity) {
      config_error("landscape covers qim1, qim2 and qim3");
    }
    out.push_back(model);
  }
  return out;
}

std::vector<Index> ExperimentConfig::measurement_counts() const {
  std::vector<Index> out;
  if (m) {
    if (*m < 1) config_error("m must be >= 1");
    if (ensemble == "cdp" && *m % n != 0) config_error("cdp needs m to be a multiple of n");
    out.push_back(*m);
    return out;
  }
  if (ratios.empty()) config_error("no measurement ratio given");
  for (double r : ratios) {
    if (!(r > 0.0) || !std::isfinite(r)) config_error("ratios must be > 0");
    const double count = r * static_cast<double>(n);
    if (ensemble == "cdp" && std::abs(r - std::round(r)) > 1e-12) {
      config_error("cdp needs integer ratios (m = L n)");
    }
    const auto rounded = static_cast<Index>(std::llround(count));
    if (rounded < 1) config_error("ratio gives m = 0");
    out.push_back(rounded);
  }
  return out;
}

json ExperimentConfig::to_json() const {
  json j;
  j["command"] = to_string(command);
  j["model"] = models;
  j["beta"] = beta;
  j["beta1"] = beta1;
  j["beta2"] = beta2;
  j["n"] = n;
  if (m) {
    j["m"] = *m;
  } else {
    j["ratio"] = ratios;
  }
  j["trials"] = trials;
  j["iters"] = max_iters;
  j["tol"] = tol;
  j["seed"] = seed;
  j["field"] = qim::to_string(field);
  j["ensemble"] = ensemble;
  if (command == Command::OracleCheck) j["samples"] = mc_samples;
  return j;
}

std::uint64_t trial_seed(std::uint64_t master, Index m, int trial) {
  return derive_seed(derive_seed(master, static_cast<std::uint64_t>(m)),
                     static_cast<std::uint64_t>(trial));
}

Problem make_problem(const ExperimentConfig& config, Index m, int trial) {
  const std::uint64_t ts = trial_seed(config.seed, m, trial);
  SensingEnsemble ensemble =
      config.ensemble == "cdp"
          ? SensingEnsemble::cdp(config.n, m / config.n, derive_seed(ts, 0))
          : SensingEnsemble::gaussian(config.n, m, config.field, derive_seed(ts, 0));
  Vector x = random_signal(config.n, config.field, derive_seed(ts, 1));
  IntensityData data = intensities(ensemble, x);
  return Problem{std::move(ensemble), std::move(x), std::move(data), ts};
}

RunResult run_algorithm(const QimModel& model, const Problem& problem,
                        const IntensityData& data, const ExperimentConfig& config) {
  GdConfig cfg = GdConfig::for_model(model);
  cfg.max_iters = config.max_iters;
  cfg.tol = config.tol;
  cfg.record_every = config.record_every;
  try {
    if (model.kind == ModelKind::Intensity) {
      return wirtinger_flow_baseline(problem.ensemble, data, problem.x, cfg,
                                     config.power_iters, derive_seed(problem.seed, 2));
    }
    const Vector u0 = random_init(config.n, problem.ensemble.field(),
                                  derive_seed(problem.seed, 2), data);
    return gradient_descent(model, problem.ensemble, data, problem.x, cfg, u0);
  } catch (const QimError& err) {
    if (err.code() != ErrorCode::NonFinite) throw;
    RunResult failed;
    failed.status = RunStatus::Diverged;
    failed.final_dist_rel = std::numeric_limits<double>::infinity();
    failed.iterates_used = cfg.max_iters;
    return failed;
  }
}

std::vector<SuccessRow> success_rate(const ExperimentConfig& config) {
  config.validate();
  const auto models = config.resolved_models();
  const auto counts = config.measurement_counts();
  // successes[model][count]
  std::vector<std::vector<int>> successes(models.size(),
                                          std::vector<int>(counts.size(), 0));
  for (std::size_t c = 0; c < counts.size(); ++c) {
    std::vector<std::vector<char>> ok(models.size(),
                                      std::vector<char>(static_cast<std::size_t>(config.trials), 0));
    parallel_for(config.trials, [&](int t) {
      const Problem problem = make_problem(config, counts[c], t);
      for (std::size_t k = 0; k < models.size(); ++k) {
        ok[k][static_cast<std::size_t>(t)] =
            run_algorithm(models[k], problem, problem.data, config).converged;
      }
    });
    for (std::size_t k = 0; k < models.size(); ++k) {
      successes[k][c] = static_cast<int>(std::count(ok[k].begin(), ok[k].end(), 1));
    }
  }
  std::vector<SuccessRow> rows;
  for (std::size_t k = 0; k < models.size(); ++k) {
    for (std::size_t c = 0; c < counts.size(); ++c) {
      SuccessRow row;
      row.model = algorithm_name(models[k]);
      row.n = config.n;
      row.m = counts[c];
      row.trials = config.trials;
      row.successes = successes[k][c];
      row.rate = static_cast<double>(row.successes) / config.trials;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string success_rate_csv(const std::vector<SuccessRow>& rows) {
  std::string out = "model,n,m,trials,successes,rate\n";
  for (const auto& r : rows) {
    out += r.model + "," + std::to_string(r.n) + "," + std::to_string(r.m) + "," +
           std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
           fmt(r.rate) + "\n";
  }
  return out;
}

std::vector<ConvergenceTrace> convergence(const ExperimentConfig& config) {
  config.validate();
  const auto models = config.resolved_models();
  const auto counts = config.measurement_counts();
  std::vector<ConvergenceTrace> traces;
  for (Index m : counts) {
    std::vector<ConvergenceTrace> block(models.size() * static_cast<std::size_t>(config.trials));
    parallel_for(config.trials, [&](int t) {
      const Problem problem = make_problem(config, m, t);
      for (std::size_t k = 0; k < models.size(); ++k) {
        auto& trace = block[static_cast<std::size_t>(t) * models.size() + k];
        trace.algorithm = algorithm_name(models[k]);
        trace.m = m;
        trace.trial = t;
        trace.run = run_algorithm(models[k], problem, problem.data, config);
      }
    });
    for (auto& trace : block) traces.push_back(std::move(trace));
  }
  return traces;
}

std::string convergence_csv(const std::vector<ConvergenceTrace>& traces) {
  std::string out = "algorithm,m,trial,iter,rel_error\n";
  for (const auto& trace : traces) {
    for (const auto& point : trace.run.trajectory) {
      out += trace.algorithm + "," + std::to_string(trace.m) + "," +
             std::to_string(trace.trial) + "," + std::to_string(point.iter) + "," +
             fmt(point.rel_error) + "\n";
    }
  }
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

NoiseResult noise(const ExperimentConfig& config) {
  config.validate();
  const auto models = config.resolved_models();
  const auto counts = config.measurement_counts();
  const std::size_t n_snr = config.snr_db.size();
  NoiseResult result;
  for (Index m : counts) {
    // mse[t][model][snr]
    const std::size_t per_trial = models.size() * n_snr;
    std::vector<double> mse(static_cast<std::size_t>(config.trials) * per_trial, 0.0);
    std::vector<std::size_t> clamped(static_cast<std::size_t>(config.trials) * n_snr, 0);
    parallel_for(config.trials, [&](int t) {
      const Problem problem = make_problem(config, m, t);
      for (std::size_t s = 0; s < n_snr; ++s) {
        const IntensityData data = add_amplitude_noise(
            problem.ensemble, problem.x, config.snr_db[s], derive_seed(problem.seed, 3));
        clamped[static_cast<std::size_t>(t) * n_snr + s] = data.clamped;
        for (std::size_t k = 0; k < models.size(); ++k) {
          const RunResult run = run_algorithm(models[k], problem, data, config);
          const double rel = std::max(run.final_dist_rel, 1e-300);
          mse[static_cast<std::size_t>(t) * per_trial + k * n_snr + s] =
              20.0 * std::log10(rel);
        }
      }
    });
    for (std::size_t k = 0; k < models.size(); ++k) {
      std::vector<double> xs, ys;
      for (std::size_t s = 0; s < n_snr; ++s) {
        NoisePoint point;
        point.model = algorithm_name(models[k]);
        point.m = m;
        point.snr_db = config.snr_db[s];
        point.trials = config.trials;
        double sum = 0.0;
        for (int t = 0; t < config.trials; ++t) {
          sum += mse[static_cast<std::size_t>(t) * per_trial + k * n_snr + s];
          point.clamped += clamped[static_cast<std::size_t>(t) * n_snr + s];
        }
        point.mse_db = sum / config.trials;
        if (std::isfinite(point.snr_db)) {
          xs.push_back(point.snr_db);
          ys.push_back(point.mse_db);
        }
        result.points.push_back(point);
      }
      result.fits.push_back({algorithm_name(models[k]), m, fit_slope(xs, ys)});
    }
  }
  return result;
}

std::string noise_csv(const NoiseResult& result) {
  std::string out = "model,m,snr_db,trials,mse_db,clamped,fit_slope\n";
  for (const auto& p : result.points) {
    double slope = std::numeric_limits<double>::quiet_NaN();
    for (const auto& f : result.fits) {
      if (f.model == p.model && f.m == p.m) slope = f.slope;
    }
    out += p.model + "," + std::to_string(p.m) + "," + fmt(p.snr_db) + "," +
           std::to_string(p.trials) + "," + fmt(p.mse_db) + "," +
           std::to_string(p.clamped) + "," + fmt(slope) + "\n";
  }
  return out;
}

json landscape_json(const landscape::LandscapeReport& r) {
  json j;
  json model;
  model["name"] = r.model.name();
  if (r.model.kind == ModelKind::Qim2) model["beta"] = r.model.beta;
  if (r.model.kind == ModelKind::Qim3) {
    model["beta1"] = r.model.beta1;
    model["beta2"] = r.model.beta2;
  }
  j["model"] = model;
  j["n"] = r.n;
  j["m"] = r.m;
  j["seed"] = r.seed;
  j["below_threshold_regime"] = r.below_threshold;

  json origin;
  origin["probe_max"] = r.origin.probe_max;
  origin["probes"] = r.origin.probes;
  origin["target"] = r.origin.target;
  origin["dense_max_eigenvalue"] =
      r.origin.dense_max_eigenvalue ? json(*r.origin.dense_max_eigenvalue) : json(nullptr);
  j["origin_max_curvature"] = origin;

  json radial = json::array();
  for (const auto& rec : r.radial) {
    json e;
    e["R"] = rec.R;
    e["direction"] = landscape::to_string(rec.tag);
    e["direction_index"] = rec.direction;
    e["theta"] = rec.theta;
    e["dR"] = rec.dR;
    e["predicted_sign"] = rec.predicted ? json(*rec.predicted) : json(nullptr);
    e["sign_ok"] = rec.sign_ok;
    radial.push_back(e);
  }
  j["radial_scan"] = radial;

  json equator = json::array();
  for (const auto& rec : r.equator) {
    json e;
    e["R"] = rec.R;
    e["theta"] = rec.theta;
    e["direction_index"] = rec.direction;
    e["curvature"] = rec.curvature;
    e["ok"] = rec.ok;
    equator.push_back(e);
  }
  j["equator_curvatures"] = equator;

  json convexity;
  convexity["radius"] = r.convexity.radius;
  convexity["samples_per_ball"] = r.convexity.samples;
  convexity["min_full_curvature"] = r.convexity.min_curvature;
  convexity["min_restricted_curvature"] = r.convexity.min_restricted;
  convexity["certified"] = r.convexity.certified;
  convexity["threshold"] = r.convexity.threshold;
  convexity["ok"] = r.convexity.ok;
  j["convexity_near_truth"] = convexity;

  json census;
  census["trials"] = r.census.trials;
  census["reached_truth"] = r.census.reached_truth;
  census["reached_other"] = r.census.reached_other;
  census["nonconverged"] = r.census.nonconverged;
  census["saddle_candidates"] = r.census.saddle_candidates;
  json misses = json::array();
  for (const auto& e : r.census.misses) {
    json item;
    item["trial"] = e.trial;
    item["endpoint"] = landscape::to_string(e.endpoint);
    item["rel_error"] = e.rel_error;
    item["grad_norm"] = e.grad_norm;
    item["iterations"] = e.iterations;
    item["min_curvature"] = e.min_curvature ? json(*e.min_curvature) : json(nullptr);
    misses.push_back(item);
  }
  census["misses"] = misses;
  j["basin_census"] = census;
  j["violations"] = r.violations();
  return j;
}

json oracle_json(const oracles::OracleReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json item;
    item["name"] = c.name;
    json inputs = json::object(), values = json::object();
    for (const auto& [k, v] : c.inputs) inputs[k] = v;
    for (const auto& [k, v] : c.values) values[k] = v;
    item["inputs"] = inputs;
    item["values"] = values;
    item["margin"] = c.margin;
    item["pass"] = c.pass;
    checks.push_back(item);
  }
  json j;
  j["checks"] = checks;
  j["all_pass"] = report.all_pass();
  return j;
}

CommandOutput run_command(const ExperimentConfig& config) {
  config.validate();
  if (config.threads > 0) omp_set_num_threads(config.threads);
  CommandOutput out;
  switch (config.command) {
    case Command::SuccessRate:
      out.text = success_rate_csv(success_rate(config));
      break;
    case Command::Convergence:
      out.text = convergence_csv(convergence(config));
      break;
    case Command::Noise:
      out.text = noise_csv(noise(config));
      break;
    case Command::Landscape: {
      landscape::LandscapeOptions options;
      options.census_trials = config.trials;
      options.census_iters = config.max_iters;
      options.census_tol = config.tol;
      json reports = json::array();
      int violations = 0;
      for (const auto& model : config.resolved_models()) {
        for (Index m : config.measurement_counts()) {
          const auto report = landscape::run_landscape(model, config.n, m, config.seed, options);
          reports.push_back(landscape_json(report));
          if (report.below_threshold) {
            out.warnings.push_back(model.name() + " m=" + std::to_string(m) +
                                   ": below-threshold regime, checks are reported only");
          } else {
            violations += report.violations();
          }
        }
      }
      json j;
      j["config"] = config.to_json();
      j["reports"] = reports;
      j["violations"] = violations;
      out.text = j.dump(2) + "\n";
      out.exit_code = violations > 0 ? 1 : 0;
      break;
    }
    case Command::OracleCheck: {
      oracles::OracleSuiteOptions options;
      options.mc_samples = config.mc_samples;
      options.seed = config.seed;
      const auto report = oracles::run_oracle_suite(options);
      json j = oracle_json(report);
      j["config"] = config.to_json();
      out.text = j.dump(2) + "\n";
      out.exit_code = report.all_pass() ? 0 : 1;
      break;
    }
  }
  return out;
}

}  // namespace qim::experiments
