// qimlab: command-line front end for the experiment harness.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qim/error.hpp"
#include "qim/experiments.hpp"

namespace {

using nlohmann::json;
using qim::experiments::Command;

struct Flags {
  std::vector<std::string> model;
  std::optional<long long> n, m, trials, iters, record_every, threads, power_iters,
      samples;
  std::optional<unsigned long long> seed;
  std::optional<double> tol, beta, beta1, beta2;
  std::vector<double> ratio;
  std::vector<std::string> snr;
  std::optional<std::string> field, ensemble, out;
  std::string config;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "qim1, qim2, qim3, wf (comma separated)")
      ->delimiter(',');
  cmd->add_option("--n", f.n, "signal dimension");
  cmd->add_option("--ratio", f.ratio, "m/n values (comma separated)")->delimiter(',');
  cmd->add_option("--m", f.m, "measurement count (overrides --ratio)");
  cmd->add_option("--trials", f.trials, "trials per point");
  cmd->add_option("--iters", f.iters, "iteration budget");
  cmd->add_option("--tol", f.tol, "relative-error tolerance");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--snr", f.snr, "SNR values in dB, or inf")->delimiter(',');
  cmd->add_option("--config", f.config, "JSON config file (flags override it)");
  cmd->add_option("--out", f.out, "output file (default stdout)");
  cmd->add_option("--threads", f.threads, "OpenMP threads (0: default)");
  cmd->add_option("--beta", f.beta, "QIM2 beta");
  cmd->add_option("--beta1", f.beta1, "QIM3 beta1");
  cmd->add_option("--beta2", f.beta2, "QIM3 beta2");
  cmd->add_option("--field", f.field, "real or complex");
  cmd->add_option("--ensemble", f.ensemble, "gaussian or cdp");
  cmd->add_option("--samples", f.samples, "Monte Carlo samples (oracle-check)");
  cmd->add_option("--record-every", f.record_every, "trajectory stride");
  cmd->add_option("--power-iters", f.power_iters, "spectral-init power iterations");
}

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

json flags_to_json(const Flags& f) {
  json j = json::object();
  if (!f.model.empty()) j["model"] = f.model;
  if (!f.ratio.empty()) j["ratio"] = f.ratio;
  if (!f.snr.empty()) {
    json list = json::array();
    for (const auto& s : f.snr) {
      if (s == "inf" || s == "Inf" || s == "INF") {
        list.push_back("inf");
        continue;
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size()) {
        throw qim::QimError(qim::ErrorCode::InvalidConfig, "bad --snr value '" + s + "'");
      }
      list.push_back(v);
    }
    j["snr"] = list;
  }
  put(j, "n", f.n);
  put(j, "m", f.m);
  put(j, "trials", f.trials);
  put(j, "iters", f.iters);
  put(j, "record_every", f.record_every);
  put(j, "threads", f.threads);
  put(j, "power_iters", f.power_iters);
  put(j, "samples", f.samples);
  put(j, "seed", f.seed);
  put(j, "tol", f.tol);
  put(j, "beta", f.beta);
  put(j, "beta1", f.beta1);
  put(j, "beta2", f.beta2);
  put(j, "field", f.field);
  put(j, "ensemble", f.ensemble);
  put(j, "out", f.out);
  return j;
}

json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qim::QimError(qim::ErrorCode::Io, "cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw qim::QimError(qim::ErrorCode::InvalidConfig,
                        "config '" + path + "': " + e.what());
  }
}

int exit_code_for(qim::ErrorCode code) {
  switch (code) {
    case qim::ErrorCode::InvalidConfig:
    case qim::ErrorCode::DomainError:
    case qim::ErrorCode::Io:
    case qim::ErrorCode::ZeroDimension:
    case qim::ErrorCode::DimensionMismatch:
      return 2;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-retrieval lab for quotient intensity models"};
  app.require_subcommand(1);

  const std::vector<Command> commands = {Command::SuccessRate, Command::Convergence,
                                         Command::Noise, Command::Landscape,
                                         Command::OracleCheck};
  const std::vector<std::string> help = {
      "empirical success rate against m/n",
      "relative-error trajectories per iteration",
      "reconstruction error against SNR",
      "landscape certification report (JSON)",
      "analytic oracle checks (JSON)"};
  std::vector<Flags> flags(commands.size());
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    auto* sub = app.add_subcommand(qim::experiments::to_string(commands[i]), help[i]);
    add_flags(sub, flags[i]);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::size_t which = 0;
  while (!subs[which]->parsed()) ++which;
  const Flags& f = flags[which];

  try {
    auto config = qim::experiments::ExperimentConfig::defaults(commands[which]);
    if (!f.config.empty()) config.merge(read_config(f.config));
    config.merge(flags_to_json(f));
    const auto result = qim::experiments::run_command(config);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";

    if (config.out.empty()) {
      std::fwrite(result.text.data(), 1, result.text.size(), stdout);
      std::fflush(stdout);
    } else {
      std::ofstream out(config.out, std::ios::binary);
      if (!out) throw qim::QimError(qim::ErrorCode::Io, "cannot write '" + config.out + "'");
      out << result.text;
      if (!out) throw qim::QimError(qim::ErrorCode::Io, "write failed for '" + config.out + "'");
    }
    return result.exit_code;
  } catch (const qim::QimError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
