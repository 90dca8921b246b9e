#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qim/error.hpp"
#include "qim/experiments.hpp"
#include "qim/rng.hpp"

namespace {

using namespace qim;
using namespace qim::experiments;
using nlohmann::json;
namespace fs = std::filesystem;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const QimError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no QimError thrown";
  return ErrorCode::Io;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

ExperimentConfig small(Command cmd) {
  auto cfg = ExperimentConfig::defaults(cmd);
  cfg.n = 16;
  cfg.trials = 4;
  return cfg;
}

TEST(Config, Defaults) {
  const auto sr = ExperimentConfig::defaults(Command::SuccessRate);
  EXPECT_EQ(sr.n, 128);
  EXPECT_EQ(sr.trials, 100);
  EXPECT_EQ(sr.max_iters, 2500);
  EXPECT_DOUBLE_EQ(sr.tol, 1e-5);
  EXPECT_EQ(sr.ratios.front(), 1.0);
  EXPECT_EQ(sr.ratios.back(), 10.0);
  EXPECT_EQ(sr.ratios.size(), 19u);
  const auto noise = ExperimentConfig::defaults(Command::Noise);
  EXPECT_EQ(noise.snr_db.size(), 9u);
  EXPECT_EQ(noise.ratios, std::vector<double>{8.0});
  const auto conv = ExperimentConfig::defaults(Command::Convergence);
  EXPECT_EQ(conv.models, (std::vector<std::string>{"qim2", "qim3", "wf"}));
}

TEST(Config, MergeOverridesAndRejects) {
  auto cfg = ExperimentConfig::defaults(Command::Noise);
  cfg.merge(json::parse(
      R"({"model":"qim3","n":32,"ratio":[2,4],"snr":[10,"inf"],"seed":9,"field":"complex"})"));
  EXPECT_EQ(cfg.models, std::vector<std::string>{"qim3"});
  EXPECT_EQ(cfg.n, 32);
  EXPECT_EQ(cfg.measurement_counts(), (std::vector<Index>{64, 128}));
  EXPECT_TRUE(std::isinf(cfg.snr_db[1]));
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.field, Field::Complex);
  cfg.merge(json::parse(R"({"m":100})"));
  EXPECT_EQ(cfg.measurement_counts(), std::vector<Index>{100});

  EXPECT_EQ(code_of([&] { cfg.merge(json::parse(R"({"bogus":1})")); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { cfg.merge(json::parse(R"({"n":"ten"})")); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { cfg.merge(json::parse(R"({"n":1.5})")); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { cfg.merge(json::parse(R"({"seed":-1})")); }), ErrorCode::InvalidConfig);
  EXPECT_EQ(code_of([&] { cfg.merge(json::parse("[1]")); }), ErrorCode::InvalidConfig);
}

TEST(Config, Validation) {
  auto check = [](auto mutate) {
    auto cfg = ExperimentConfig::defaults(Command::SuccessRate);
    mutate(cfg);
    return code_of([&] { cfg.validate(); });
  };
  EXPECT_EQ(check([](ExperimentConfig& c) { c.trials = 0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(check([](ExperimentConfig& c) { c.tol = 0.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(check([](ExperimentConfig& c) { c.models = {"qim9"}; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(check([](ExperimentConfig& c) { c.beta = -1.0; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(check([](ExperimentConfig& c) { c.ensemble = "cdp"; }), ErrorCode::InvalidConfig);
  EXPECT_EQ(check([](ExperimentConfig& c) {
              c.ensemble = "cdp";
              c.field = Field::Complex;
              c.ratios = {2.5};
            }),
            ErrorCode::InvalidConfig);
  auto land = ExperimentConfig::defaults(Command::Landscape);
  land.models = {"wf"};
  EXPECT_EQ(code_of([&] { land.validate(); }), ErrorCode::InvalidConfig);
  auto oracle = ExperimentConfig::defaults(Command::OracleCheck);
  oracle.beta = 0.0;
  EXPECT_EQ(code_of([&] { oracle.validate(); }), ErrorCode::InvalidConfig);
}

TEST(Config, ParseNames) {
  EXPECT_EQ(parse_command("noise"), Command::Noise);
  EXPECT_THROW(parse_command("fit"), QimError);
  EXPECT_EQ(parse_model("QIM3", 1, 0.2, 0.9).beta1, 0.2);
  EXPECT_EQ(algorithm_name(parse_model("wf", 1, 1, 1)), "WF");
}

TEST(Problem, SameInstanceAcrossModels) {
  auto cfg = small(Command::SuccessRate);
  const auto a = make_problem(cfg, 64, 3);
  const auto b = make_problem(cfg, 64, 3);
  const auto c = make_problem(cfg, 64, 4);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.ensemble.real_rows(), b.ensemble.real_rows());
  EXPECT_NE(a.x, c.x);
  EXPECT_NE(trial_seed(1, 64, 3), trial_seed(1, 80, 3));
}

TEST(SuccessRate, CsvSchemaAndDeterminism) {
  auto cfg = small(Command::SuccessRate);
  cfg.ratios = {2.0, 6.0};
  const std::string a = success_rate_csv(success_rate(cfg));
  const std::string b = success_rate_csv(success_rate(cfg));
  EXPECT_EQ(a, b);
  const auto rows = lines(a);
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_EQ(rows[0], "model,n,m,trials,successes,rate");
  EXPECT_EQ(rows[1].rfind("QIM2,16,32,4,", 0), 0u);
  EXPECT_EQ(a.find('\r'), std::string::npos);
  EXPECT_EQ(a.back(), '\n');
}

TEST(Convergence, TrajectoryRows) {
  auto cfg = small(Command::Convergence);
  cfg.trials = 2;
  const auto traces = convergence(cfg);
  ASSERT_EQ(traces.size(), 6u);  // 3 algorithms x 2 trials
  for (const auto& t : traces) {
    ASSERT_FALSE(t.run.trajectory.empty());
    EXPECT_EQ(t.run.trajectory.front().iter, 0);
    EXPECT_EQ(t.m, 96);
    for (std::size_t i = 0; i + 1 < t.run.trajectory.size(); ++i) {
      EXPECT_GT(t.run.trajectory[i].rel_error, 0.0);
    }
  }
  // the first row is dist(u0, x) / ||x|| for the instance's start
  const Problem p = make_problem(cfg, 96, 0);
  const Vector u0 = random_init(16, Field::Real, derive_seed(p.seed, 2), p.data);
  EXPECT_DOUBLE_EQ(traces[0].run.trajectory.front().rel_error,
                   dist_mod_phase(u0, p.x, Field::Real) / p.x.norm());
  const auto rows = lines(convergence_csv(traces));
  EXPECT_EQ(rows[0], "algorithm,m,trial,iter,rel_error");
  EXPECT_EQ(rows[1].rfind("QIM2,96,0,0,", 0), 0u);
}

TEST(Noise, SnrOrderingAndNoiselessLimit) {
  auto cfg = small(Command::Noise);
  cfg.n = 32;
  cfg.snr_db = {20.0, 60.0, kNoiselessSnr};
  const auto result = noise(cfg);
  ASSERT_EQ(result.points.size(), 6u);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& p20 = result.points[3 * k];
    const auto& p60 = result.points[3 * k + 1];
    const auto& pinf = result.points[3 * k + 2];
    EXPECT_GT(p20.mse_db, p60.mse_db);
    EXPECT_LE(pinf.mse_db, -100.0);
    EXPECT_EQ(pinf.clamped, 0u);
  }
  ASSERT_EQ(result.fits.size(), 2u);
  EXPECT_NEAR(result.fits[0].slope, -1.0, 0.15);
  const auto rows = lines(noise_csv(result));
  EXPECT_EQ(rows[0], "model,m,snr_db,trials,mse_db,clamped,fit_slope");
  EXPECT_NE(rows[3].find(",inf,"), std::string::npos);
}

TEST(FitSlope, Line) {
  EXPECT_DOUBLE_EQ(fit_slope({1, 2, 3, 4}, {3, 1, -1, -3}), -2.0);
  EXPECT_TRUE(std::isnan(fit_slope({1}, {1})));
}

TEST(RunCommand, LandscapeJsonShape) {
  auto cfg = ExperimentConfig::defaults(Command::Landscape);
  cfg.models = {"qim2"};
  cfg.n = 24;
  cfg.trials = 3;
  const auto out = run_command(cfg);
  EXPECT_EQ(out.exit_code, 0);
  const json j = json::parse(out.text);
  EXPECT_EQ(j["violations"], 0);
  const auto& r = j["reports"][0];
  for (const char* key : {"origin_max_curvature", "radial_scan", "equator_curvatures",
                          "convexity_near_truth", "basin_census", "below_threshold_regime"}) {
    EXPECT_TRUE(r.contains(key)) << key;
  }
  const auto& census = r["basin_census"];
  EXPECT_EQ(census["reached_truth"].get<int>() + census["reached_other"].get<int>() +
                census["nonconverged"].get<int>(),
            census["trials"].get<int>());
  EXPECT_EQ(run_command(cfg).text, out.text);
}

TEST(RunCommand, LandscapeBelowThresholdWarns) {
  auto cfg = ExperimentConfig::defaults(Command::Landscape);
  cfg.models = {"qim2"};
  cfg.n = 24;
  cfg.ratios = {1.0};
  cfg.trials = 3;
  const auto out = run_command(cfg);
  EXPECT_EQ(out.exit_code, 0);
  EXPECT_FALSE(out.warnings.empty());
  EXPECT_TRUE(json::parse(out.text)["reports"][0]["below_threshold_regime"].get<bool>());
}

TEST(RunCommand, OracleJson) {
  auto cfg = ExperimentConfig::defaults(Command::OracleCheck);
  cfg.mc_samples = 20000;
  const auto out = run_command(cfg);
  EXPECT_EQ(out.exit_code, 0);
  const json j = json::parse(out.text);
  EXPECT_TRUE(j["all_pass"].get<bool>());
  for (const auto& c : j["checks"]) {
    for (const char* key : {"name", "inputs", "values", "margin", "pass"}) {
      EXPECT_TRUE(c.contains(key));
    }
  }
}

// ---- command line -------------------------------------------------------

struct CliResult {
  int code;
  std::string out;
};

CliResult cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "qimlab_cli_test.out";
  const std::string cmd =
      std::string(QIMLAB_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 2);
  EXPECT_EQ(cli("fit").code, 2);
  EXPECT_EQ(cli("success-rate --n 8 --ratio 4 --trials 0").code, 2);
  EXPECT_EQ(cli("landscape --model qim7 --n 16").code, 2);
  EXPECT_EQ(cli("oracle-check --beta 0").code, 2);
  EXPECT_EQ(cli("noise --snr loud").code, 2);
  EXPECT_EQ(cli("success-rate --config /nonexistent/cfg.json").code, 2);
  EXPECT_EQ(cli("success-rate --n 8 --ratio 4 --trials 2 --out /nonexistent/dir/x.csv").code, 2);
  EXPECT_EQ(cli("landscape --model qim2 --n 16 --ratio 1 --trials 2").code, 0);
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
  const fs::path cfg = fs::temp_directory_path() / "qimlab_cli_cfg.json";
  std::ofstream(cfg) << R"({"model":"qim3","n":8,"ratio":[4],"trials":3,"seed":5})";
  const auto from_file = cli("success-rate --config " + cfg.string());
  EXPECT_EQ(from_file.code, 0);
  EXPECT_EQ(lines(from_file.out).size(), 2u);
  EXPECT_EQ(lines(from_file.out)[1].rfind("QIM3,8,32,3,", 0), 0u);
  const auto flag = cli("success-rate --config " + cfg.string() + " --trials 2 --model qim2");
  EXPECT_EQ(lines(flag.out)[1].rfind("QIM2,8,32,2,", 0), 0u);
  fs::remove(cfg);
}

TEST(Cli, RerunIsByteIdentical) {
  for (const std::string args :
       {"success-rate --n 12 --ratio 3,5 --trials 3 --seed 4",
        "convergence --n 12 --iters 200 --seed 4 --threads 1",
        "noise --n 12 --trials 2 --snr 20,40,inf --iters 300",
        "landscape --model qim3 --n 16 --trials 2", "oracle-check --samples 5000"}) {
    const auto a = cli(args), b = cli(args);
    EXPECT_EQ(a.code, 0) << args;
    EXPECT_FALSE(a.out.empty()) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
}

}  // namespace
