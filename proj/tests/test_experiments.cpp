#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "hybridkernel/csv.hpp"
#include "hybridkernel/errors.hpp"
#include "hybridkernel/experiments.hpp"

using namespace hybridkernel;
using namespace hybridkernel::experiments;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hybridkernel_test_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> slurp_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = csv::read_file(e.path().string());
  }
  return out;
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto c = parse_config("");
  CHECK(c.experiment == Experiment::VleData);
  CHECK(c.seed == 1);
  CHECK(c.effective_n() == 50);
  CHECK(c.effective_lambda_grid().size() == 13);
  CHECK(c.effective_lambda_grid().front() == doctest::Approx(1e-3));
  CHECK(c.effective_lambda_grid().back() == doctest::Approx(1e2));
  CHECK(c.gamma == 100.0);
  CHECK(c.gamma_theta == 10.0);
  CHECK(c.lambda_omega == 0.0);
  CHECK(c.lambda_b == 1e-8);
  CHECK(c.q == 3);
  CHECK(c.closure_grid == 33);
  CHECK(c.dt == 0.01);
  CHECK(c.horizon == 10.0);
  CHECK(c.initial_states == 5);

  auto k = parse_config("experiment = koopman\n");
  CHECK(k.effective_n() == 200);
  CHECK(k.effective_m() == std::vector<int>{25});
  CHECK(k.effective_lambda_grid().size() == 7);
  CHECK(parse_config("experiment = setting3").effective_m() == std::vector<int>{25, 50, 100});
}

TEST_CASE("config parsing") {
  const auto c = parse_config("# comment\nexperiment = setting2\n\nseed = 7  # trailing\nlambda = 1e-2, 1e0\n",
                              {{"n", "20"}, {"seed", "9"}});
  CHECK(c.experiment == Experiment::Setting2);
  CHECK(c.seed == 9);
  CHECK(c.n == 20);
  CHECK(c.lambda_grid == std::vector<double>{1e-2, 1.0});

  ExperimentConfig flags;
  apply_setting(flags, "lambda", "1e-2,1e0");
  CHECK(flags.lambda_grid.size() == 2);

  try {
    parse_config("bogus_key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("seed 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("lambda = 1e-2,-1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("m = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gamma = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment = setting9\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("gibbs_target = other\n"), ConfigError);
  CHECK(parse_config("gibbs_target = excess\n").gibbs_target == GibbsTarget::Excess);
}

TEST_CASE("log grid") {
  const auto g = log_grid(1e-4, 1e2, 7);
  REQUIRE(g.size() == 7);
  for (int k = 0; k < 7; ++k) CHECK(g[k] == doctest::Approx(std::pow(10.0, k - 4)).epsilon(1e-14));
  CHECK_THROWS(log_grid(0.0, 1.0, 3));
}

TEST_CASE("vle-data output is deterministic with declared row counts") {
  auto c = parse_config("experiment = vle-data\nn = 50\nseed = 3\n");
  const auto a = scratch("vle_a");
  const auto b = scratch("vle_b");
  c.output_dir = a.string();
  std::ostringstream log;
  CHECK(run(c, log) == 0);
  c.output_dir = b.string();
  CHECK(run(c, log) == 0);

  const auto ta = slurp_tree(a);
  const auto tb = slurp_tree(b);
  REQUIRE(ta.size() == tb.size());
  for (const auto& [name, text] : ta) {
    if (name == "manifest.json") continue;  // echoes the output directory
    CHECK(tb.at(name) == text);
  }
  const auto table = csv::parse(ta.at("vle_train.csv"));
  CHECK(table.rows.size() == 50);
  CHECK(table.header == std::vector<std::string>{"x", "y", "T", "gex_rt"});
  CHECK(ta.at("manifest.json").find("\"validation\"") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("sweep tables follow the grid") {
  auto c = parse_config("experiment = setting2\nlambda = 1e-3, 1e-1, 10\nn = 20\n");
  const auto out = run_experiment(c);
  CHECK(out.tables.at("setting2_reference_sweep.csv").rows.size() == 3);
  CHECK(out.tables.at("setting2_margules_sweep.csv").rows.size() == 3);
  CHECK(out.tables.at("setting2_margules_sweep.csv").column("theta_star2") == 4);
  CHECK(out.tables.at("vle_validation.csv").rows.size() == 20);

  auto s3 = parse_config("experiment = setting3\nlambda = 1\nm = 5, 10\nn = 15\n");
  const auto o3 = run_experiment(s3);
  CHECK(o3.tables.count("setting3_m5_sweep.csv") == 1);
  CHECK(o3.tables.count("setting3_m10_sweep.csv") == 1);
  CHECK(o3.summary.at("seeds").contains("theta_samples"));
}

TEST_CASE("dynamic experiments record every seed") {
  auto k = parse_config("experiment = koopman\nlambda = 1e-2, 1\nm = 4\nn = 40\nclosure_grid = 9\n");
  const auto ok = run_experiment(k);
  CHECK(ok.tables.at("koopman_sweep.csv").header ==
        std::vector<std::string>{"lambda_R", "train_rmse", "val_rmse", "frob_R"});
  CHECK(ok.tables.at("koopman_sweep.csv").rows.size() == 2);

  auto c = parse_config("experiment = control\nlambda = 1\nm = 4\nn = 40\nclosure_grid = 9\n"
                        "initial_states = 2\nhorizon = 1\n");
  const auto oc = run_experiment(c);
  const auto& seeds = oc.summary.at("seeds");
  CHECK(seeds.contains("data"));
  CHECK(seeds.contains("theta_samples"));
  CHECK(seeds.contains("initial_states"));
  CHECK(oc.files.count("control/truth_x1.csv") == 1);
  CHECK(oc.files.count("control/lambda0_x1.csv") == 1);
  CHECK(oc.tables.at("control_summary.csv").rows.size() == 2);
}

TEST_CASE("exit codes") {
  std::ostringstream log;
  ExperimentConfig bad;
  bad.n = -3;
  CHECK(run(bad, log) == 2);

  const auto blocker = scratch("blocker");
  csv::write_file(blocker.string(), "not a directory");
  ExperimentConfig io;
  io.output_dir = (blocker / "sub").string();
  CHECK(run(io, log) == 4);
  fs::remove(blocker);
}

TEST_CASE("parallel_for propagates failures") {
  std::vector<int> hits(10, 0);
  parallel_for(10, [&](std::size_t i) { hits[i] = static_cast<int>(i); });
  for (int i = 0; i < 10; ++i) CHECK(hits[i] == i);
  CHECK_THROWS_AS(parallel_for(5, [](std::size_t i) { if (i == 3) throw DomainError("boom"); }), DomainError);
}
