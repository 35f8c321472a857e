#pragma once
// Deterministic experiment pipelines behind the command-line runner. Each
// pipeline returns its tables and JSON documents in memory; write_output
// persists them together with a manifest.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridkernel/csv.hpp"

namespace hybridkernel::experiments {

inline constexpr const char* kVersion = "1.0.0";

enum class Experiment { VleData, Setting1, Setting2, Setting3, Koopman, Control };

std::string to_string(Experiment e);
/// Throws ConfigError for unknown names.
Experiment experiment_from_string(const std::string& name);

/// Which Gibbs-energy quantity the settings II/III regress on.
enum class GibbsTarget {
  /// x ln(P y / P1sat) + (1-x) ln(P (1-y) / P2sat)
  Mixing,
  /// The excess Gibbs energy proper (mixing form minus the ideal term).
  Excess,
};

struct ExperimentConfig {
  Experiment experiment = Experiment::VleData;
  std::uint64_t seed = 1;
  /// Empty selects the per-experiment default grid.
  std::vector<double> lambda_grid;
  /// Empty selects {25, 50, 100} for setting3 and {25} for koopman/control.
  std::vector<int> m;
  /// 0 selects 50 for the static experiments and 200 for the dynamic ones.
  int n = 0;
  std::string output_dir = "out";

  double pressure = 760.0;
  double alpha = 2.973;
  double gamma = 100.0;
  double gamma_theta = 10.0;
  double lambda_theta = 1e-6;
  double lambda_omega = 0.0;
  double lambda_b = 1e-8;
  GibbsTarget gibbs_target = GibbsTarget::Mixing;
  int q = 3;
  int closure_grid = 33;
  double dt = 0.01;
  double horizon = 10.0;
  int initial_states = 5;
  double control_bound = 1.0;

  std::vector<double> effective_lambda_grid() const;
  std::vector<int> effective_m() const;
  int effective_n() const;

  /// Seeds consumed by the pipelines, derived from `seed`.
  std::uint64_t data_seed() const { return seed; }
  std::uint64_t validation_seed() const { return seed + 1; }
  std::uint64_t theta_seed() const { return seed + 2; }
  std::uint64_t initial_state_seed() const { return seed + 3; }

  /// Throws ConfigError on empty grids, nonpositive sizes and similar.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Sets one key; throws ConfigError naming the key if unknown or malformed.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Parses a flat `key = value` file (blank lines and `#` comments ignored),
/// then applies `overrides` in order.
ExperimentConfig parse_config(const std::string& file_text,
                              const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Logarithmically spaced grid, both ends included.
std::vector<double> log_grid(double lo, double hi, int points);

struct ExperimentOutput {
  std::map<std::string, csv::Table> tables;
  std::map<std::string, nlohmann::json> documents;
  /// Plain-text artifacts (e.g. trajectories) keyed by relative path.
  std::map<std::string, std::string> files;
  nlohmann::json summary = nlohmann::json::object();
};

ExperimentOutput run_vle_data(const ExperimentConfig& config);
ExperimentOutput run_setting1(const ExperimentConfig& config);
ExperimentOutput run_setting2(const ExperimentConfig& config);
ExperimentOutput run_setting3(const ExperimentConfig& config);
ExperimentOutput run_koopman(const ExperimentConfig& config);
ExperimentOutput run_control(const ExperimentConfig& config);

ExperimentOutput run_experiment(const ExperimentConfig& config);

/// Writes every artifact plus `manifest.json` under config.output_dir.
/// Returns the relative paths written.
std::vector<std::string> write_output(const ExperimentConfig& config, const ExperimentOutput& out);

/// Runs and writes; maps failures to exit codes (0 ok, 2 config, 3
/// numerical, 4 I/O) and reports them on `log`.
int run(const ExperimentConfig& config, std::ostream& log);

/// Worker count from HYBRIDKERNEL_THREADS (default: hardware concurrency).
unsigned worker_count();

/// Calls fn(i) for i in [0, count) on a bounded pool; rethrows the first
/// failure by index.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace hybridkernel::experiments
