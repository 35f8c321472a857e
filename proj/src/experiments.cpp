#include "hybridkernel/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "hybridkernel/clf_control.hpp"
#include "hybridkernel/errors.hpp"
#include "hybridkernel/hybrid_static.hpp"
#include "hybridkernel/json_util.hpp"
#include "hybridkernel/koopman.hpp"
#include "hybridkernel/thermo_vle.hpp"

namespace hybridkernel::experiments {

namespace {

const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> names{
      {"vle-data", Experiment::VleData}, {"setting1", Experiment::Setting1},
      {"setting2", Experiment::Setting2}, {"setting3", Experiment::Setting3},
      {"koopman", Experiment::Koopman},   {"control", Experiment::Control}};
  return names;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(value);
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': cannot parse number '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto s = trim(text);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "': cannot parse integer '" + text + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const auto v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("config key '" + key + "': integer out of range");
  }
  return static_cast<int>(v);
}

void require_config(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [name, value] : experiment_names()) {
    if (value == e) return name;
  }
  return "unknown";
}

Experiment experiment_from_string(const std::string& name) {
  const auto it = experiment_names().find(name);
  if (it == experiment_names().end()) {
    throw ConfigError("config key 'experiment': unknown experiment '" + name + "'");
  }
  return it->second;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (points < 1 || !(lo > 0.0) || !(hi >= lo)) throw DomainError("log_grid: bad range");
  if (points == 1) return {lo};
  std::vector<double> out;
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < points; ++k) {
    out.push_back(std::pow(10.0, a + (b - a) * k / (points - 1)));
  }
  return out;
}

std::vector<double> ExperimentConfig::effective_lambda_grid() const {
  if (!lambda_grid.empty()) return lambda_grid;
  switch (experiment) {
    case Experiment::Koopman:
    case Experiment::Control:
      return log_grid(1e-4, 1e2, 7);
    default:
      return log_grid(1e-3, 1e2, 13);
  }
}

std::vector<int> ExperimentConfig::effective_m() const {
  if (!m.empty()) return m;
  if (experiment == Experiment::Setting3) return {25, 50, 100};
  return {25};
}

int ExperimentConfig::effective_n() const {
  if (n > 0) return n;
  return (experiment == Experiment::Koopman || experiment == Experiment::Control) ? 200 : 50;
}

void ExperimentConfig::validate() const {
  for (double l : effective_lambda_grid()) {
    require_config(l > 0.0 && std::isfinite(l), "lambda", "grid entries must be positive");
  }
  for (int mm : effective_m()) require_config(mm >= 1, "m", "must be >= 1");
  require_config(n >= 0, "n", "must be >= 1");
  require_config(!output_dir.empty(), "out", "must not be empty");
  require_config(pressure > 0.0, "pressure", "must be positive");
  require_config(alpha > 0.0, "alpha", "must be positive");
  require_config(gamma > 0.0, "gamma", "must be positive");
  require_config(gamma_theta > 0.0, "gamma_theta", "must be positive");
  require_config(lambda_theta > 0.0, "lambda_theta", "must be positive");
  require_config(lambda_omega >= 0.0, "lambda_omega", "must be >= 0");
  require_config(lambda_b >= 0.0, "lambda_b", "must be >= 0");
  require_config(q >= 1, "q", "must be >= 1");
  require_config(closure_grid >= 2 && closure_grid * closure_grid >= 2 * q + 1, "closure_grid",
                 "lattice too small for the basis");
  require_config(dt > 0.0, "dt", "must be positive");
  require_config(horizon >= dt, "horizon", "must be >= dt");
  require_config(initial_states >= 1, "initial_states", "must be >= 1");
  require_config(control_bound > 0.0, "control_bound", "must be positive");
  if (experiment == Experiment::Koopman || experiment == Experiment::Control) {
    require_config(effective_n() >= 2 * q, "n", "need at least 2q states for the dynamic fits");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"experiment", to_string(experiment)},
          {"seed", seed},
          {"lambda", effective_lambda_grid()},
          {"m", effective_m()},
          {"n", effective_n()},
          {"out", output_dir},
          {"pressure", pressure},
          {"alpha", alpha},
          {"gamma", gamma},
          {"gamma_theta", gamma_theta},
          {"lambda_theta", lambda_theta},
          {"lambda_omega", lambda_omega},
          {"lambda_b", lambda_b},
          {"gibbs_target", gibbs_target == GibbsTarget::Mixing ? "mixing" : "excess"},
          {"q", q},
          {"closure_grid", closure_grid},
          {"dt", dt},
          {"horizon", horizon},
          {"initial_states", initial_states},
          {"control_bound", control_bound}};
}

void apply_setting(ExperimentConfig& c, const std::string& raw_key, const std::string& value) {
  const std::string key = trim(raw_key);
  if (key == "experiment") {
    c.experiment = experiment_from_string(trim(value));
  } else if (key == "seed") {
    const auto v = parse_integer(key, value);
    require_config(v >= 0, key, "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(v);
  } else if (key == "lambda" || key == "lambda_grid") {
    c.lambda_grid.clear();
    for (const auto& part : split_list(value)) c.lambda_grid.push_back(parse_double(key, part));
    require_config(!c.lambda_grid.empty(), key, "grid must be nonempty");
  } else if (key == "m") {
    c.m.clear();
    for (const auto& part : split_list(value)) c.m.push_back(parse_int(key, part));
    require_config(!c.m.empty(), key, "must be nonempty");
  } else if (key == "n") {
    c.n = parse_int(key, value);
    require_config(c.n >= 1, key, "must be >= 1");
  } else if (key == "out" || key == "output_dir") {
    c.output_dir = trim(value);
  } else if (key == "pressure") {
    c.pressure = parse_double(key, value);
  } else if (key == "alpha") {
    c.alpha = parse_double(key, value);
  } else if (key == "gamma") {
    c.gamma = parse_double(key, value);
  } else if (key == "gamma_theta") {
    c.gamma_theta = parse_double(key, value);
  } else if (key == "lambda_theta") {
    c.lambda_theta = parse_double(key, value);
  } else if (key == "lambda_omega") {
    c.lambda_omega = parse_double(key, value);
  } else if (key == "lambda_b") {
    c.lambda_b = parse_double(key, value);
  } else if (key == "gibbs_target") {
    const auto v = trim(value);
    if (v == "mixing") {
      c.gibbs_target = GibbsTarget::Mixing;
    } else if (v == "excess") {
      c.gibbs_target = GibbsTarget::Excess;
    } else {
      throw ConfigError("config key 'gibbs_target': expected 'mixing' or 'excess'");
    }
  } else if (key == "q") {
    c.q = parse_int(key, value);
  } else if (key == "closure_grid") {
    c.closure_grid = parse_int(key, value);
  } else if (key == "dt") {
    c.dt = parse_double(key, value);
  } else if (key == "horizon") {
    c.horizon = parse_double(key, value);
  } else if (key == "initial_states") {
    c.initial_states = parse_int(key, value);
  } else if (key == "control_bound") {
    c.control_bound = parse_double(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

ExperimentConfig parse_config(const std::string& file_text,
                              const std::vector<std::pair<std::string, std::string>>& overrides) {
  ExperimentConfig c;
  std::istringstream in(file_text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_setting(c, line.substr(0, eq), line.substr(eq + 1));
  }
  for (const auto& [k, v] : overrides) apply_setting(c, k, v);
  c.validate();
  return c;
}

unsigned worker_count() {
  if (const char* env = std::getenv("HYBRIDKERNEL_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(worker_count(), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

using vle::VlePoint;

struct VleData {
  vle::BinarySystem sys = vle::ethanol_toluene();
  std::vector<VlePoint> train;
  std::vector<VlePoint> validation;
};

VleData make_vle_data(const ExperimentConfig& c) {
  VleData d;
  d.train = vle::generate_vle_dataset(d.sys, c.effective_n(), c.pressure, c.data_seed());
  d.validation = vle::generate_vle_dataset(d.sys, c.effective_n(), c.pressure, c.validation_seed());
  return d;
}

double ideal_mixing(double x) { return x * std::log(x) + (1.0 - x) * std::log(1.0 - x); }

double gibbs_target(const ExperimentConfig& c, const vle::BinarySystem& sys, const VlePoint& pt) {
  return c.gibbs_target == GibbsTarget::Mixing ? vle::mixing_gibbs_from_txy(sys, pt, c.pressure)
                                               : vle::excess_gibbs_from_txy(sys, pt, c.pressure);
}

Dataset xy_dataset(const std::vector<VlePoint>& pts) {
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return Dataset::from_scalars(xs, ys);
}

Dataset gibbs_dataset(const ExperimentConfig& c, const vle::BinarySystem& sys,
                      const std::vector<VlePoint>& pts) {
  std::vector<double> xs, ys;
  for (const auto& p : pts) {
    xs.push_back(p.x);
    ys.push_back(gibbs_target(c, sys, p));
  }
  return Dataset::from_scalars(xs, ys);
}

csv::Table vle_table(const vle::BinarySystem& sys, const std::vector<VlePoint>& pts, double p) {
  csv::Table t;
  t.header = {"x", "y", "T", "gex_rt"};
  for (const auto& pt : pts) t.add_row({pt.x, pt.y, pt.t, vle::excess_gibbs_from_txy(sys, pt, p)});
  return t;
}

void add_vle_artifacts(const ExperimentConfig& c, const VleData& d, ExperimentOutput& out) {
  out.tables["vle_train.csv"] = vle_table(d.sys, d.train, c.pressure);
  out.tables["vle_validation.csv"] = vle_table(d.sys, d.validation, c.pressure);
  out.documents["vle_train.json"] = {
      {"pressure_mmhg", c.pressure}, {"seed", c.data_seed()}, {"n", d.train.size()}};
  out.documents["vle_validation.json"] = {
      {"pressure_mmhg", c.pressure}, {"seed", c.validation_seed()}, {"n", d.validation.size()}};
}

/// Reference temperature shared by the Gibbs-energy reference model and the
/// Wilson family: where the vapor-pressure ratio equals alpha.
double reference_temperature(const ExperimentConfig& c, const vle::BinarySystem& sys) {
  return vle::temperature_for_volatility(sys, c.alpha);
}

ScalarModel gibbs_reference(const ExperimentConfig& c, const vle::BinarySystem& sys) {
  const double t_ref = reference_temperature(c, sys);
  const bool excess = c.gibbs_target == GibbsTarget::Excess;
  return [=](const Vector& x) {
    const double g = vle::rel_volatility_gibbs(sys, c.alpha, x(0), t_ref, c.pressure);
    return excess ? g - ideal_mixing(x(0)) : g;
  };
}

ParametricFamily wilson_family(double t_kelvin) {
  return [t_kelvin](const Vector& x, const Vector& theta) {
    vle::WilsonParams w;
    w.theta1 = theta(0);
    w.theta2 = theta(1);
    return vle::wilson_gex(w, x(0), t_kelvin);
  };
}

FeatureMap margules_map() {
  return [](const Vector& x) { return vle::margules_features(x(0)); };
}

nlohmann::json seeds_json(const ExperimentConfig& c, bool theta, bool initial) {
  nlohmann::json s = {{"data", c.data_seed()}, {"validation", c.validation_seed()}};
  if (theta) s["theta_samples"] = c.theta_seed();
  if (initial) s["initial_states"] = c.initial_state_seed();
  return s;
}

}  // namespace

ExperimentOutput run_vle_data(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto d = make_vle_data(c);
  add_vle_artifacts(c, d, out);
  out.summary["seeds"] = seeds_json(c, false, false);
  return out;
}

ExperimentOutput run_setting1(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto d = make_vle_data(c);
  add_vle_artifacts(c, d, out);
  const Dataset train = xy_dataset(d.train);
  const Dataset val = xy_dataset(d.validation);
  const KernelSpec kernel(c.gamma);
  const double alpha = c.alpha;
  const ScalarModel reference = [alpha](const Vector& x) {
    return vle::rel_volatility_model(alpha, x(0));
  };

  const auto grid = c.effective_lambda_grid();
  std::vector<std::optional<ReferenceKrrModel>> models(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    models[i] = fit_reference_krr(train, "relative_volatility", reference, kernel, grid[i]);
  });

  csv::Table sweep;
  sweep.header = {"lambda", "train_rmse", "val_rmse"};
  auto docs = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sweep.add_row({grid[i], rmse(*models[i], train), rmse(*models[i], val)});
    auto j = to_json(*models[i]);
    j["alpha"] = alpha;
    docs.push_back(std::move(j));
  }
  out.tables["setting1_sweep.csv"] = std::move(sweep);
  out.documents["setting1_models.json"] = std::move(docs);
  out.summary["seeds"] = seeds_json(c, false, false);
  return out;
}

ExperimentOutput run_setting2(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto d = make_vle_data(c);
  add_vle_artifacts(c, d, out);
  const Dataset train = gibbs_dataset(c, d.sys, d.train);
  const Dataset val = gibbs_dataset(c, d.sys, d.validation);
  const KernelSpec kernel(c.gamma);
  const ScalarModel reference = gibbs_reference(c, d.sys);

  const auto grid = c.effective_lambda_grid();
  std::vector<std::optional<ReferenceKrrModel>> ref_models(grid.size());
  std::vector<std::optional<SubspaceModel>> sub_models(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    ref_models[i] = fit_reference_krr(train, "relative_volatility_gibbs", reference, kernel, grid[i]);
    sub_models[i] = fit_subspace(train, "margules", margules_map(), kernel, c.lambda_theta, grid[i]);
  });

  csv::Table ref_sweep;
  ref_sweep.header = {"lambda", "train_rmse", "val_rmse"};
  csv::Table sub_sweep;
  sub_sweep.header = {"lambda", "train_rmse", "val_rmse", "theta_star1", "theta_star2"};
  auto ref_docs = nlohmann::json::array();
  auto sub_docs = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ref_sweep.add_row({grid[i], rmse(*ref_models[i], train), rmse(*ref_models[i], val)});
    const auto& s = *sub_models[i];
    sub_sweep.add_row({grid[i], rmse(s, train), rmse(s, val), s.theta(0), s.theta(1)});
    ref_docs.push_back(to_json(*ref_models[i]));
    sub_docs.push_back(to_json(s));
  }
  out.tables["setting2_reference_sweep.csv"] = std::move(ref_sweep);
  out.tables["setting2_margules_sweep.csv"] = std::move(sub_sweep);
  out.documents["setting2_reference_models.json"] = std::move(ref_docs);
  out.documents["setting2_margules_models.json"] = std::move(sub_docs);
  out.summary["seeds"] = seeds_json(c, false, false);
  out.summary["reference_temperature_c"] = reference_temperature(c, d.sys);
  return out;
}

ExperimentOutput run_setting3(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto d = make_vle_data(c);
  add_vle_artifacts(c, d, out);
  const Dataset train = gibbs_dataset(c, d.sys, d.train);
  const Dataset val = gibbs_dataset(c, d.sys, d.validation);
  const KernelSpec kernel_x(c.gamma);
  const KernelSpec kernel_theta(c.gamma_theta);
  const double t_ref_c = reference_temperature(c, d.sys);
  const ParametricFamily family = wilson_family(t_ref_c + vle::kKelvinOffset);

  const auto grid = c.effective_lambda_grid();
  const auto ms = c.effective_m();

  struct Job {
    std::size_t m_index;
    std::size_t lambda_index;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < ms.size(); ++a) {
    for (std::size_t b = 0; b < grid.size(); ++b) jobs.push_back({a, b});
  }
  std::vector<Matrix> samples;
  for (int m : ms) samples.push_back(koopman::sample_parameters(m, c.theta_seed()));

  std::vector<std::optional<MixtureModel>> fits(jobs.size());
  std::vector<std::optional<SubspaceModel>> margules(grid.size());
  parallel_for(jobs.size() + grid.size(), [&](std::size_t k) {
    if (k < jobs.size()) {
      const auto& job = jobs[k];
      fits[k] = fit_mixture(train, "wilson", family, samples[job.m_index], kernel_x, kernel_theta,
                            c.lambda_omega, grid[job.lambda_index]);
    } else {
      const auto i = k - jobs.size();
      margules[i] = fit_subspace(train, "margules", margules_map(), kernel_x, c.lambda_theta, grid[i]);
    }
  });

  auto unconverged = nlohmann::json::array();
  for (std::size_t a = 0; a < ms.size(); ++a) {
    csv::Table sweep;
    sweep.header = {"lambda", "train_rmse", "val_rmse", "theta_star1", "theta_star2"};
    auto docs = nlohmann::json::array();
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      if (jobs[k].m_index != a) continue;
      const auto& model = *fits[k];
      const Vector ts = effective_parameter(model);
      sweep.add_row({grid[jobs[k].lambda_index], rmse(model, train), rmse(model, val), ts(0), ts(1)});
      docs.push_back(to_json(model));
      if (!model.converged) {
        unconverged.push_back({{"m", ms[a]}, {"lambda", grid[jobs[k].lambda_index]}});
      }
    }
    const auto tag = "setting3_m" + std::to_string(ms[a]);
    out.tables[tag + "_sweep.csv"] = std::move(sweep);
    out.documents[tag + "_models.json"] = std::move(docs);
  }

  csv::Table cmp;
  cmp.header = {"lambda", "wilson_val_rmse", "margules_val_rmse"};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    cmp.add_row({grid[i], rmse(*fits[i], val), rmse(*margules[i], val)});
  }
  out.tables["setting3_wilson_vs_margules.csv"] = std::move(cmp);
  out.summary["seeds"] = seeds_json(c, true, false);
  out.summary["wilson_temperature_c"] = t_ref_c;
  out.summary["unconverged_fits"] = unconverged;
  return out;
}

namespace {

struct KoopmanSetup {
  koopman::MonomialBasis basis;
  koopman::CstrFields fields;
  Matrix thetas;
  koopman::DriftSample train;
  Matrix val_states;
  std::vector<Matrix> drift_closures;
  std::vector<koopman::Closure> input_closures;
};

KoopmanSetup make_koopman_setup(const ExperimentConfig& c) {
  KoopmanSetup s{koopman::MonomialBasis(c.q), koopman::cstr_fields(), {}, {}, {}, {}, {}};
  const int m = c.effective_m().front();
  s.thetas = koopman::sample_parameters(m, c.theta_seed());
  s.train = koopman::make_drift_sample(koopman::sample_states(c.effective_n(), c.data_seed()),
                                       s.fields.drift);
  s.val_states = koopman::sample_states(c.effective_n(), c.validation_seed());
  const Matrix grid = koopman::state_lattice(c.closure_grid);
  s.drift_closures.resize(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), [&](std::size_t j) {
    const Vector theta = s.thetas.row(static_cast<Eigen::Index>(j)).transpose();
    const auto family = s.fields.family;
    s.drift_closures[j] =
        koopman::closure_fit([&](const koopman::State& x) { return family(x, theta); }, s.basis,
                             grid, false)
            .gamma;
  });
  s.input_closures.push_back(koopman::closure_fit(s.fields.input, s.basis, grid, true));
  return s;
}

std::vector<koopman::KoopmanHybridModel> fit_koopman_sweep(const ExperimentConfig& c,
                                                           const KoopmanSetup& s,
                                                           std::vector<koopman::HybridGeneratorFit>* fits_out) {
  const auto grid = c.effective_lambda_grid();
  std::vector<std::optional<koopman::HybridGeneratorFit>> fits(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    fits[i] = koopman::fit_hybrid_generator(s.train, s.fields.family, s.thetas, s.basis,
                                            c.lambda_b, grid[i]);
  });
  std::vector<koopman::KoopmanHybridModel> models;
  for (const auto& f : fits) {
    models.push_back(koopman::assemble_bilinear(f->weights, f->residual, s.drift_closures,
                                                s.input_closures));
    if (fits_out) fits_out->push_back(*f);
  }
  return models;
}

}  // namespace

ExperimentOutput run_koopman(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto s = make_koopman_setup(c);
  std::vector<koopman::HybridGeneratorFit> fits;
  const auto models = fit_koopman_sweep(c, s, &fits);
  const auto grid = c.effective_lambda_grid();

  csv::Table sweep;
  sweep.header = {"lambda_R", "train_rmse", "val_rmse", "frob_R"};
  auto docs = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& model = models[i];
    sweep.add_row({grid[i], koopman::velocity_rmse(model, s.basis, s.train.states, s.fields.drift),
                   koopman::velocity_rmse(model, s.basis, s.val_states, s.fields.drift),
                   model.residual.norm()});
    auto j = koopman::to_json(model, s.thetas);
    j["lambda_R"] = grid[i];
    j["lambda_b"] = c.lambda_b;
    j["objective"] = fits[i].objective;
    j["kkt_residual"] = fits[i].kkt_residual;
    j["converged"] = fits[i].converged;
    j["seeds"] = seeds_json(c, true, false);
    docs.push_back(std::move(j));
  }
  out.tables["koopman_sweep.csv"] = std::move(sweep);
  out.documents["koopman_models.json"] = std::move(docs);

  // Black-box baseline on the same basis.
  const Matrix a = koopman::gedmd(s.train, s.basis);
  const auto baseline = koopman::assemble_bilinear(Vector::Zero(0), a, {}, s.input_closures);
  out.documents["koopman_gedmd.json"] = {
      {"generator", json_util::matrix_json(a)},
      {"train_rmse", koopman::velocity_rmse(baseline, s.basis, s.train.states, s.fields.drift)},
      {"val_rmse", koopman::velocity_rmse(baseline, s.basis, s.val_states, s.fields.drift)}};
  out.summary["seeds"] = seeds_json(c, true, false);
  out.summary["input_closure_max_residual"] = s.input_closures.front().max_residual;
  return out;
}

ExperimentOutput run_control(const ExperimentConfig& c) {
  ExperimentOutput out;
  const auto s = make_koopman_setup(c);
  const auto models = fit_koopman_sweep(c, s, nullptr);
  const auto grid = c.effective_lambda_grid();
  const Matrix x0s = koopman::sample_states(c.initial_states, c.initial_state_seed());
  const auto& basis = s.basis;
  const auto& fields = s.fields;
  const double bound = c.control_bound;

  const control::Dynamics plant = [&](const koopman::State& x, double u) {
    return koopman::State(fields.drift(x) + u * fields.input(x));
  };
  const control::Controller truth_controller = [&](const koopman::State& x) {
    const auto r = control::clf_rates(basis, fields.drift, fields.input, x);
    return control::lin_sontag(r.a, r.b, bound);
  };

  const auto n0 = static_cast<std::size_t>(x0s.rows());
  std::vector<control::Trajectory> truth(n0);
  std::vector<control::Trajectory> hybrid(n0 * grid.size());
  parallel_for(n0 * (grid.size() + 1), [&](std::size_t k) {
    const auto i = k % n0;
    const koopman::State x0 = x0s.row(static_cast<Eigen::Index>(i)).transpose();
    if (k < n0) {
      truth[i] = control::simulate(plant, truth_controller, x0, c.dt, c.horizon);
      return;
    }
    const auto li = k / n0 - 1;
    const auto& model = models[li];
    const control::Controller ctrl = [&](const koopman::State& x) {
      const auto r = control::clf_rates(model, basis, x);
      return control::lin_sontag(r.a, r.b, bound);
    };
    hybrid[li * n0 + i] = control::simulate(plant, ctrl, x0, c.dt, c.horizon);
  });

  csv::Table summary;
  summary.header = {"lambda_R", "initial_state", "max_deviation", "truth_max_dV", "hybrid_max_dV"};
  for (std::size_t i = 0; i < n0; ++i) {
    out.files["control/truth_x" + std::to_string(i) + ".csv"] = control::trajectory_csv(truth[i]);
  }
  auto per_lambda = nlohmann::json::array();
  for (std::size_t li = 0; li < grid.size(); ++li) {
    double worst = 0.0;
    for (std::size_t i = 0; i < n0; ++i) {
      const auto& h = hybrid[li * n0 + i];
      const double dev = control::compare_trajectories(truth[i], h);
      worst = std::max(worst, dev);
      summary.add_row({grid[li], static_cast<double>(i), dev,
                       control::max_clf_increase(basis, truth[i]),
                       control::max_clf_increase(basis, h)});
      out.files["control/lambda" + std::to_string(li) + "_x" + std::to_string(i) + ".csv"] =
          control::trajectory_csv(h);
    }
    per_lambda.push_back({{"lambda_R", grid[li]},
                          {"max_deviation", worst},
                          {"frob_R", models[li].residual.norm()}});
  }
  out.tables["control_summary.csv"] = std::move(summary);
  out.documents["control_summary.json"] = {{"initial_states", json_util::matrix_json(x0s)},
                                           {"dt", c.dt},
                                           {"horizon", c.horizon},
                                           {"control_bound", bound},
                                           {"per_lambda", per_lambda}};
  out.summary["seeds"] = seeds_json(c, true, true);
  return out;
}

ExperimentOutput run_experiment(const ExperimentConfig& c) {
  c.validate();
  switch (c.experiment) {
    case Experiment::VleData: return run_vle_data(c);
    case Experiment::Setting1: return run_setting1(c);
    case Experiment::Setting2: return run_setting2(c);
    case Experiment::Setting3: return run_setting3(c);
    case Experiment::Koopman: return run_koopman(c);
    case Experiment::Control: return run_control(c);
  }
  throw ConfigError("unknown experiment");
}

std::vector<std::string> write_output(const ExperimentConfig& c, const ExperimentOutput& out) {
  namespace fs = std::filesystem;
  const fs::path root(c.output_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create output directory '" + c.output_dir + "': " + ec.message());

  std::vector<std::string> written;
  nlohmann::json files = nlohmann::json::object();
  const auto put = [&](const std::string& rel, const std::string& contents) {
    const fs::path p = root / rel;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw IoError("cannot create directory for '" + rel + "'");
    csv::write_file(p.string(), contents);
    written.push_back(rel);
  };
  for (const auto& [name, table] : out.tables) {
    put(name, table.to_string());
    files[name] = {{"rows", table.rows.size()}};
  }
  for (const auto& [name, doc] : out.documents) {
    put(name, doc.dump(2) + "\n");
    files[name] = nlohmann::json::object();
  }
  for (const auto& [name, text] : out.files) {
    put(name, text);
    files[name] = nlohmann::json::object();
  }
  const nlohmann::json manifest = {{"tool", "hybridkernel"},
                                   {"version", kVersion},
                                   {"config", c.to_json()},
                                   {"summary", out.summary},
                                   {"files", files}};
  put("manifest.json", manifest.dump(2) + "\n");
  return written;
}

int run(const ExperimentConfig& config, std::ostream& log) {
  try {
    const auto out = run_experiment(config);
    const auto written = write_output(config, out);
    log << to_string(config.experiment) << ": wrote " << written.size() << " files to "
        << config.output_dir << "\n";
    return 0;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    log << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    log << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace hybridkernel::experiments
