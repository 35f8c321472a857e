// Command-line front end for the experiment pipelines.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "hybridkernel/csv.hpp"
#include "hybridkernel/errors.hpp"
#include "hybridkernel/experiments.hpp"

namespace ex = hybridkernel::experiments;

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Flags& f) {
  const auto record = [&f](const std::string& key) {
    return [&f, key](const std::string& v) { f.overrides.emplace_back(key, v); };
  };
  sub->add_option("--config", f.config_path, "flat key = value config file");
  sub->add_option_function<std::string>("--seed", record("seed"), "base seed");
  sub->add_option_function<std::string>("--out", record("out"), "output directory");
  sub->add_option_function<std::string>("--lambda", record("lambda"),
                                        "comma-separated regularization grid");
  sub->add_option_function<std::string>("--m", record("m"), "comma-separated parameter-sample counts");
  sub->add_option_function<std::string>("--n", record("n"), "data size");
  sub->add_option("--set", f.sets, "extra key=value override (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid kernel model experiments"};
  app.set_version_flag("--version", std::string(ex::kVersion));
  app.require_subcommand(1);

  Flags flags;
  const char* names[] = {"vle-data", "setting1", "setting2", "setting3", "koopman", "control"};
  for (const char* name : names) add_common(app.add_subcommand(name, std::string("run ") + name), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::vector<std::pair<std::string, std::string>> overrides;
  overrides.emplace_back("experiment", app.get_subcommands().front()->get_name());
  for (const auto& s : flags.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::cerr << "config error: --set expects key=value, got '" << s << "'\n";
      return 2;
    }
    flags.overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  overrides.insert(overrides.end(), flags.overrides.begin(), flags.overrides.end());

  ex::ExperimentConfig config;
  try {
    const std::string text =
        flags.config_path.empty() ? std::string() : hybridkernel::csv::read_file(flags.config_path);
    config = ex::parse_config(text, overrides);
  } catch (const hybridkernel::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const hybridkernel::IoError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  return ex::run(config, std::cerr);
}
