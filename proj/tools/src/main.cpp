#include "densefactor/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

std::string quoted(std::string s) {
  for (auto& ch : s) {
    if (ch == '"' || ch == '\n') ch = '\'';
  }
  return '"' + s + '"';
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = densefactor::cli;
  CLI::App app{"densefactor: dense factorization inference experiments"};
  app.set_version_flag("--version", cli::kArtifactVersion);

  std::string command;
  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("command", command, "generate|run-rbp|run-gamp|run-se|solve-eos|phase-diagram|compare");
  app.add_option("--config", config_path, "config file of 'section.key = value' lines");
  app.add_option("--set", sets, "generic override section.key=value (repeatable)");

  // flag -> config key; values are validated by the config parser so errors name the key
  const std::vector<std::pair<std::string, std::string>> flag_keys = {
      {"--jobs", "run.jobs"},          {"--seed", "run.seed"},
      {"--out", "run.out"},            {"--instances", "run.instances"},
      {"--alpha", "model.alpha"},      {"--lambda", "model.lambda"},
      {"--N", "model.N"},              {"--M", "model.M"},
      {"--p", "model.p"},              {"--delta", "model.delta"},
      {"--prior", "model.prior"},      {"--channel", "model.channel"},
      {"--spreading", "model.spreading"}, {"--scheme", "algorithm.scheme"},
      {"--damping", "algorithm.damping"}, {"--max-t", "algorithm.max_t"},
      {"--tol", "algorithm.conv_tol"},
  };
  std::map<std::string, std::string> flag_values;
  std::vector<std::pair<CLI::Option*, std::string>> flag_options;
  for (const auto& [flag, key] : flag_keys) {
    flag_options.emplace_back(app.add_option(flag, flag_values[flag], "overrides " + key), key);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw cli::ConfigError(s, "--set expects section.key=value");
      overrides.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [opt, key] : flag_options) {
      if (opt->count() > 0) overrides.emplace_back(key, opt->as<std::string>());
    }
    if (!command.empty()) overrides.emplace_back("command", command);
    bool has_out = false;
    for (const auto& [key, value] : overrides) has_out = has_out || key == "run.out";

    std::optional<std::filesystem::path> path;
    if (!config_path.empty()) path = config_path;
    cli::ExperimentConfig cfg = cli::parse_config(path, overrides);
    if (!has_out && cfg.out.empty() && std::getenv("DENSEFACTOR_OUT") == nullptr) cfg.out = ".";

    const cli::Artifacts art = cli::run_experiment(cfg);
    std::cout << cli::emit_report(art);
    return 0;
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: type=config key=" << e.key() << " message=" << quoted(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: type=runtime message=" << quoted(e.what()) << '\n';
    return 1;
  }
}
