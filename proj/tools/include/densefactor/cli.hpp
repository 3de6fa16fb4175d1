#pragma once

#include "densefactor/mp_engine.hpp"
#include "densefactor/replica.hpp"
#include "densefactor/state_evolution.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace densefactor::cli {

inline constexpr const char* kArtifactVersion = "densefactor-0.1.0";

// Raised for unknown keys, malformed values and range violations; key() names the offending entry.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class Command { Generate, RunRbp, RunGamp, RunSe, SolveEos, PhaseDiagram, Compare };

std::string to_string(Command c);
Command parse_command(const std::string& s);

struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;
  std::vector<double> values() const;
};

struct ExperimentConfig {
  Command command = Command::RunSe;

  // model
  Prior prior = Prior::Ising;
  std::string channel = "additive";
  double delta = 1.0;
  int p = 2;
  std::vector<SpeciesParam> species;  // empty: single species (p, alpha)
  double alpha = 1.6;
  double lambda = 2.0;
  int N = 1000;
  int M = 100;
  std::string spreading = "auto";

  // algorithm
  std::string scheme = "informative";
  double a = 0.01;
  double damping = 0.0;  // <= 0 selects the algorithm default
  int max_t = 200;
  double conv_tol = 1e-7;
  bool corrected = false;
  Algorithm compare_algorithm = Algorithm::GAMP;

  // state evolution start; unset fields follow the scheme target
  std::optional<double> se_m0, se_q0, se_Q0;

  // grids for phase-diagram and solve-eos
  GridSpec alpha_grid{1.0, 3.0, 21};
  GridSpec lambda_grid{0.2, 3.0, 29};
  int quad_nodes = 0;  // 0 keeps the library default

  // replication and output
  int instances = 1;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out;

  std::vector<SpeciesParam> species_list() const;
  Channel make_channel() const;
  Spreading make_spreading() const;
  InitScheme make_scheme() const;
  ModelFamily make_family() const;
  SEModel make_se_model() const;
  MpOptions make_mp_options(Algorithm algorithm, std::uint64_t init_seed) const;
  double effective_damping(Algorithm algorithm) const;

  // Flattened "section.key" -> value view used for metadata preambles.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

// Every key accepted by the config file and by --set.
const std::vector<std::string>& known_keys();

// Applies one "section.key = value" assignment, validating the value.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Cross-field checks run after all settings are applied.
void validate(const ExperimentConfig& cfg);

/**
 * Reads a config file (may be empty) and then applies overrides in order.
 * Lines are "section.key = value"; '#' starts a comment.
 */
ExperimentConfig parse_config(const std::optional<std::filesystem::path>& path,
                              const std::vector<std::pair<std::string, std::string>>& overrides);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides);

struct AveragedRecord {
  int t = 0;
  double m = 0.0, q = 0.0, Q = 0.0, D = 0.0, mse_in = 0.0, mse_out = 0.0;
  int count = 0;
};

// Arithmetic mean per step over the trajectories that reached that step.
std::vector<AveragedRecord> average_trajectories(const std::vector<Trajectory>& runs);

struct CompareRow {
  int t = 0;
  AveragedRecord amp;
  double m_se = 0.0, q_se = 0.0, Q_se = 0.0;
  double dev_m = 0.0, dev_q = 0.0, dev_Q = 0.0;
};

struct EosRow {
  double alpha = 0.0;
  double lambda = 0.0;
  EosBranches branches;
};

struct Artifacts {
  Command command = Command::RunSe;
  std::vector<Trajectory> runs;  // per instance, or a single SE run
  std::vector<AveragedRecord> averaged;
  std::optional<Trajectory> se;
  std::vector<CompareRow> compare;
  std::vector<EosRow> eos;
  std::optional<PhaseDiagram> diagram;
  std::vector<std::filesystem::path> files;
};

// Maximum |m_amp - m_se| over the joined rows and the step where it occurs.
std::pair<double, int> max_deviation(const std::vector<CompareRow>& rows);

// Runs the experiment; writes artifacts when cfg.out (or DENSEFACTOR_OUT) is non-empty.
Artifacts run_experiment(const ExperimentConfig& cfg);

std::string emit_report(const Artifacts& artifacts);

// Trajectories for n instances, seeds base_seed + k, run on up to jobs threads.
std::vector<Trajectory> run_instances(const ExperimentConfig& cfg, Algorithm algorithm);

std::vector<CompareRow> join_compare(const std::vector<AveragedRecord>& amp, const Trajectory& se);

}  // namespace densefactor::cli
