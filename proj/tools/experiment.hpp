#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "dqap/ansatz.hpp"
#include "dqap/circuit.hpp"
#include "dqap/model.hpp"

namespace dqap::cli {

inline constexpr const char* kToolVersion = "1.0.0";

enum class Experiment {
  EnergyScan,
  EntropyScan,
  EntropyFit,
  MutualInfo,
  PolarizationScan,
  MstarScan,
  ParamDump,
  EmitCircuit,
  Verify,
  HadamardEmulate,
};

const char* to_string(Experiment e);
Experiment experiment_from_string(const std::string& text);

enum class OutputFormat { Csv, Json };

enum class HeatmapMode { PerDepth, Truncated };

struct ExperimentConfig {
  Experiment experiment = Experiment::EnergyScan;
  double v = 1.0;
  double w = 1.1;
  std::vector<int> L;  // empty: experiment default
  std::optional<Boundary> bc;  // empty: APBC for L = 0 mod 4, PBC otherwise
  std::vector<int> M;  // empty: experiment default
  std::uint64_t seed = 0;
  int shots = 500;
  std::map<int, int> shots_by_depth;
  int workers = 0;  // 0: all hardware threads
  std::string out;  // empty: stdout
  OutputFormat format = OutputFormat::Csv;
  OptimizerConfig optimizer;

  HeatmapMode heatmap_mode = HeatmapMode::PerDepth;
  int schedule_depth = 0;  // truncated heatmaps: depth the schedule is optimized for
  MeasurementBasis basis = MeasurementBasis::X;
  bool lower = true;  // emit-circuit: write the native-gate circuit
  int trials = 20;  // verify: random schedules per L
  std::string schedules_file;

  void validate() const;
};

// "a..b", "a:b", "a,b,c" or a single integer.
std::vector<int> parse_int_list(const std::string& text);

// Applies the keys present in `j` on top of `cfg`.
void apply_json(ExperimentConfig& cfg, const nlohmann::json& j);

// Canonical echo; excludes settings that cannot change the output (workers).
nlohmann::ordered_json config_echo(const ExperimentConfig& cfg);

struct RunOutcome {
  std::string artifact;  // bytes written to the output
  int exit_code = 0;
};

// Runs one experiment and returns the artifact without touching the output
// path. Checkpoints go next to `cfg.out` when it is set.
RunOutcome execute(const ExperimentConfig& cfg);

// execute() plus an atomic write to cfg.out (or stdout).
int run(const ExperimentConfig& cfg);

// Writes `bytes` to a temporary sibling of `path` and renames it into place.
void write_atomically(const std::string& path, const std::string& bytes);

}  // namespace dqap::cli
