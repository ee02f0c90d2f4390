#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "luders/dynamics.hpp"
#include "luders/error.hpp"
#include "luders/io.hpp"

namespace luders {

enum class Operation { Dynamics, Simulate, Reconstruct, Compare, Bootstrap, TpTest };

std::string to_string(Operation op);

/// One named parameter set. Frequencies in rad/s.
struct PipelineRow {
  std::string name;
  double omega = 0.0;
  double omega_uncertainty = 0.0;
  /// Overrides the g0 computed from the dynamics.
  std::optional<Complex> g0;
  /// Load this dataset instead of simulating one.
  std::optional<std::string> dataset;
};

struct PipelineConfig {
  ExperimentParams params;
  std::vector<PipelineRow> rows;
  std::string output_dir = "luders-out";
  std::set<Operation> operations;
  double prep_depolarization = 0.0;
  std::size_t mc_samples = 1000;
  int bootstrap_resamples = 200;
  int tp_dof = 9;
  G0Model g0_model = G0Model::Adiabatic;
  std::size_t trajectory_samples = 200;
};

/// Defaults: Gamma = 2pi x 21.65 MHz, rows a-d (Omega = 2pi x {1.3, 1.9, 3.2, 15.2}
/// MHz with their uncertainties) and every operation.
PipelineConfig default_config();

/// Parses a JSON config on top of default_config(). Frequencies are given in
/// MHz (ordinary frequency; 2pi applied here). Unknown keys, bad values and
/// missing dataset files raise ConfigError. Relative dataset paths are
/// resolved against `base_dir`.
PipelineConfig parse_config(const Json& j, const std::string& base_dir = "");
/// parse_config on a file; relative paths resolve against its directory.
PipelineConfig load_config(const std::string& path);

/// Command-line overrides, applied after the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  std::optional<std::string> row;
  std::optional<int> shots;
};

/// Applies overrides; --row keeps only the named row (ConfigError if absent).
void apply_overrides(PipelineConfig& config, const Overrides& overrides);

/// Throws ConfigError unless the config is runnable.
void validate(const PipelineConfig& config);

/// The coherence factor used for a row's model channel.
Complex row_g0(const PipelineConfig& config, const PipelineRow& row);

/// Reconstruction report: {"chi", "residual", "tp_deviation",
/// "fidelity_vs_model", "significance_sigma", ...}.
Json reconstruction_report(const ReconstructionResult& result, std::optional<double> fidelity,
                           std::optional<LikelihoodRatioTest> test);

struct PipelineOutcome {
  Json report;
  int exit_code;  // 0, or the code of the first failing row
};

/// Runs the requested operations for every row (rows concurrently) and
/// writes row-scoped files under output_dir plus output_dir/report.json.
/// Prerequisites are implied: data-consuming operations simulate (or load)
/// first, compare reconstructs first.
PipelineOutcome run_pipeline(const PipelineConfig& config);

/// Exit code for an error: 2 config, 4 I/O or data file, 3 numerical.
int exit_code_for(ErrorCode code);

}  // namespace luders
