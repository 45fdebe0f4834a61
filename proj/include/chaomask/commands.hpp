#pragma once

// Subcommand implementations behind the `chaomask` executable. Each returns
// a JSON report and the process exit code (0 ok, 1 computation failure);
// input problems surface as InputError and map to exit code 2.

#include <optional>
#include <string>

#include <json.hpp>

#include "chaomask/scenario.hpp"

namespace chaomask {

struct CommandResult {
    nlohmann::json report;
    int exit_code = 0;
};

/// "1,2;3,4" -> [[1, 2], [3, 4]]. Throws ConfigError.
Matrix parse_matrix_arg(const std::string& text);

/// JSON form {"rows", "cols", "data"} used by scenario and gain files.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& what);

// --- experiments shared by simulate, reproduce-paper and the acceptance suite --

struct Experiment {
    RunKind kind = RunKind::None;
    bool masked = true;
    double nu = 0.0;
    Scenario scenario;
    SimTrace trace;
    SimTrace clean; ///< attack-free run of the same scenario
};

/// Builds the run, calibrates the threshold on its attack-free variant
/// (unless `nu` is given) and simulates both.
Experiment run_experiment(const Study& study, const ObserverGain* gain, bool masked, RunKind kind,
                          std::optional<double> fdi_M = std::nullopt, std::optional<double> nu = std::nullopt);

/// Metrics for one experiment; every number is recomputable from the traces.
nlohmann::json summarize(const Study& study, const Experiment& e);

// --- subcommands ------------------------------------------------------------

struct DistanceOptions {
    std::string scenario;
    std::string A, C; ///< matrix mode instead of a scenario
    bool unscaled = false;
    std::optional<double> beta;
    std::optional<double> w_max;
    int n_grid = kDefaultFrequencyGrid;
    std::string profile_out;
};
CommandResult cmd_distance(const DistanceOptions& o);

struct SynthesizeOptions {
    std::string scenario;
    bool unscaled = false;
    std::optional<double> beta;
    std::string gain_out;
};
CommandResult cmd_synthesize(const SynthesizeOptions& o);

struct VerifyGainOptions {
    std::string scenario;
    std::string gain_file; ///< JSON with an "L" matrix; default: the scenario's reference_L
};
CommandResult cmd_verify_gain(const VerifyGainOptions& o);

struct SimulateOptions {
    std::string scenario;
    std::string attack = "none";
    bool unmasked = false;
    std::optional<double> M;
    std::optional<double> nu;
    std::string gain_file;
    std::string trace_out;
};
CommandResult cmd_simulate(const SimulateOptions& o);

struct CalibrateOptions {
    std::string scenario;
    bool unmasked = false;
    std::optional<double> safety;
    std::string gain_file;
};
CommandResult cmd_calibrate(const CalibrateOptions& o);

struct ReproduceOptions {
    std::string scenario = "paper_b747";
    std::string out_dir; ///< default: the scenario's output.dir
};
CommandResult cmd_reproduce_paper(const ReproduceOptions& o);

} // namespace chaomask
