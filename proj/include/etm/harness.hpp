#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "etm/activity.hpp"
#include "etm/densities.hpp"
#include "etm/model.hpp"
#include "etm/reconstruct.hpp"
#include "etm/steady.hpp"
#include "etm/transport.hpp"

namespace etm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Route { Pde, Delay, Monotone };

struct InitialSpec {
    enum class Kind { Density, Steady, Ramp } kind = Kind::Density;
    std::string density_name;           // Kind::Density
    std::vector<double> density_params;
    int steady_index = 0;               // Kind::Steady: 0-based root index
    int ramp_target_index = 1;          // Kind::Ramp: steady root the ramp approaches
    double ramp_delta = 0.0;            // gap below the target at t = sigma
};

struct ExperimentConfig {
    std::string model_name;
    std::vector<double> model_params;
    double sigma = 0.0;
    InitialSpec initial;
    Route route = Route::Pde;
    double T = 0.0;
    double dt = 0.0;     // 0 -> sigma / 200
    double s_max = 0.0;  // 0 -> default span rule
    int branch = 1;      // 1-based index into the initial branch set
    std::optional<double> branch_value;
    PolicyMode policy = PolicyMode::ContinuationThenJump;
    int snapshot_every = 0;  // steps; 0 disables snapshots

    double effective_dt() const { return dt > 0.0 ? dt : sigma / 200.0; }
};

/// Line-oriented `key = value` document; '#' starts a comment. Unknown keys
/// and invariant violations are reported with the offending key.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& c);

std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);
ExperimentConfig preset(const std::string& name);

struct ExperimentResult {
    ExperimentConfig config;
    FiringModel model;
    ActivityTrace trace;
    SteadyStateSet steady;
    InitialBranchSet branches;
    VerificationReport verification;      // pde route only (else pass = true)
    std::vector<DensityField> snapshots;
    std::vector<double> snapshot_times;
    double max_mass_drift = 0.0;
    std::vector<std::string> written_files;
};

FiringModel build_model(const ExperimentConfig& c);
InitialDensity build_initial_density(const ExperimentConfig& c, const FiringModel& m);

/// Runs the configured route; always computes steady states and initial
/// branches alongside. With a non-empty out_dir writes trace.csv,
/// steady_states.json, initial_branches.json, verification.json, config.txt,
/// snapshots and manifest.json.
ExperimentResult run_experiment(const ExperimentConfig& c, const std::string& out_dir = "");

struct RouteComparison {
    double max_divergence = 0.0;
    std::optional<double> first_divergence_time;  // first |diff| > threshold
    double divergence_threshold = 0.0;
    std::vector<double> jump_times_pde;
    std::vector<double> jump_times_delay;
};

/// Runs the pde and delay routes on the identical branch policy and reports
/// the sup difference of the traces.
RouteComparison compare_routes(const ExperimentConfig& c, double horizon = 0.0);
std::string comparison_to_json(const RouteComparison& r);

}  // namespace etm
