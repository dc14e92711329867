/*
 Copyright 2026 The greybox Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "greybox/estimator.hpp"
#include "greybox/io.hpp"
#include "greybox/learner.hpp"
#include "greybox/simkit.hpp"

// Batch pipeline: simulate -> design filter -> estimate -> learn -> evaluate.
namespace greybox::pipeline {

inline constexpr int kScenarioVersion = 1;

/**
 * Scenario file (JSON, "version": 1). Signal specs are either explicit (as
 * written by io::to_json(Signal)) or random generators resolved from the seed:
 *
 *   {"kind": "random_multisine", "count", "w_lo", "w_hi", "amplitude", "seed_offset"}
 *   {"kind": "random_filtered", "amplitude", "knot_spacing", "seed_offset"}
 *
 * A generator draws from seed + seed_offset, so changing the global seed
 * changes every random signal at once.
 */
struct ScenarioConfig {
    int version = kScenarioVersion;
    std::string name;
    std::string plant_path;  // resolved against the scenario directory

    // Filter.
    int r = 2;
    double epsilon = 1e-3;
    std::optional<double> gamma_max;  // empty: sweep gamma_max_grid, keep the smallest lambda*
    std::vector<double> gamma_max_grid = default_gamma_max_grid();

    // Signals (unresolved specs).
    io::Json u_train, u_test, omega, nu;

    // Horizons and steps.
    double T_train = 60.0;
    double T_test = 30.0;
    SimOptions sim;           // T is overwritten per run
    Vector x0;                // empty: zero
    double output_rate_hz = 100.0;  // decimation of trajectory and plot CSVs

    // Dataset and learner.
    double rate_hz = 100.0;
    double t_min = 2.0;
    std::vector<std::string> routes{"thm1", "thm2", "ls"};
    LearnerOptions learner;

    std::uint64_t seed = 1;
    bool dump_conic = false;

    // Optional reference RMSE per model and output; reproduce checks each
    // learned model against it to within a factor of 5.
    std::map<std::string, std::vector<double>> reference_rmse;
};

ScenarioConfig scenario_from_json(const io::Json& j, const std::string& base_dir = ".");
io::Json to_json(const ScenarioConfig& c);
/// Reads and validates a scenario; a relative plant path is taken from the scenario's directory.
ScenarioConfig load_scenario(const std::string& path);

/// Turns a signal spec into a signal with `channels` outputs.
Signal resolve_signal(const io::Json& spec, int channels, std::uint64_t seed, double horizon, const std::string& what);

/// Route names: "thm1", "thm2", "ls"; "all" expands to the three.
std::vector<std::string> parse_routes(const std::string& route);

struct Context {
    ScenarioConfig cfg;
    PlantDescription plant;
    std::string out_dir;  // created on demand; empty disables file output

    Context(ScenarioConfig c, PlantDescription p, std::string out);

    Vector x0() const;
    PlantSignals training_signals() const;
    Signal test_input() const;
    SimOptions sim(double T) const;
    const TrueUncertainty& truth() const;  // throws InvalidArgument for plants without it
    std::string path(const std::string& file) const;
};

Context make_context(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed);

/// Plant-only training run. Files: train_trajectory.csv, simulate_meta.json.
Trajectory run_simulate(const Context& ctx);

/// Files: filter_design.json (and gamma_max_sweep.json for a sweep).
FilterDesign run_design_filter(const Context& ctx);

/// Loads out_dir/filter_design.json when present, otherwise designs the filter.
FilterDesign load_or_design_filter(const Context& ctx);

struct LearnOutput {
    Trajectory trajectory;
    std::vector<Sample> samples;
    std::map<std::string, LearnReport> reports;
};

/// Co-simulates plant and filter on the training signals, samples the dataset and
/// runs each route. Files: filter_trajectory.csv, dataset.csv, learn_<route>.json.
LearnOutput run_learn(const Context& ctx, const FilterDesign& fd, const std::vector<std::string>& routes);

struct EvaluationRow {
    std::string model;  // "no-model", "thm1", "thm2", "ls"
    RmseResult result;
};

struct Evaluation {
    std::vector<EvaluationRow> rows;
    const EvaluationRow* find(const std::string& model) const;
};

/// Test-input responses of the true plant, the bare model and each learned model.
/// Files: rmse.csv, rmse.json and plot_y<k>.csv per output.
Evaluation run_evaluate(const Context& ctx, const std::map<std::string, UncertaintyModel>& models);

/// Reads learn_<route>.json from the output directory.
std::map<std::string, UncertaintyModel> load_models(const Context& ctx, const std::vector<std::string>& routes);

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ReproduceResult {
    FilterDesign filter;
    LearnOutput learn;
    Evaluation evaluation;
    std::vector<Check> checks;
    bool all_pass() const;
};

/// Full pipeline, then a second run at dt/2 for the step-size check.
/// Files: everything above plus summary.json.
ReproduceResult run_reproduce(const Context& ctx);

}  // namespace greybox::pipeline
