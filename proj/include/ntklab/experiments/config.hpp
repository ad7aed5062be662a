#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ntklab {

/// Scenario parameters. Text form: one `key = value` per line, `#` starts a
/// comment, lists are comma separated, keys may appear in any order but at
/// most once. Unknown keys are rejected.
///
///   name = interp_gap
///   seed = 7
///   n_list = 100, 200, 300
///   sigma = 0.5
struct ExperimentConfig {
    std::string name;
    std::uint64_t seed = 20240611;
    std::vector<long> n_list{16};
    std::vector<long> m_list{256};
    double sigma = 0.5;
    std::vector<double> alpha_list{1.0};
    double t_star_c = 1.0;
    std::vector<double> corruption_p_list{0.0};
    int grid_n = 2048;
    int quad_n = 4001;
    int j_max = 40;
    std::string output_dir = "out";

    int seeds = 1;                   ///< seeds per cell, drawn as split streams of `seed`
    std::string truth = "kernel_mix";
    int sets = 50;                   ///< random point sets (sandwich)
    long max_steps = 100000;
    int n_test = 1024;
    long eval_every = 100;           ///< test evaluation stride during training
    double eta = 0.0;                ///< 0 selects the default step-size policy
    double time_budget_s = 0.0;      ///< 0 disables the wall-clock guard

    bool operator==(const ExperimentConfig&) const = default;
};

/// Acceptance-scale defaults for a scenario name; throws UnknownScenario.
ExperimentConfig default_config(std::string_view scenario);

/// Names accepted by default_config and run_scenario.
const std::vector<std::string>& scenario_names();

/// Applies the keys in `text` on top of `base`. Throws ConfigParse with the
/// offending line number.
ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base = {});

/// Reads and parses a file; IoError when it cannot be read.
ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base = {});

/// Every key, floats at 17 significant digits; parse_config inverts it.
std::string write_config(const ExperimentConfig& config);

/// Checks list non-emptiness and probability ranges; ConfigParse on failure.
void validate(const ExperimentConfig& config);

}  // namespace ntklab
