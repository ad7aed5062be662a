#pragma once

#include "ntklab/experiments/config.hpp"
#include "ntklab/experiments/records.hpp"
#include "ntklab/nn_train.hpp"
#include "ntklab/spectral.hpp"

#include <string>
#include <vector>

namespace ntklab {

struct RunOptions {
    int threads = 1;
};

/// Records, a JSON summary with fitted slopes and pass flags, and the overall verdict.
struct ScenarioOutput {
    std::vector<RunRecord> records;
    nlohmann::json summary;
    bool passed = false;
};

/// Runs `count` independent cells on up to `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

/// Stream for a grid cell: Rng(seed).split(a).split(b).
Rng cell_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// ---------------------------------------------------------------------------
// min_eig: equispaced X on [0, pi].

struct MinEigRow {
    long n = 0;
    double d_min = 0.0;
    double lambda_g1 = 0.0;
    double lower = 0.0;  ///< d_min / (2 pi)
    double upper = 0.0;  ///< 2 d_min / pi
    double lambda_k1 = 0.0;
    double k1_ratio = 0.0;  ///< lambda_min(K1) / d_min
    bool bounds_ok = false;
    double wall_ms = 0.0;
};

struct MinEigResult {
    std::vector<MinEigRow> rows;
    double band_ratio = 0.0;  ///< max / min of k1_ratio over n
    bool bounds_ok = false;
    bool band_ok = false;
};

MinEigResult run_min_eig(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// edr

struct EdrAlpha {
    double alpha = 1.0;
    MercerSpectrum spectrum;
    double slope_shifted = 0.0;    ///< against j - 1, j in [2, j_max]
    double slope_unshifted = 0.0;  ///< against j
};

struct EdrResult {
    std::vector<EdrAlpha> transcendental;
    std::vector<double> empirical;  ///< K1 on the grid
    double empirical_slope_shifted = 0.0;
    double empirical_slope_unshifted = 0.0;
    double even_max_rel_err = 0.0;  ///< alpha = 1, even j, against 2/(pi^3 (j-1)^2)
    double lambda1 = 0.0;           ///< alpha = 1
    bool lambda1_in_bracket = false;
    double min_lower_ratio = 0.0;   ///< min_j lambda_hat_j / lambda_j^(1)
    double max_upper_ratio = 0.0;   ///< max_j lambda_hat_j / (7 lambda_j^(9/7))
    bool bounds_ok = false;
    bool transcendental_slope_ok = false;
    bool empirical_slope_ok = false;
    double wall_ms = 0.0;
};

EdrResult run_edr(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// sandwich: random point sets in [0, 1] of size 1 .. n_list[0].

struct SandwichSet {
    long n = 0;
    SandwichResult check;
};

struct SandwichScenarioResult {
    std::vector<SandwichSet> sets;
    int passed = 0;
    double worst_lo = 0.0;
    double worst_hi = 0.0;
    bool all_ok = false;
};

SandwichScenarioResult run_sandwich(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// interp_gap: equispaced X on [0, 1], labels +-1.

struct InterpGapRow {
    long n = 0;
    double sup_gap = 0.0;
    double interp_residual = 0.0;  ///< max |f_inf(x_i) - y_i| / ||y||_inf
    double wall_ms = 0.0;
};

struct InterpGapResult {
    std::vector<InterpGapRow> rows;
    double slope = 0.0;
    bool slope_ok = false;
    bool interp_ok = false;
};

InterpGapResult run_interp_gap(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// early_stop / overfit_floor share one sweep over (n, seed).

struct RiskCell {
    long n = 0;
    int seed_index = 0;
    double t_star = 0.0;
    double risk_t_star = 0.0;
    double risk_inf = 0.0;
};

struct RiskSweepResult {
    std::vector<RiskCell> cells;
    std::vector<long> n_values;
    std::vector<double> median_t_star;  ///< per n
    std::vector<double> median_inf;     ///< per n
    double slope_t_star = 0.0;
    bool slope_ok = false;              ///< slope in [-0.90, -0.45]
    double floor = 0.0;                 ///< sigma^2 / 4
    int seeds_above_floor = 0;          ///< seeds whose risk_inf >= floor at every n
    int seeds_required = 0;             ///< ceil(0.9 seeds)
    bool floor_ok = false;
    double li_noise_mean = 0.0;         ///< Monte Carlo mean of li_risk_expansion
    double li_noise_target = 0.0;       ///< (2/3) sigma^2
    bool li_ok = false;
    double wall_ms = 0.0;
};

RiskSweepResult run_risk_sweep(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// uniform_kernel

struct KernelCell {
    long m = 0;
    int seed_index = 0;
    double deviation_init = 0.0;   ///< sup_grid |NNK - K1| at initialization
    double drift = 0.0;            ///< sup_grid |NNK(t) - NNK(0)| after training to 4n
};

struct UniformKernelResult {
    std::vector<KernelCell> cells;
    std::vector<long> m_values;
    std::vector<double> mean_deviation;  ///< per m
    std::vector<double> mean_drift;      ///< per m
    double ratio = 0.0;                  ///< mean_deviation(largest m) / mean_deviation(smallest m)
    bool ratio_ok = false;               ///< ratio <= 0.25
    bool drift_ok = false;               ///< mean_drift(largest m) <= mean_drift(smallest m)
};

UniformKernelResult run_uniform_kernel(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// uniform_function

struct FunctionCell {
    long m = 0;
    int seed_index = 0;
    std::vector<double> gaps;           ///< per checkpoint
    std::vector<double> actual_times;   ///< snapshot times
    double worst_decay_ratio = 0.0;     ///< max over steps of ||u||^2 / (e^{-lambda t/(2n)} ||y||^2)
    double eta = 0.0;
};

struct UniformFunctionResult {
    std::vector<double> checkpoints;  ///< n/4, n, 4n
    std::vector<FunctionCell> cells;
    std::vector<long> m_values;
    std::vector<std::vector<double>> mean_gap;  ///< [m][checkpoint]
    double lambda_min = 0.0;                    ///< of the NTK Gram
    bool gap_ok = false;                        ///< largest m below smallest m at every checkpoint
    bool decay_ok = false;                      ///< worst ratio <= 1.1 for the largest m
    int seed_wins = 0;                          ///< (seed, checkpoint) pairs where the wide net wins
};

UniformFunctionResult run_uniform_function(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------
// stopping_rules: parity3 with label corruption.

struct StoppingCell {
    double p = 0.0;
    int seed_index = 0;
    long steps = 0;
    double t_label = 0.0;
    bool reached = false;  ///< LabelZero fired before max_steps
    double acc_at_label = 0.0;
    double best_acc = 0.0;
    double gap = 0.0;
    double eta = 0.0;
    int corrupted = 0;
    double wall_ms = 0.0;
};

struct StoppingRulesResult {
    std::vector<StoppingCell> cells;  ///< p-major
    std::vector<double> p_values;
    std::vector<double> median_steps;  ///< per p; censored cells count as max_steps + 1
    bool steps_monotone = false;
    int seeds_gap_monotone = 0;
    bool gap_majority = false;
    bool budget_exceeded = false;
    double wall_ms = 0.0;
};

StoppingRulesResult run_stopping_rules(const ExperimentConfig& config, const RunOptions& options = {});

// ---------------------------------------------------------------------------

ScenarioOutput to_output(const ExperimentConfig& config, const MinEigResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const EdrResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const SandwichScenarioResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const InterpGapResult& r);
ScenarioOutput to_early_stop_output(const ExperimentConfig& config, const RiskSweepResult& r);
ScenarioOutput to_overfit_floor_output(const ExperimentConfig& config, const RiskSweepResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const UniformKernelResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const UniformFunctionResult& r);
ScenarioOutput to_output(const ExperimentConfig& config, const StoppingRulesResult& r);

/// Dispatches on config.name; UnknownScenario otherwise.
ScenarioOutput run_scenario(const ExperimentConfig& config, const RunOptions& options = {});

/// Writes <output_dir>/<name>.csv and <output_dir>/<name>_summary.json.
void write_outputs(const ExperimentConfig& config, const ScenarioOutput& output);

}  // namespace ntklab
