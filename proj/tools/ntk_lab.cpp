#include "ntklab/error.hpp"
#include "ntklab/experiments/config.hpp"
#include "ntklab/experiments/records.hpp"
#include "ntklab/experiments/scenarios.hpp"
#include "ntklab/kernels.hpp"
#include "ntklab/spectral.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitOther = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int threads_from_env() {
    const char* env = std::getenv("NTK_LAB_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    try {
        const int k = std::stoi(env);
        if (k >= 1) return k;
    } catch (const std::exception&) {
    }
    throw ntklab::Error(ntklab::ErrorCode::ConfigParse, std::string("NTK_LAB_THREADS is not a positive integer: ") + env);
}

struct ScenarioArgs {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
};

int run_scenario_command(const std::string& name, const ScenarioArgs& args) {
    ntklab::ExperimentConfig config = ntklab::load_config(args.config_path, ntklab::default_config(name));
    if (config.name.empty()) config.name = name;
    if (config.name != name) {
        throw ntklab::Error(ntklab::ErrorCode::ConfigParse,
                            "config names scenario '" + config.name + "' but '" + name + "' was requested");
    }
    if (args.out) config.output_dir = *args.out;
    if (args.seed) config.seed = *args.seed;
    ntklab::RunOptions options;
    options.threads = args.threads ? *args.threads : threads_from_env();
    const ntklab::ScenarioOutput output = ntklab::run_scenario(config, options);
    ntklab::write_outputs(config, output);
    std::cout << name << ": " << output.records.size() << " records -> " << config.output_dir << "/" << name
              << ".csv, " << (output.passed ? "PASS" : "FAIL") << "\n";
    return kExitOk;
}

int exit_code(const ntklab::Error& e) {
    if (ntklab::is_config(e.code())) return kExitConfig;
    if (ntklab::is_numerical(e.code())) return kExitNumerical;
    return kExitOther;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NTK regression and two-layer ReLU network experiments"};
    app.require_subcommand(1);

    ScenarioArgs scenario_args;
    for (const std::string& name : ntklab::scenario_names()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " scenario");
        sub->add_option("--config", scenario_args.config_path, "config file (key = value)")->required();
        sub->add_option("--out", scenario_args.out, "output directory, overrides output_dir");
        sub->add_option("--seed", scenario_args.seed, "master seed, overrides seed");
        sub->add_option("--threads", scenario_args.threads, "worker threads (default NTK_LAB_THREADS or 1)")
            ->check(CLI::PositiveNumber);
    }

    double kx = 0.0, ky = 0.0;
    int kd = 1;
    CLI::App* kernel = app.add_subcommand("kernel", "evaluate K_d at x 1_d, y 1_d");
    kernel->add_option("--x", kx)->required();
    kernel->add_option("--y", ky)->required();
    kernel->add_option("--d", kd, "input dimension")->check(CLI::PositiveNumber);

    double alpha = 1.0;
    int jmax = 40;
    CLI::App* roots = app.add_subcommand("roots", "roots of h(omega) and eigenvalues of G_alpha as CSV");
    roots->add_option("--alpha", alpha)->required();
    roots->add_option("--jmax", jmax)->required()->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (kernel->parsed()) {
            double value = 0.0;
            if (kd == 1) {
                value = ntklab::ntk1_eval(kx, ky);
            } else {
                value = ntklab::ntk_eval(kd, ntklab::Point::Constant(kd, kx), ntklab::Point::Constant(kd, ky));
            }
            std::cout << ntklab::format_double(value) << "\n";
            return kExitOk;
        }
        if (roots->parsed()) {
            const ntklab::MercerSpectrum s = ntklab::mercer_spectrum(alpha, jmax);
            std::cout << "j,omega,lambda\n";
            for (std::size_t j = 0; j < s.roots.size(); ++j) {
                std::cout << j + 1 << "," << ntklab::format_double(s.roots[j]) << ","
                          << ntklab::format_double(s.eigenvalues[j]) << "\n";
            }
            return kExitOk;
        }
        for (const std::string& name : ntklab::scenario_names()) {
            if (app.got_subcommand(name)) return run_scenario_command(name, scenario_args);
        }
    } catch (const ntklab::Error& e) {
        std::cerr << "ntk-lab: " << e.what() << "\n";
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "ntk-lab: " << e.what() << "\n";
        return kExitOther;
    }
    return kExitOther;
}
