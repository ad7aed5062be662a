#include "ntklab/experiments/config.hpp"

#include "ntklab/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ntklab {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void parse_error(int line, const std::string& what) {
    throw Error(ErrorCode::ConfigParse, "line " + std::to_string(line) + ": " + what);
}

template <class T>
T parse_number(std::string_view text, int line, std::string_view key) {
    text = trim(text);
    T value{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (text.empty() || ec != std::errc() || ptr != end) {
        parse_error(line, "bad value '" + std::string(text) + "' for " + std::string(key));
    }
    return value;
}

template <class T>
std::vector<T> parse_list(std::string_view text, int line, std::string_view key) {
    std::vector<T> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        out.push_back(parse_number<T>(text.substr(start, comma - start), line, key));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string format_list(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ", ";
        if constexpr (std::is_floating_point_v<T>) out += format_double(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, int)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"name", [](ExperimentConfig& c, std::string_view v, int) { c.name = std::string(trim(v)); }},
        {"seed", [](ExperimentConfig& c, std::string_view v, int l) { c.seed = parse_number<std::uint64_t>(v, l, "seed"); }},
        {"n_list", [](ExperimentConfig& c, std::string_view v, int l) { c.n_list = parse_list<long>(v, l, "n_list"); }},
        {"m_list", [](ExperimentConfig& c, std::string_view v, int l) { c.m_list = parse_list<long>(v, l, "m_list"); }},
        {"sigma", [](ExperimentConfig& c, std::string_view v, int l) { c.sigma = parse_number<double>(v, l, "sigma"); }},
        {"alpha_list", [](ExperimentConfig& c, std::string_view v, int l) { c.alpha_list = parse_list<double>(v, l, "alpha_list"); }},
        {"t_star_c", [](ExperimentConfig& c, std::string_view v, int l) { c.t_star_c = parse_number<double>(v, l, "t_star_c"); }},
        {"corruption_p_list", [](ExperimentConfig& c, std::string_view v, int l) { c.corruption_p_list = parse_list<double>(v, l, "corruption_p_list"); }},
        {"grid_n", [](ExperimentConfig& c, std::string_view v, int l) { c.grid_n = parse_number<int>(v, l, "grid_n"); }},
        {"quad_n", [](ExperimentConfig& c, std::string_view v, int l) { c.quad_n = parse_number<int>(v, l, "quad_n"); }},
        {"j_max", [](ExperimentConfig& c, std::string_view v, int l) { c.j_max = parse_number<int>(v, l, "j_max"); }},
        {"output_dir", [](ExperimentConfig& c, std::string_view v, int) { c.output_dir = std::string(trim(v)); }},
        {"seeds", [](ExperimentConfig& c, std::string_view v, int l) { c.seeds = parse_number<int>(v, l, "seeds"); }},
        {"truth", [](ExperimentConfig& c, std::string_view v, int) { c.truth = std::string(trim(v)); }},
        {"sets", [](ExperimentConfig& c, std::string_view v, int l) { c.sets = parse_number<int>(v, l, "sets"); }},
        {"max_steps", [](ExperimentConfig& c, std::string_view v, int l) { c.max_steps = parse_number<long>(v, l, "max_steps"); }},
        {"n_test", [](ExperimentConfig& c, std::string_view v, int l) { c.n_test = parse_number<int>(v, l, "n_test"); }},
        {"eval_every", [](ExperimentConfig& c, std::string_view v, int l) { c.eval_every = parse_number<long>(v, l, "eval_every"); }},
        {"eta", [](ExperimentConfig& c, std::string_view v, int l) { c.eta = parse_number<double>(v, l, "eta"); }},
        {"time_budget_s", [](ExperimentConfig& c, std::string_view v, int l) { c.time_budget_s = parse_number<double>(v, l, "time_budget_s"); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "min_eig",     "edr",           "sandwich",       "interp_gap",       "early_stop",
        "overfit_floor", "uniform_kernel", "uniform_function", "stopping_rules"};
    return names;
}

ExperimentConfig default_config(std::string_view scenario) {
    ExperimentConfig c;
    c.name = std::string(scenario);
    if (scenario == "min_eig") {
        c.n_list = {8, 16, 32, 64, 128, 256, 512, 1024};
    } else if (scenario == "edr") {
        c.alpha_list = {1.0, 9.0 / 7.0};
        c.grid_n = 2000;
        c.j_max = 40;
    } else if (scenario == "sandwich") {
        c.n_list = {32};
        c.sets = 50;
    } else if (scenario == "interp_gap") {
        c.n_list = {100, 200, 300, 400, 500, 600, 700, 800, 900, 1000};
        c.grid_n = 2048;
    } else if (scenario == "early_stop" || scenario == "overfit_floor") {
        c.n_list = {128, 256, 512, 1024, 2048};
        c.seeds = 20;
        c.sigma = 0.5;
        c.t_star_c = 1.0;
        c.quad_n = 4001;
    } else if (scenario == "uniform_kernel") {
        c.m_list = {64, 256, 1024, 4096};
        c.n_list = {16};
        c.seeds = 5;
        c.grid_n = 64;
        c.sigma = 0.0;
    } else if (scenario == "uniform_function") {
        c.m_list = {256, 4096};
        c.n_list = {16};
        c.seeds = 3;
        c.grid_n = 256;
        c.sigma = 0.0;
    } else if (scenario == "stopping_rules") {
        c.n_list = {256};
        c.m_list = {2048};
        c.corruption_p_list = {0.0, 0.3, 0.6};
        c.seeds = 3;
        c.n_test = 1024;
        c.max_steps = 400000;
        c.eval_every = 100;
        c.time_budget_s = 900.0;
    } else {
        throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + std::string(scenario) + "'");
    }
    return c;
}

void validate(const ExperimentConfig& c) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigParse, what); };
    if (c.n_list.empty()) fail("n_list must be nonempty");
    if (c.m_list.empty()) fail("m_list must be nonempty");
    if (c.alpha_list.empty()) fail("alpha_list must be nonempty");
    if (c.corruption_p_list.empty()) fail("corruption_p_list must be nonempty");
    for (const double p : c.corruption_p_list) {
        if (!(p >= 0.0 && p <= 1.0)) fail("corruption probabilities must lie in [0, 1]");
    }
    for (const long n : c.n_list) {
        if (n < 1) fail("n_list entries must be positive");
    }
    for (const long m : c.m_list) {
        if (m < 1) fail("m_list entries must be positive");
    }
    if (c.sigma < 0.0) fail("sigma must be nonnegative");
    if (!(c.t_star_c > 0.0)) fail("t_star_c must be positive");
    if (c.grid_n < 1 || c.quad_n < 2 || c.j_max < 1) fail("grid_n, quad_n, j_max out of range");
    if (c.seeds < 1 || c.sets < 1 || c.max_steps < 1 || c.n_test < 1 || c.eval_every < 1) {
        fail("seeds, sets, max_steps, n_test, eval_every must be positive");
    }
    if (c.eta < 0.0 || c.time_budget_s < 0.0) fail("eta and time_budget_s must be nonnegative");
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
    ExperimentConfig c = base;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) parse_error(line_no, "expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) parse_error(line_no, "unknown key '" + std::string(key) + "'");
        if (!seen.insert(std::string(key)).second) {
            parse_error(line_no, "duplicate key '" + std::string(key) + "'");
        }
        it->second(c, value, line_no);
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string write_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "name = " << c.name << '\n'
       << "seed = " << c.seed << '\n'
       << "n_list = " << format_list(c.n_list) << '\n'
       << "m_list = " << format_list(c.m_list) << '\n'
       << "sigma = " << format_double(c.sigma) << '\n'
       << "alpha_list = " << format_list(c.alpha_list) << '\n'
       << "t_star_c = " << format_double(c.t_star_c) << '\n'
       << "corruption_p_list = " << format_list(c.corruption_p_list) << '\n'
       << "grid_n = " << c.grid_n << '\n'
       << "quad_n = " << c.quad_n << '\n'
       << "j_max = " << c.j_max << '\n'
       << "output_dir = " << c.output_dir << '\n'
       << "seeds = " << c.seeds << '\n'
       << "truth = " << c.truth << '\n'
       << "sets = " << c.sets << '\n'
       << "max_steps = " << c.max_steps << '\n'
       << "n_test = " << c.n_test << '\n'
       << "eval_every = " << c.eval_every << '\n'
       << "eta = " << format_double(c.eta) << '\n'
       << "time_budget_s = " << format_double(c.time_budget_s) << '\n';
    return os.str();
}

}  // namespace ntklab
