#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ntklab {

/// One measurement. `params` is a flat JSON object describing the cell.
struct RunRecord {
    std::string scenario;
    nlohmann::json params = nlohmann::json::object();
    std::string metric;
    double value = 0.0;
    std::uint64_t seed = 0;
    double wall_time_ms = 0.0;
};

/// "%.17g" formatting shared by the CSV writer and the CLI.
std::string format_double(double v);

/// CSV text with header `scenario,param_json,metric,value,seed,wall_time_ms`.
std::string to_csv(const std::vector<RunRecord>& records);

/// Writes to_csv(records) to `path`; IoError on failure.
void write_csv(const std::vector<RunRecord>& records, const std::string& path);

/// Pretty-printed JSON document; IoError on failure.
void write_json(const nlohmann::json& doc, const std::string& path);

}  // namespace ntklab
