#include "ntklab/experiments/records.hpp"

#include "ntklab/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ntklab {

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_text(const std::string& text, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string to_csv(const std::vector<RunRecord>& records) {
    std::ostringstream os;
    os << "scenario,param_json,metric,value,seed,wall_time_ms\n";
    for (const RunRecord& r : records) {
        os << csv_field(r.scenario) << ',' << csv_field(r.params.dump()) << ',' << csv_field(r.metric)
           << ',' << format_double(r.value) << ',' << r.seed << ',' << format_double(r.wall_time_ms)
           << '\n';
    }
    return os.str();
}

void write_csv(const std::vector<RunRecord>& records, const std::string& path) {
    write_text(to_csv(records), path);
}

void write_json(const nlohmann::json& doc, const std::string& path) {
    write_text(doc.dump(2) + "\n", path);
}

}  // namespace ntklab
