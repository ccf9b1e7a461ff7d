#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "cardsort/csv.hpp"
#include "cardsort/stats.hpp"
#include "cardsort/version.hpp"

namespace cardsort {

// FNV-1a 64-bit digest of a file's bytes; identifies inputs in reports.
inline std::string file_digest(const std::string& path) {
    const std::string bytes = csv::read_file(path);
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

// Report skeleton shared by every subcommand; no timestamps, so identical
// inputs and seeds reproduce byte-identical reports.
inline nlohmann::ordered_json make_report(const std::string& command) {
    nlohmann::ordered_json report;
    report["tool"] = "cardsort";
    report["version"] = kVersion;
    report["command"] = command;
    return report;
}

inline nlohmann::ordered_json test_result_to_json(const TestResult& result) {
    nlohmann::ordered_json j;
    j["statistic_name"] = to_string(result.statistic_name);
    j["statistic"] = result.statistic;
    if (result.z) j["z"] = *result.z;
    if (result.df) j["df"] = *result.df;
    j["p"] = result.p;
    if (result.effect_size_r) j["effect_size_r"] = *result.effect_size_r;
    j["n"] = result.n;
    return j;
}

} // namespace cardsort
