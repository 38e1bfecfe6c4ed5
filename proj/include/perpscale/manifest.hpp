#ifndef PERPSCALE_MANIFEST_HPP
#define PERPSCALE_MANIFEST_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "perpscale/io.hpp"
#include "perpscale/version.hpp"

namespace perpscale {

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::string file_checksum_hex(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file_bytes(path);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

/// Every artifact-producing command writes one of these alongside its
/// outputs: the full command line and resolved parameters are enough to
/// re-run it exactly.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::ordered_json parameters;
    std::uint64_t seed = 0;
    int threads = 1;
    std::vector<std::pair<std::string, std::string>> input_checksums;  // path, fnv1a64 hex
    std::vector<std::pair<std::string, double>> stage_seconds;
    std::vector<std::string> outputs;

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["tool"] = "perpscale";
        j["version"] = kVersion;
        j["command"] = command;
        j["argv"] = argv;
        j["parameters"] = parameters;
        j["seed"] = seed;
        j["threads"] = threads;
        nlohmann::ordered_json checks = nlohmann::ordered_json::object();
        for (const auto& [path, sum] : input_checksums) checks[path] = sum;
        j["input_checksums"] = checks;
        nlohmann::ordered_json stages = nlohmann::ordered_json::object();
        for (const auto& [stage, secs] : stage_seconds) stages[stage] = secs;
        j["wall_clock_seconds"] = stages;
        j["outputs"] = outputs;
        return j;
    }

    void write(const std::filesystem::path& path) const {
        detail::write_file_bytes(path, to_json().dump(2) + "\n");
    }
};

} // namespace perpscale

#endif
