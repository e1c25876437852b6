#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carloss/sampler.hpp"

namespace carloss {

inline constexpr const char* kEngineVersion = "0.3.0";

struct InputDigest {
    std::string role;  // "data", "adjacency", ...
    std::string path;
    std::string sha256;
};

// Everything needed to reproduce a fit: inputs with content digests, priors,
// sampler settings and the command line.
struct RunManifest {
    std::string engine_version = kEngineVersion;
    std::vector<InputDigest> inputs;
    PriorSpec priors;
    SamplerConfig config;
    std::vector<std::string> scales;
    std::optional<double> sigma2_meas;
    std::string command_line;
    std::string started_utc;
    std::string finished_utc;
    nlohmann::json sampler_report;
};

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const std::filesystem::path& path, const RunManifest& manifest);
RunManifest read_manifest(const std::filesystem::path& path);

// Recomputes every input digest; throws InputError naming the first file that
// changed or disappeared.
void verify_inputs(const RunManifest& manifest);

std::string utc_timestamp();

}  // namespace carloss
