#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tvcsl {

inline constexpr const char* kVersion = "0.1.0";

// Reproducibility record for one CLI run. Every output directory holds
// exactly one manifest: directory-producing commands write
// <dir>/run_manifest.json, file-producing commands a sibling
// <file>.manifest.json.
struct RunManifest {
    std::vector<std::string> command_line;
    std::vector<std::uint64_t> seeds;
    std::string config_hash;
    std::string version = kVersion;
    double wall_time_s = 0.0;
    std::vector<std::string> outputs;
};

// FNV-1a over the resolved configuration text, as a fixed-width hex string.
std::string config_hash(const std::string& resolved_config);

void write_manifest(const RunManifest& manifest, const std::string& path);

std::string manifest_path_for_file(const std::string& out_file);
std::string manifest_path_for_dir(const std::string& out_dir);

}  // namespace tvcsl
