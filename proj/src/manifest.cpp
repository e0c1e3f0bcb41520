#include "tvcsl/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tvcsl {

std::string config_hash(const std::string& resolved_config) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : resolved_config) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["command_line"] = manifest.command_line;
    j["seeds"] = manifest.seeds;
    j["config_hash"] = manifest.config_hash;
    j["version"] = manifest.version;
    j["wall_time_s"] = manifest.wall_time_s;
    j["outputs"] = manifest.outputs;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << j.dump(2) << '\n';
}

std::string manifest_path_for_file(const std::string& out_file) {
    return out_file + ".manifest.json";
}

std::string manifest_path_for_dir(const std::string& out_dir) {
    return (std::filesystem::path(out_dir) / "run_manifest.json").string();
}

}  // namespace tvcsl
