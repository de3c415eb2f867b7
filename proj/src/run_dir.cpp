#include "sisom/run_dir.hpp"

#include <cstdio>
#include <fstream>

#include "sisom/config.hpp"

namespace sisom {

RunDir::RunDir(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_);
}

void RunDir::write(const std::string& relative_path, const std::string& content) {
    const std::filesystem::path full = root_ / relative_path;
    std::filesystem::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + full.string());
    out << content;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(content)));
    files_.push_back({relative_path, buf, content.size()});
}

void RunDir::finalize(const std::string& config_hash, std::uint64_t seed, double wall_clock_s) {
    nlohmann::json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["model_format"] = kModelFormatVersion;
    manifest["config_hash"] = config_hash;
    manifest["seed"] = seed;
    manifest["wall_clock_s"] = wall_clock_s;
    nlohmann::json files = nlohmann::json::array();
    for (const Entry& e : files_) {
        files.push_back({{"path", e.path}, {"hash", e.hash}, {"bytes", e.bytes}});
    }
    manifest["files"] = files;

    std::ofstream out(root_ / "manifest.json", std::ios::binary);
    if (!out) throw ConfigError("cannot write manifest in " + root_.string());
    out << manifest.dump(2) << '\n';
}

} // namespace sisom
