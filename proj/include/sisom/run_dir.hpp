#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sisom {

inline constexpr const char* kArtifactVersion = "0.1.0";
inline constexpr const char* kModelFormatVersion = "mlpmodel v1";

// Output directory of one CLI run. Every file goes through write() so the
// manifest can list each output with a content hash.
class RunDir {
public:
    explicit RunDir(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    void write(const std::string& relative_path, const std::string& content);

    // Writes manifest.json: config hash, seed, versions, wall clock, and the
    // hash of every file written so far.
    void finalize(const std::string& config_hash, std::uint64_t seed, double wall_clock_s);

private:
    struct Entry {
        std::string path;
        std::string hash;
        std::size_t bytes;
    };
    std::filesystem::path root_;
    std::vector<Entry> files_;
};

} // namespace sisom
