#pragma once

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

// Paths and scratch space shared by the test binaries.

inline std::string assets_dir() {
    const char* env = std::getenv("MAGIC_ASSETS");
    return env ? env : "assets";
}

inline std::string templates_manifest() { return assets_dir() + "/templates/manifest.json"; }
inline std::string topics_dir() { return assets_dir() + "/topics"; }

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() /
                ("magic_" + tag + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

private:
    std::filesystem::path path_;
};
