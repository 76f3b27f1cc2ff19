#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fcr {

inline constexpr const char* kToolVersion = "0.1.0";

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Record of one CLI invocation, written next to its outputs.
struct RunManifest {
    std::string subcommand;
    nlohmann::json config = nlohmann::json::object();
    std::vector<std::filesystem::path> inputs;
    std::vector<std::filesystem::path> outputs;
    std::optional<std::uint64_t> seed;

    /// Serializes with input digests and a UTC timestamp.
    nlohmann::json to_json() const;
    void write(const std::filesystem::path& path) const;
};

}  // namespace fcr
