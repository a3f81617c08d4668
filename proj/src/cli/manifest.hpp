#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace skinstack::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written next to every command output. Replaying the
/// recorded `args` reproduces the outputs byte-for-byte; only `timestamp`
/// changes between runs.
struct RunManifest {
    std::string command;
    std::vector<std::string> args;
    std::map<std::string, std::string> config;
    std::map<std::string, std::string> input_digests;
    std::map<std::string, std::string> output_digests;
    std::string seed;
    std::string timestamp;
};

std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace skinstack::cli
