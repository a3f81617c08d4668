#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include "json.hpp"

#include "skinstack/csv.hpp"
#include "skinstack/errors.hpp"

namespace skinstack::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());

    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 init failed");
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);

    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof(byte), "%02x", md[i]);
        hex += byte;
    }
    return hex;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::ordered_json j;
    j["tool"] = "skinstack";
    j["version"] = kToolVersion;
    j["command"] = m.command;
    j["args"] = m.args;
    j["config"] = m.config;
    j["seed"] = m.seed;
    j["inputs"] = m.input_digests;
    j["outputs"] = m.output_digests;
    j["timestamp"] = m.timestamp;
    csv::write_file(path, j.dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    try {
        const auto j = nlohmann::json::parse(in);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.args = j.at("args").get<std::vector<std::string>>();
        m.config = j.value("config", std::map<std::string, std::string>{});
        m.input_digests = j.value("inputs", std::map<std::string, std::string>{});
        m.output_digests = j.value("outputs", std::map<std::string, std::string>{});
        m.seed = j.value("seed", std::string{});
        m.timestamp = j.value("timestamp", std::string{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": not a run manifest (" + e.what() + ")");
    }
}

}  // namespace skinstack::cli
