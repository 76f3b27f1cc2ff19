#include "fcr/manifest.hpp"

#include <chrono>
#include <fstream>
#include <memory>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include "fcr/error.hpp"

namespace fcr {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 initialisation failed");
    }
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() > 0) {
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
        }
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json doc;
    doc["tool"] = "fcr";
    doc["version"] = kToolVersion;
    doc["subcommand"] = subcommand;
    doc["config"] = config;
    doc["inputs"] = nlohmann::json::array();
    for (const auto& p : inputs) {
        doc["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    }
    doc["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs) doc["outputs"].push_back(p.string());
    doc["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json();
    auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    doc["timestamp"] = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
    return doc;
}

void RunManifest::write(const std::filesystem::path& path) const {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

}  // namespace fcr
