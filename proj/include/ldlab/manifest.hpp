#pragma once

// Run manifests: one JSON record per CLI invocation with the resolved
// configuration and SHA-256 digests of every input and output file.
// Needs nlohmann/json and OpenSSL libcrypto.

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldlab/config.hpp"
#include "ldlab/error.hpp"

namespace ldlab {

inline constexpr const char* kToolVersion = "ldlab 1.0.0";

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), ErrorCode::Format, "cannot read '" + path + "' for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    require(ctx != nullptr, ErrorCode::Format, "digest context allocation failed");
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char two[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(two, sizeof two, "%02x", md[i]);
        hex += two;
    }
    return hex;
}

class RunManifest {
public:
    RunManifest(std::string verb, std::string command, const Config& cfg) {
        doc_["tool_version"] = kToolVersion;
        doc_["verb"] = std::move(verb);
        doc_["command"] = std::move(command);
        nlohmann::json c = nlohmann::json::object();
        for (const auto& [k, v] : cfg.values()) c[k] = v;
        doc_["config"] = c;
        doc_["kernel"] = {{"n", cfg.integer("kernel.n")}, {"alpha", cfg.real("kernel.alpha")}};
        doc_["grid"] = {{"h", cfg.real("grid.h")}};
        doc_["inputs"] = nlohmann::json::array();
        doc_["outputs"] = nlohmann::json::array();
        doc_["results"] = nlohmann::json::object();
    }

    void set_seed(std::uint64_t seed) { doc_["seed"] = seed; }
    void set_box(const std::vector<int>& shape) { doc_["grid"]["box"] = shape; }
    void set_grid_h(double h) { doc_["grid"]["h"] = h; }
    void add_input(const std::string& path) { doc_["inputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}}); }
    void add_output(const std::string& path) { doc_["outputs"].push_back({{"path", path}, {"sha256", sha256_file(path)}}); }
    template <class T>
    void result(const std::string& key, const T& value) {
        doc_["results"][key] = value;
    }
    void set_wall_time(double seconds) { doc_["wall_time_s"] = seconds; }

    const nlohmann::json& json() const { return doc_; }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        require(static_cast<bool>(f), ErrorCode::Format, "cannot write '" + path + "'");
        f << doc_.dump(2) << "\n";
    }

    /// True when every listed output still exists and matches its digest.
    static bool verify(const nlohmann::json& doc) {
        for (const auto& o : doc.at("outputs")) {
            try {
                if (sha256_file(o.at("path").get<std::string>()) != o.at("sha256").get<std::string>()) return false;
            } catch (const Error&) {
                return false;
            }
        }
        return true;
    }

private:
    nlohmann::json doc_;
};

} // namespace ldlab
