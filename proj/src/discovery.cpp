#include "tempo/discovery.hpp"

#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace tempo {

namespace fs = std::filesystem;
using nlohmann::json;

std::string md5_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_md5(), nullptr);
    EVP_DigestUpdate(ctx, data.data(), data.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

int64_t mtime_seconds(const std::string& path) {
    struct stat st;
    if (::stat(path.c_str(), &st) != 0)
        throw std::runtime_error("fingerprint: cannot stat '" + path + "'");
    return int64_t(st.st_mtime);
}

}  // namespace

std::string compute_fingerprint(const FingerprintInputs& inputs) {
    std::map<std::string, int64_t> records = inputs.source_mtimes;
    for (const auto& p : inputs.server_paths) records[p] = mtime_seconds(p);

    std::string canon;
    for (const auto& [path, mtime] : records) {
        canon += path;
        canon += ':';
        canon += std::to_string(mtime);
        canon += '\n';
    }
    canon += "config:";
    canon += std::to_string(inputs.config_mtime);
    return md5_hex(canon);
}

FingerprintInputs gather_fingerprint_inputs(const std::vector<std::string>& server_paths,
                                            const fs::path& servers_dir,
                                            const fs::path& config_file) {
    FingerprintInputs inputs;
    inputs.server_paths = server_paths;
    if (!fs::is_directory(servers_dir))
        throw std::runtime_error("fingerprint: servers directory missing: " +
                                 servers_dir.string());
    for (const auto& entry : fs::recursive_directory_iterator(servers_dir)) {
        if (!entry.is_regular_file()) continue;
        inputs.source_mtimes[entry.path().string()] = mtime_seconds(entry.path().string());
    }
    inputs.config_mtime = mtime_seconds(config_file.string());
    return inputs;
}

ToolCatalog discover_via_pool(ServerPool& pool) {
    ToolCatalog catalog;
    std::vector<std::string> failed;
    for (const auto& name : pool.registry().names()) {
        try {
            auto session = pool.acquire(name);
            auto tools = session->list_tools(pool.config().call_timeout);
            catalog.tools.insert(catalog.tools.end(), tools.begin(), tools.end());
        } catch (const std::exception& e) {
            failed.push_back(name + " (" + e.what() + ")");
        }
    }
    if (!failed.empty()) {
        std::string msg = "discovery failed on:";
        for (const auto& f : failed) msg += " " + f;
        throw McpError(msg);
    }
    return catalog;
}

ToolCatalog discover_ephemeral(const ServerRegistry& registry, PoolConfig config) {
    ToolCatalog catalog;
    std::vector<std::string> failed;
    for (const auto& name : registry.names()) {
        try {
            auto session = ServerSession::spawn(*registry.find(name), config.handshake_timeout);
            auto tools = session->list_tools(config.call_timeout);
            session->close();
            catalog.tools.insert(catalog.tools.end(), tools.begin(), tools.end());
        } catch (const std::exception& e) {
            failed.push_back(name + " (" + e.what() + ")");
        }
    }
    if (!failed.empty()) {
        std::string msg = "discovery failed on:";
        for (const auto& f : failed) msg += " " + f;
        throw McpError(msg);
    }
    return catalog;
}

void write_catalog_atomic(const ToolCatalog& catalog, const fs::path& path) {
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("discovery: cannot write " + tmp.string());
        out << catalog.to_json().dump(2) << "\n";
    }
    fs::rename(tmp, path);
}

std::optional<ToolCatalog> read_catalog(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) return std::nullopt;
    try {
        return ToolCatalog::from_json(j);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::pair<ToolCatalog, CatalogSource> load_or_discover(ServerPool& pool,
                                                       const DiscoverySetup& setup,
                                                       UtcSeconds now) {
    std::string current_fp;
    {
        std::vector<std::string> server_paths;
        for (const auto& name : pool.registry().names())
            server_paths.push_back(pool.registry().find(name)->command.front());
        current_fp = compute_fingerprint(
            gather_fingerprint_inputs(server_paths, setup.servers_dir, setup.config_file));
    }

    if (auto cached = read_catalog(setup.cache_path)) {
        auto age = now - cached->created_at;
        if (cached->fingerprint == current_fp && age < setup.ttl) {
            return {std::move(*cached), CatalogSource::DiskCache};
        }
    }

    ToolCatalog catalog = discover_via_pool(pool);
    catalog.fingerprint = current_fp;
    catalog.created_at = now;
    write_catalog_atomic(catalog, setup.cache_path);
    return {std::move(catalog), CatalogSource::Fresh};
}

}  // namespace tempo
