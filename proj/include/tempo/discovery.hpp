#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempo/mcpio.hpp"
#include "tempo/tool_catalog.hpp"

namespace tempo {

/// The three fingerprint components: registered server command paths, the
/// mtimes of every regular file under the servers directory, and the project
/// config file's mtime.
struct FingerprintInputs {
    std::vector<std::string> server_paths;           // stat'ed at hash time
    std::map<std::string, int64_t> source_mtimes;    // path -> mtime (integer seconds)
    int64_t config_mtime = 0;
};

// MD5 hex over the canonical serialization: every path paired with its mtime
// as `path:mtime_seconds`, the records sorted by path and joined with `\n`,
// followed by `\nconfig:<config_mtime>`. Order of server_paths is irrelevant;
// touching any watched file changes the digest. Throws naming the path if a
// server path cannot be stat'ed.
std::string compute_fingerprint(const FingerprintInputs& inputs);

std::string md5_hex(const std::string& data);

// Scans servers_dir recursively for regular files. Throws naming the path if
// the directory or config file is missing.
FingerprintInputs gather_fingerprint_inputs(const std::vector<std::string>& server_paths,
                                            const std::filesystem::path& servers_dir,
                                            const std::filesystem::path& config_file);

struct DiscoverySetup {
    std::filesystem::path cache_path;  // default: .tempo/discovery_cache.json
    std::chrono::seconds ttl{24 * 3600};
    std::filesystem::path servers_dir;
    std::filesystem::path config_file;
};

enum class CatalogSource { DiskCache, Fresh };

/// Returns the disk-cached catalog when the file exists, parses, matches the
/// current environment fingerprint, and is younger than the TTL (age == ttl
/// counts as expired). Otherwise performs live discovery through the pool,
/// rewrites the cache file atomically (write-temp-then-rename), and returns
/// Fresh. A corrupt cache file is treated as absent, never as fatal.
std::pair<ToolCatalog, CatalogSource> load_or_discover(ServerPool& pool,
                                                       const DiscoverySetup& setup,
                                                       UtcSeconds now);

// Live discovery through pooled sessions (tools/list on every registered
// server). Throws listing every server that failed.
ToolCatalog discover_via_pool(ServerPool& pool);

// Baseline-style discovery: fresh short-lived session per server, torn down
// after its tools/list. This is what the unoptimized pipeline pays per query.
ToolCatalog discover_ephemeral(const ServerRegistry& registry, PoolConfig config);

void write_catalog_atomic(const ToolCatalog& catalog, const std::filesystem::path& path);
std::optional<ToolCatalog> read_catalog(const std::filesystem::path& path);

}  // namespace tempo
