#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "tempo/discovery.hpp"
#include "test_common.hpp"

using namespace tempo;
using tempo::test::TempDir;
using tempo::test::ts;

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << content;
}

void set_mtime(const std::filesystem::path& p, int64_t unix_seconds) {
    std::filesystem::last_write_time(
        p, std::filesystem::file_time_type(std::chrono::seconds(unix_seconds) +
                                           (std::filesystem::file_time_type::clock::now() -
                                            std::chrono::file_clock::now()).zero()));
    // Portable route: utimensat via std::filesystem is awkward; fall back to touch below.
}

struct Fixture {
    TempDir dir;
    std::filesystem::path servers_dir, config_file, cache_path;
    std::vector<std::string> server_paths;

    Fixture() {
        servers_dir = dir.path / "servers";
        std::filesystem::create_directories(servers_dir / "nested");
        write_file(servers_dir / "alpha.py", "alpha");
        write_file(servers_dir / "nested" / "beta.py", "beta");
        config_file = dir.path / "project.toml";
        write_file(config_file, "[project]");
        cache_path = dir.path / ".tempo" / "discovery_cache.json";
        server_paths = {(dir.path / "bin_a").string(), (dir.path / "bin_b").string()};
        write_file(server_paths[0], "#!/bin/sh\n");
        write_file(server_paths[1], "#!/bin/sh\n");
    }

    DiscoverySetup setup() const {
        DiscoverySetup s;
        s.cache_path = cache_path;
        s.ttl = std::chrono::hours(24);
        s.servers_dir = servers_dir;
        s.config_file = config_file;
        return s;
    }
};

}  // namespace

TEST_CASE("md5: RFC 1321 reference digests") {
    CHECK(md5_hex("") == "d41d8cd98f00b204e9800998ecf8427e");
    CHECK(md5_hex("abc") == "900150983cd24fb0d6963f7d28e17f72");
    CHECK(md5_hex("message digest") == "f96b697d7cb7938d525a2f31aaf161d0");
}

TEST_CASE("fingerprint: deterministic, order-independent, mtime-sensitive") {
    Fixture fx;
    auto inputs = gather_fingerprint_inputs(fx.server_paths, fx.servers_dir, fx.config_file);
    CHECK(inputs.source_mtimes.size() == 2);

    std::string fp1 = compute_fingerprint(inputs);
    std::string fp2 = compute_fingerprint(inputs);
    CHECK(fp1 == fp2);
    CHECK(fp1.size() == 32);

    // Permuting registered server paths does not change the digest.
    FingerprintInputs permuted = inputs;
    std::swap(permuted.server_paths[0], permuted.server_paths[1]);
    CHECK(compute_fingerprint(permuted) == fp1);

    // Bumping one watched source mtime by a second changes it.
    FingerprintInputs touched = inputs;
    touched.source_mtimes.begin()->second += 1;
    CHECK(compute_fingerprint(touched) != fp1);

    // Config mtime is part of the key.
    FingerprintInputs config_touched = inputs;
    config_touched.config_mtime += 1;
    CHECK(compute_fingerprint(config_touched) != fp1);

    // A missing server path errors and names the path.
    FingerprintInputs missing = inputs;
    missing.server_paths.push_back((fx.dir.path / "no_such_binary").string());
    try {
        compute_fingerprint(missing);
        FAIL("expected an error for the missing path");
    } catch (const std::exception& e) {
        CHECK(std::string(e.what()).find("no_such_binary") != std::string::npos);
    }

    CHECK_THROWS(gather_fingerprint_inputs(fx.server_paths, fx.dir.path / "missing_dir",
                                           fx.config_file));
}

TEST_CASE("load_or_discover: fresh then disk-cached with zero server traffic") {
    Fixture fx;
    ServerPool pool(tempo::test::sim_registry());
    auto now = ts("2020-06-10T00:00:00Z");

    auto [cat1, src1] = load_or_discover(pool, fx.setup(), now);
    CHECK(src1 == CatalogSource::Fresh);
    CHECK(std::filesystem::exists(fx.cache_path));
    CHECK(cat1.tools.size() == 16);  // 5 iot + 4 fmsr + 3 tsfm + 4 wo
    CHECK(pool.total_spawn_count() == 4);

    uint64_t spawns = pool.total_spawn_count();
    uint64_t messages = pool.total_message_count();
    auto [cat2, src2] = load_or_discover(pool, fx.setup(), now + std::chrono::hours(1));
    CHECK(src2 == CatalogSource::DiskCache);
    // Warm path: zero subprocess spawns, zero wire messages.
    CHECK(pool.total_spawn_count() == spawns);
    CHECK(pool.total_message_count() == messages);

    // Round trip preserves tools and fingerprint exactly.
    CHECK(cat2.fingerprint == cat1.fingerprint);
    REQUIRE(cat2.tools.size() == cat1.tools.size());
    for (size_t i = 0; i < cat1.tools.size(); ++i) CHECK(cat2.tools[i] == cat1.tools[i]);
}

TEST_CASE("load_or_discover: ttl boundary counts age == ttl as expired") {
    Fixture fx;
    ServerPool pool(tempo::test::sim_registry());
    auto t0 = ts("2020-06-10T00:00:00Z");
    auto setup = fx.setup();
    setup.ttl = std::chrono::hours(24);

    (void)load_or_discover(pool, setup, t0);
    uint64_t messages = pool.total_message_count();

    auto [c1, within] = load_or_discover(pool, setup, t0 + std::chrono::hours(24) -
                                                          std::chrono::seconds(1));
    CHECK(within == CatalogSource::DiskCache);
    CHECK(pool.total_message_count() == messages);

    auto [c2, at_ttl] = load_or_discover(pool, setup, t0 + std::chrono::hours(24));
    CHECK(at_ttl == CatalogSource::Fresh);
    CHECK(pool.total_message_count() > messages);
}

TEST_CASE("load_or_discover: environment change invalidates the file") {
    Fixture fx;
    ServerPool pool(tempo::test::sim_registry());
    auto now = ts("2020-06-10T00:00:00Z");
    (void)load_or_discover(pool, fx.setup(), now);
    uint64_t messages = pool.total_message_count();

    // Rewrite one watched server source with a future mtime.
    write_file(fx.servers_dir / "alpha.py", "alpha v2");
    auto stamp = std::filesystem::last_write_time(fx.servers_dir / "alpha.py");
    std::filesystem::last_write_time(fx.servers_dir / "alpha.py",
                                     stamp + std::chrono::seconds(2));

    auto [cat, src] = load_or_discover(pool, fx.setup(), now + std::chrono::seconds(1));
    CHECK(src == CatalogSource::Fresh);
    CHECK(pool.total_message_count() > messages);
}

TEST_CASE("load_or_discover: corrupt cache file is rebuilt, never fatal") {
    Fixture fx;
    ServerPool pool(tempo::test::sim_registry());
    auto now = ts("2020-06-10T00:00:00Z");

    std::filesystem::create_directories(fx.cache_path.parent_path());
    write_file(fx.cache_path, "{ this is not json");
    auto [cat, src] = load_or_discover(pool, fx.setup(), now);
    CHECK(src == CatalogSource::Fresh);
    CHECK(cat.tools.size() == 16);

    // Valid JSON with missing fields is also treated as absent.
    write_file(fx.cache_path, "{\"fingerprint\": 12}");
    auto [cat2, src2] = load_or_discover(pool, fx.setup(), now);
    CHECK(src2 == CatalogSource::Fresh);
}

TEST_CASE("discovery failure lists the failing servers") {
    Fixture fx;
    ServerRegistry registry;
    registry.add({"ghost", {(fx.dir.path / "missing-binary").string()}, {}});
    ServerPool pool(std::move(registry));
    try {
        discover_via_pool(pool);
        FAIL("expected discovery error");
    } catch (const McpError& e) {
        CHECK(std::string(e.what()).find("ghost") != std::string::npos);
    }
}

TEST_CASE("atomic write: readers never observe a partial file") {
    Fixture fx;
    ToolCatalog catalog;
    catalog.fingerprint = std::string(32, 'a');
    catalog.created_at = ts("2020-06-10T00:00:00Z");
    for (int i = 0; i < 40; ++i)
        catalog.tools.push_back({"srv", "tool" + std::to_string(i),
                                 std::string(200, 'd'), nlohmann::json::object()});
    auto path = fx.dir.path / "atomic.json";
    write_catalog_atomic(catalog, path);

    std::atomic<bool> stop{false};
    std::atomic<int> reads{0}, failures{0};
    std::thread reader([&] {
        while (!stop) {
            auto cat = read_catalog(path);
            ++reads;
            if (!cat) ++failures;
        }
    });
    for (int i = 0; i < 200; ++i) {
        catalog.created_at = ts("2020-06-10T00:00:00Z") + std::chrono::seconds(i);
        write_catalog_atomic(catalog, path);
    }
    stop = true;
    reader.join();
    CHECK(reads.load() > 0);
    CHECK(failures.load() == 0);
}
