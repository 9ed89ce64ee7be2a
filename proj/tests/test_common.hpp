#pragma once

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "tempo/mcpio.hpp"
#include "tempo/runtime.hpp"
#include "tempo/temporal.hpp"
#include "tempo/time_util.hpp"

namespace tempo::test {

inline std::filesystem::path data_dir() { return TEMPO_TEST_DATA_DIR; }
inline std::filesystem::path sim_bin() { return TEMPO_TEST_SIM_BIN; }
inline std::filesystem::path cli_bin() { return TEMPO_TEST_CLI_BIN; }

inline UtcSeconds ts(const std::string& iso) {
    auto t = parse_iso8601(iso);
    if (!t) throw std::runtime_error("bad test timestamp: " + iso);
    return *t;
}

inline TemporalClassifier make_classifier() {
    return TemporalClassifier::from_file(data_dir() / "temporal_rules.tsv");
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string templ = (std::filesystem::temp_directory_path() / "tempo-test-XXXXXX").string();
        std::vector<char> buf(templ.begin(), templ.end());
        buf.push_back('\0');
        if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed");
        path = buf.data();
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline ServerRegistry sim_registry(std::map<std::string, std::string> extra_env = {}) {
    return make_sim_registry(sim_bin(), data_dir() / "sim", extra_env);
}

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace tempo::test
