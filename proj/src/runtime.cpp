#include "tempo/runtime.hpp"

#include <unistd.h>

#include <cstdlib>

#ifndef TEMPO_DEFAULT_DATA_DIR
#define TEMPO_DEFAULT_DATA_DIR "data"
#endif

namespace tempo {

namespace fs = std::filesystem;

fs::path default_data_dir() {
    if (const char* env = std::getenv("TEMPO_DATA_DIR"); env && *env) return env;
    return TEMPO_DEFAULT_DATA_DIR;
}

fs::path default_sim_bin() {
    if (const char* env = std::getenv("TEMPO_SIM_BIN"); env && *env) return env;
    std::error_code ec;
    fs::path self = fs::read_symlink("/proc/self/exe", ec);
    if (!ec) return self.parent_path() / "tempo-sim";
    return "tempo-sim";
}

ServerRegistry make_sim_registry(const fs::path& sim_bin, const fs::path& sim_data_dir,
                                 const std::map<std::string, std::string>& extra_env) {
    ServerRegistry registry;
    for (const char* domain : {"iot", "fmsr", "tsfm", "wo"}) {
        ServerSpec spec;
        spec.name = domain;
        spec.command = {sim_bin.string(), "--domain", domain};
        spec.env = extra_env;
        spec.env["TEMPO_SIM_DATA_DIR"] = sim_data_dir.string();
        registry.add(std::move(spec));
    }
    return registry;
}

}  // namespace tempo
