#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "tempo/mcpio.hpp"

namespace tempo {

// Repo data directory: $TEMPO_DATA_DIR if set, else the baked-in source path.
std::filesystem::path default_data_dir();

// Simulator binary: $TEMPO_SIM_BIN if set, else "tempo-sim" next to the
// running executable.
std::filesystem::path default_sim_bin();

// Registry with the four simulated domain servers (iot, fmsr, tsfm, wo).
// extra_env entries (e.g. TEMPO_SIM_LATENCY_MS) are passed to every server.
ServerRegistry make_sim_registry(const std::filesystem::path& sim_bin,
                                 const std::filesystem::path& sim_data_dir,
                                 const std::map<std::string, std::string>& extra_env = {});

}  // namespace tempo
