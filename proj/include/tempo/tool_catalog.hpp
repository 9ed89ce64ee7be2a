#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tempo/time_util.hpp"

namespace tempo {

struct ToolSignature {
    std::string server;
    std::string tool;
    std::string description;
    nlohmann::json params_schema;  // JSON-Schema subset

    bool operator==(const ToolSignature&) const = default;
};

/// Aggregated tool signatures from all registered servers. The fingerprint
/// ties the catalog to the environment it was discovered in.
struct ToolCatalog {
    std::vector<ToolSignature> tools;
    std::string fingerprint;  // 32 hex chars
    UtcSeconds created_at{};

    bool has_tool(const std::string& server, const std::string& tool) const;

    nlohmann::json to_json() const;
    static ToolCatalog from_json(const nlohmann::json& j);
};

}  // namespace tempo
