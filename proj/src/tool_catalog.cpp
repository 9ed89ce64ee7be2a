#include "tempo/tool_catalog.hpp"

#include <stdexcept>

namespace tempo {

using nlohmann::json;

bool ToolCatalog::has_tool(const std::string& server, const std::string& tool) const {
    for (const auto& sig : tools)
        if (sig.server == server && sig.tool == tool) return true;
    return false;
}

json ToolCatalog::to_json() const {
    json jtools = json::array();
    for (const auto& sig : tools) {
        jtools.push_back({{"server", sig.server},
                          {"tool", sig.tool},
                          {"description", sig.description},
                          {"params_schema", sig.params_schema}});
    }
    return {{"fingerprint", fingerprint},
            {"created_at", format_iso8601(created_at)},
            {"tools", jtools}};
}

ToolCatalog ToolCatalog::from_json(const json& j) {
    ToolCatalog cat;
    cat.fingerprint = j.at("fingerprint").get<std::string>();
    auto created = parse_iso8601(j.at("created_at").get<std::string>());
    if (!created) throw std::runtime_error("catalog: bad created_at timestamp");
    cat.created_at = *created;
    for (const json& t : j.at("tools")) {
        ToolSignature sig;
        sig.server = t.at("server").get<std::string>();
        sig.tool = t.at("tool").get<std::string>();
        sig.description = t.value("description", "");
        sig.params_schema = t.value("params_schema", json::object());
        cat.tools.push_back(std::move(sig));
    }
    return cat;
}

}  // namespace tempo
