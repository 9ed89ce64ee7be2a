#include "tempo/planner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "tempo/scoring.hpp"

namespace tempo {

using nlohmann::json;

// ── prompts ─────────────────────────────────────────────────────────────

std::string build_planning_prompt(const Query& query, const ToolCatalog& catalog) {
    std::ostringstream out;
    out << "TASK: plan\n";
    out << "TOOL CATALOG:\n";
    for (const auto& sig : catalog.tools)
        out << "- " << sig.server << "." << sig.tool << ": " << sig.description << "\n";
    json q = {{"id", query.id},
              {"text", query.text},
              {"issued_at", format_iso8601(query.issued_at)}};
    out << "QUERY_JSON:\n" << q.dump() << "\n";
    out << "Reply with a JSON object {\"steps\": [{\"step_id\", \"server\", \"tool\", "
           "\"args\", \"depends_on\"}...]} using only catalog tools.\n";
    return out.str();
}

std::string build_summary_prompt(const Query& query, const std::vector<StepResult>& results) {
    std::ostringstream out;
    out << "TASK: summarize\n";
    json q = {{"id", query.id}, {"text", query.text}};
    out << "QUERY_JSON:\n" << q.dump() << "\n";
    json jres = json::array();
    for (const auto& r : results) {
        json item = {{"step_id", r.step_id}, {"status", to_string(r.status)}};
        if (r.output) item["output"] = *r.output;
        if (r.error) item["error"] = *r.error;
        jres.push_back(std::move(item));
    }
    out << "RESULTS_JSON:\n" << json{{"results", jres}}.dump() << "\n";
    out << "Reply with a concise answer to the query based on the results.\n";
    return out.str();
}

// ── plan parsing and validation ─────────────────────────────────────────

Plan parse_plan_json(const std::string& raw, const std::string& query_id) {
    json j = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded())
        throw PlanningError("planner output is not valid JSON", raw);
    if (!j.is_object() || !j.contains("steps") || !j["steps"].is_array())
        throw PlanningError("planner output lacks a steps array", raw);

    Plan plan;
    plan.query_id = query_id;
    for (const json& js : j["steps"]) {
        if (!js.is_object()) throw PlanningError("plan step is not an object", raw);
        PlanStep step;
        if (!js.contains("step_id") || !js["step_id"].is_number_integer())
            throw PlanningError("plan step lacks an integer step_id", raw);
        step.step_id = js["step_id"].get<int>();
        step.server = js.value("server", "");
        step.tool = js.value("tool", "");
        if (step.server.empty() || step.tool.empty())
            throw PlanningError("plan step lacks server/tool", raw);
        step.args_template = js.value("args", json::object());
        if (!step.args_template.is_object())
            throw PlanningError("plan step args is not an object", raw);
        for (const json& d : js.value("depends_on", json::array())) {
            if (!d.is_number_integer())
                throw PlanningError("plan step depends_on contains a non-integer", raw);
            step.depends_on.insert(d.get<int>());
        }
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

namespace {

const std::regex& step_placeholder_re() {
    static const std::regex re(R"(\$step(\d+))");
    return re;
}

void collect_placeholders(const json& node, std::set<int>& out) {
    if (node.is_string()) {
        const std::string& s = node.get_ref<const std::string&>();
        for (auto it = std::sregex_iterator(s.begin(), s.end(), step_placeholder_re());
             it != std::sregex_iterator(); ++it)
            out.insert(std::stoi((*it)[1].str()));
    } else if (node.is_object() || node.is_array()) {
        for (const auto& child : node) collect_placeholders(child, out);
    }
}

}  // namespace

void validate_plan(const Plan& plan, const ToolCatalog& catalog) {
    if (plan.steps.empty()) throw PlanningError("plan has no steps");
    std::set<int> seen;
    for (const auto& step : plan.steps) {
        if (step.step_id <= 0)
            throw PlanningError("step_id must be positive, got " +
                                std::to_string(step.step_id));
        if (!seen.insert(step.step_id).second)
            throw PlanningError("duplicate step_id " + std::to_string(step.step_id));
        for (int dep : step.depends_on) {
            // Dependencies must point at earlier-declared steps; this also
            // rules out cycles and self-dependencies.
            if (dep == step.step_id)
                throw PlanningError("step " + std::to_string(step.step_id) +
                                    " depends on itself (cycle)");
            if (!seen.count(dep))
                throw PlanningError("step " + std::to_string(step.step_id) + " depends on " +
                                    std::to_string(dep) +
                                    ", which is not an earlier step (cycle or unknown id)");
        }
        if (!catalog.has_tool(step.server, step.tool))
            throw PlanningError("step " + std::to_string(step.step_id) + " uses unknown tool " +
                                step.server + "." + step.tool);
        std::set<int> refs;
        collect_placeholders(step.args_template, refs);
        for (int ref : refs)
            if (!step.depends_on.count(ref))
                throw PlanningError("step " + std::to_string(step.step_id) + " references $step" +
                                    std::to_string(ref) + " outside its depends_on set");
    }
}

Plan make_plan(const Query& query, const ToolCatalog& catalog, ModelClient& client) {
    if (catalog.tools.empty()) throw PlanningError("tool catalog is empty");
    std::string raw;
    try {
        raw = client.complete(build_planning_prompt(query, catalog));
    } catch (const std::exception& e) {
        throw PlanningError(std::string("planning client failed: ") + e.what());
    }
    Plan plan = parse_plan_json(raw, query.id);
    validate_plan(plan, catalog);
    return plan;
}

// ── argument resolution ─────────────────────────────────────────────────

namespace {

std::string render_output(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

json resolve_node(const json& node, const std::map<int, StepResult>& completed) {
    if (node.is_string()) {
        const std::string& s = node.get_ref<const std::string&>();
        std::smatch whole;
        auto fetch = [&](int id) -> const json& {
            auto it = completed.find(id);
            if (it == completed.end())
                throw ResolutionError("args reference $step" + std::to_string(id) +
                                      " which has not completed");
            if (it->second.status != StepStatus::Ok || !it->second.output)
                throw ResolutionError("args reference $step" + std::to_string(id) +
                                      " which did not succeed");
            return *it->second.output;
        };
        if (std::regex_match(s, whole, step_placeholder_re()))
            return fetch(std::stoi(whole[1].str()));
        std::string out;
        std::string remaining = s;
        std::smatch m;
        while (std::regex_search(remaining, m, step_placeholder_re())) {
            out += m.prefix().str();
            out += render_output(fetch(std::stoi(m[1].str())));
            remaining = m.suffix().str();
        }
        out += remaining;
        return json(out);
    }
    if (node.is_object()) {
        json out = json::object();
        for (auto it = node.begin(); it != node.end(); ++it)
            out[it.key()] = resolve_node(it.value(), completed);
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (const auto& child : node) out.push_back(resolve_node(child, completed));
        return out;
    }
    return node;
}

}  // namespace

json resolve_args(const PlanStep& step, const std::map<int, StepResult>& completed) {
    return resolve_node(step.args_template, completed);
}

// ── summarization ───────────────────────────────────────────────────────

std::string summarize(const Query& query, const std::vector<StepResult>& results,
                      ModelClient& client) {
    if (results.empty()) throw std::invalid_argument("summarize: no results");
    try {
        return client.complete(build_summary_prompt(query, results));
    } catch (const std::exception& e) {
        throw SummarizationError(std::string("summarization client failed: ") + e.what());
    }
}

// ── scenario templates / stub planner ───────────────────────────────────

ScenarioTemplates ScenarioTemplates::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("templates: cannot open " + path.string());
    json j = json::parse(in);
    ScenarioTemplates t;
    for (const json& jf : j) {
        Family f;
        f.name = jf.at("family").get<std::string>();
        for (const json& tok : jf.at("require")) f.require.push_back(tok.get<std::string>());
        if (jf.contains("defaults"))
            for (const auto& [k, v] : jf["defaults"].items())
                f.defaults[k] = v.get<std::string>();
        f.steps = jf.at("steps");
        t.families_.push_back(std::move(f));
    }
    if (t.families_.empty()) throw std::runtime_error("templates: no families in " + path.string());
    return t;
}

std::vector<std::string> ScenarioTemplates::family_names() const {
    std::vector<std::string> out;
    for (const auto& f : families_) out.push_back(f.name);
    return out;
}

namespace {

std::string lower(std::string s) {
    for (auto& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::map<std::string, std::string> extract_params(const std::string& text,
                                                  std::optional<UtcSeconds> issued_at) {
    std::map<std::string, std::string> p;

    static const std::regex asset_re(R"((chiller|ahu|pump)[\s-]*(\d+))", std::regex::icase);
    std::smatch m;
    if (std::regex_search(text, m, asset_re)) {
        std::string kind = lower(m[1].str());
        std::string canon = kind == "chiller" ? "Chiller" : (kind == "ahu" ? "AHU" : "Pump");
        p["asset"] = canon + " " + m[2].str();
    }

    static const std::vector<std::string> sensors = {"% Loaded", "Supply Temp", "Fan Speed",
                                                     "Flow Rate", "Power Draw", "Tonnage",
                                                     "Efficiency"};
    std::string low = lower(text);
    for (const auto& s : sensors) {
        if (low.find(lower(s)) != std::string::npos) {
            p["sensor"] = s;
            break;
        }
    }

    static const std::regex site_re(R"((main|east|west)\s+site)", std::regex::icase);
    if (std::regex_search(text, m, site_re)) {
        std::string site = m[1].str();
        for (auto& c : site) c = char(std::toupper(static_cast<unsigned char>(c)));
        p["site"] = site;
    }

    static const std::regex wo_re(R"(wo-(\d+))", std::regex::icase);
    if (std::regex_search(text, m, wo_re)) p["wo"] = "WO-" + m[1].str();

    static const std::regex mode_re(R"(fm-([a-z0-9]+)-(\d+))", std::regex::icase);
    if (std::regex_search(text, m, mode_re)) {
        std::string mode = m.str();
        for (auto& c : mode) c = char(std::toupper(static_cast<unsigned char>(c)));
        p["mode"] = mode;
    }

    static const std::regex horizon_re(R"((\d+)\s+days?)");
    if (std::regex_search(text, m, horizon_re)) p["horizon"] = m[1].str();

    std::optional<TimeWindow> win = resolve_anchored_phrase(text);
    if (!win && issued_at) win = resolve_relative_phrase(text, *issued_at);
    if (win) {
        p["start"] = format_iso_date(day_of(win->start));
        p["end"] = format_iso_date(day_of(win->end));
    }
    return p;
}

const std::regex& param_placeholder_re() {
    static const std::regex re(R"(\$\{([a-z]+)\})");
    return re;
}

bool is_integer_literal(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isdigit(c); });
}

json instantiate(const json& node, const std::map<std::string, std::string>& params,
                 const std::string& family) {
    if (node.is_string()) {
        const std::string& s = node.get_ref<const std::string&>();
        auto value_of = [&](const std::string& key) {
            auto it = params.find(key);
            if (it == params.end())
                throw std::runtime_error("templates: family " + family +
                                         " has no value for ${" + key + "}");
            return it->second;
        };
        std::smatch whole;
        if (std::regex_match(s, whole, param_placeholder_re())) {
            std::string v = value_of(whole[1].str());
            if (is_integer_literal(v)) return json(std::stol(v));
            return json(v);
        }
        std::string out;
        std::string remaining = s;
        std::smatch m;
        while (std::regex_search(remaining, m, param_placeholder_re())) {
            out += m.prefix().str();
            out += value_of(m[1].str());
            remaining = m.suffix().str();
        }
        out += remaining;
        return json(out);
    }
    if (node.is_object()) {
        json out = json::object();
        for (auto it = node.begin(); it != node.end(); ++it)
            out[it.key()] = instantiate(it.value(), params, family);
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (const auto& child : node) out.push_back(instantiate(child, params, family));
        return out;
    }
    return node;
}

json fallback_plan(const std::string& text,
                   const std::map<std::string, std::string>& params) {
    auto tokens = alnum_tokens(text);
    std::set<std::string> tok(tokens.begin(), tokens.end());
    json step = {{"step_id", 1}, {"depends_on", json::array()}};
    if (tok.count("order") || tok.count("orders") || params.count("wo")) {
        step["server"] = "wo";
        step["tool"] = "list_work_orders";
        step["args"] = params.count("asset") ? json{{"asset", params.at("asset")}}
                                             : json::object();
    } else if (tok.count("forecast") || tok.count("forecasts") || tok.count("models")) {
        step["server"] = "tsfm";
        step["tool"] = "list_models";
        step["args"] = json::object();
    } else if (tok.count("failure") || tok.count("fault") || tok.count("faults")) {
        step["server"] = "fmsr";
        step["tool"] = "list_failure_modes";
        step["args"] = params.count("asset") ? json{{"asset", params.at("asset")}}
                                             : json::object();
    } else {
        step["server"] = "iot";
        step["tool"] = "list_assets";
        step["args"] = json::object();
    }
    return json{{"steps", json::array({step})}};
}

}  // namespace

std::string ScenarioTemplates::plan_for(const std::string& query_text,
                                        std::optional<UtcSeconds> issued_at) const {
    auto tokens = alnum_tokens(query_text);
    std::set<std::string> tok(tokens.begin(), tokens.end());
    auto params = extract_params(query_text, issued_at);

    for (const auto& f : families_) {
        bool all = true;
        for (const auto& needed : f.require)
            if (!tok.count(needed)) {
                all = false;
                break;
            }
        if (!all) continue;
        std::map<std::string, std::string> merged = f.defaults;
        for (const auto& [k, v] : params) merged[k] = v;
        json steps = instantiate(f.steps, merged, f.name);
        return json{{"steps", steps}}.dump();
    }
    return fallback_plan(query_text, params).dump();
}

// ── stub model client ───────────────────────────────────────────────────

StubModelClient::StubModelClient(std::shared_ptr<const ScenarioTemplates> templates)
    : templates_(std::move(templates)) {
    if (!templates_) throw std::invalid_argument("stub client: templates required");
}

namespace {

json parse_marker_line(const std::string& prompt, const std::string& marker) {
    auto pos = prompt.find(marker);
    if (pos == std::string::npos)
        throw std::runtime_error("stub client: prompt lacks " + marker);
    auto start = pos + marker.size();
    auto end = prompt.find('\n', start);
    if (end == std::string::npos) end = prompt.size();
    return json::parse(prompt.substr(start, end - start));
}

}  // namespace

std::string StubModelClient::complete(const std::string& prompt) {
    if (prompt.rfind("TASK: plan", 0) == 0) {
        json q = parse_marker_line(prompt, "QUERY_JSON:\n");
        std::optional<UtcSeconds> issued_at;
        if (q.contains("issued_at"))
            issued_at = parse_iso8601(q["issued_at"].get<std::string>());
        return templates_->plan_for(q.at("text").get<std::string>(), issued_at);
    }
    if (prompt.rfind("TASK: summarize", 0) == 0) {
        json payload = parse_marker_line(prompt, "RESULTS_JSON:\n");
        const json& results = payload.at("results");
        int ok = 0;
        for (const json& r : results)
            if (r.value("status", "") == "ok") ++ok;
        std::ostringstream out;
        if (ok > 0)
            out << "Summary (" << ok << "/" << results.size() << " steps ok):";
        else
            out << "All " << results.size() << " steps failed:";
        for (const json& r : results) {
            out << "\n[step " << r.at("step_id").get<int>() << "] ";
            std::string status = r.value("status", "");
            if (status == "ok")
                out << "ok: " << r.at("output").dump();
            else if (status == "error")
                out << "error: " << r.value("error", "unknown error");
            else
                out << "skipped";
        }
        return out.str();
    }
    throw std::runtime_error("stub client: unrecognized prompt");
}

}  // namespace tempo
