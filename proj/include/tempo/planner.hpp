#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempo/plan.hpp"
#include "tempo/temporal.hpp"
#include "tempo/tool_catalog.hpp"

namespace tempo {

struct PlanningError : std::runtime_error {
    PlanningError(const std::string& message, std::string raw_output_ = "")
        : std::runtime_error(message), raw_output(std::move(raw_output_)) {}
    std::string raw_output;
};

struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SummarizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Text-completion backend for planning and summarization. Implementations
/// declare their own thread-compatibility; the pipeline serializes calls per
/// query.
class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual std::string complete(const std::string& prompt) = 0;
};

// Prompt construction is fixed so that deterministic clients can parse their
// input reliably. Both prompts embed their payload as a single JSON line.
std::string build_planning_prompt(const Query& query, const ToolCatalog& catalog);
std::string build_summary_prompt(const Query& query, const std::vector<StepResult>& results);

// Strict plan schema: {"steps":[{"step_id":int,"server":str,"tool":str,
// "args":object,"depends_on":[int...]}...]}. Raw model output is attached to
// the error on parse failure.
Plan parse_plan_json(const std::string& raw, const std::string& query_id);

// Rejects duplicate step ids, dependencies on non-earlier steps (which also
// rules out cycles), unknown tools, placeholders outside depends_on, and
// plans with no steps.
void validate_plan(const Plan& plan, const ToolCatalog& catalog);

Plan make_plan(const Query& query, const ToolCatalog& catalog, ModelClient& client);

// Replaces `$stepN` placeholders from completed dependency outputs. Every
// referenced step must be present with status Ok.
nlohmann::json resolve_args(const PlanStep& step, const std::map<int, StepResult>& completed);

std::string summarize(const Query& query, const std::vector<StepResult>& results,
                      ModelClient& client);

/// Keyword-matched plan templates backing the deterministic stub planner.
/// Loaded from a JSON file: [{"family":str,"require":[token...],
/// "defaults":{param:value},"steps":[...]}]. Step string leaves may contain
/// `${asset}`, `${sensor}`, `${site}`, `${start}`, `${end}`, `${wo}`,
/// `${horizon}` parameters, filled from the query text (or the family
/// defaults when absent).
class ScenarioTemplates {
public:
    static ScenarioTemplates from_file(const std::filesystem::path& path);

    // The stub planning rule: first matching family instantiated with
    // parameters extracted from the text, else a one-step fallback plan
    // against the domain guessed from keywords. Returns plan JSON. The issue
    // timestamp, when known, lets relative time phrases resolve into concrete
    // window parameters.
    std::string plan_for(const std::string& query_text,
                         std::optional<UtcSeconds> issued_at = std::nullopt) const;

    size_t family_count() const { return families_.size(); }
    std::vector<std::string> family_names() const;

private:
    struct Family {
        std::string name;
        std::vector<std::string> require;
        std::map<std::string, std::string> defaults;
        nlohmann::json steps;
    };
    std::vector<Family> families_;
};

/// Deterministic ModelClient covering every bundled scenario, so the whole
/// harness runs model-free. Planning prompts go through ScenarioTemplates;
/// summary prompts concatenate ok-step outputs in step order under a fixed
/// header.
class StubModelClient : public ModelClient {
public:
    explicit StubModelClient(std::shared_ptr<const ScenarioTemplates> templates);
    std::string complete(const std::string& prompt) override;

private:
    std::shared_ptr<const ScenarioTemplates> templates_;
};

}  // namespace tempo
