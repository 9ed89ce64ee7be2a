#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace tempo {

/// One tool invocation in a plan DAG. String leaves of args_template may
/// contain `$stepN` placeholders referencing outputs of dependency steps:
/// a leaf that is exactly `$stepN` is replaced by step N's output value;
/// otherwise each occurrence inside the string is spliced in (strings raw,
/// anything else as compact JSON).
struct PlanStep {
    int step_id = 0;
    std::string server;
    std::string tool;
    nlohmann::json args_template = nlohmann::json::object();
    std::set<int> depends_on;
};

struct Plan {
    std::vector<PlanStep> steps;
    std::string query_id;

    const PlanStep* find_step(int step_id) const;
    nlohmann::json to_json() const;
};

enum class StepStatus { Ok, Error, Skipped };

const char* to_string(StepStatus s);

struct StepResult {
    int step_id = 0;
    StepStatus status = StepStatus::Skipped;
    std::optional<nlohmann::json> output;  // present iff Ok
    std::optional<std::string> error;
    std::chrono::microseconds latency{0};
    int layer_index = 0;
};

}  // namespace tempo
