#include "tempo/plan.hpp"

namespace tempo {

const char* to_string(StepStatus s) {
    switch (s) {
        case StepStatus::Ok: return "ok";
        case StepStatus::Error: return "error";
        case StepStatus::Skipped: return "skipped";
    }
    return "?";
}

const PlanStep* Plan::find_step(int step_id) const {
    for (const auto& s : steps)
        if (s.step_id == step_id) return &s;
    return nullptr;
}

nlohmann::json Plan::to_json() const {
    nlohmann::json jsteps = nlohmann::json::array();
    for (const auto& s : steps) {
        jsteps.push_back({{"step_id", s.step_id},
                          {"server", s.server},
                          {"tool", s.tool},
                          {"args", s.args_template},
                          {"depends_on", s.depends_on}});
    }
    return {{"steps", jsteps}};
}

}  // namespace tempo
