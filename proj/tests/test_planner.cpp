#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "tempo/evalharness.hpp"
#include "tempo/planner.hpp"
#include "test_common.hpp"

using namespace tempo;
using nlohmann::json;
using tempo::test::ts;

namespace {

ToolCatalog manifest_catalog() {
    ToolCatalog cat;
    for (const char* domain : {"iot", "fmsr", "tsfm", "wo"}) {
        std::ifstream in(tempo::test::data_dir() / "sim" / "manifests" /
                         (std::string(domain) + ".json"));
        json manifest = json::parse(in);
        for (const json& t : manifest)
            cat.tools.push_back({domain, t.at("name"), t.value("description", ""),
                                 t.value("inputSchema", json::object())});
    }
    cat.fingerprint = std::string(32, '0');
    cat.created_at = ts("2020-06-10T00:00:00Z");
    return cat;
}

std::shared_ptr<const ScenarioTemplates> templates() {
    static auto t = std::make_shared<ScenarioTemplates>(
        ScenarioTemplates::from_file(tempo::test::data_dir() / "stub_plans.json"));
    return t;
}

struct CannedClient : ModelClient {
    std::string payload;
    explicit CannedClient(std::string p) : payload(std::move(p)) {}
    std::string complete(const std::string&) override { return payload; }
};

StepResult ok_result(int id, json output) {
    StepResult r;
    r.step_id = id;
    r.status = StepStatus::Ok;
    r.output = std::move(output);
    return r;
}

StepResult failed_result(int id, const std::string& error) {
    StepResult r;
    r.step_id = id;
    r.status = StepStatus::Error;
    r.error = error;
    return r;
}

const std::string kQ6Text = "what failure modes of Chiller 6 are detectable by its "
                            "Efficiency sensor";

}  // namespace

TEST_CASE("make_plan: the stub client reproduces the Q6 fixture plan verbatim") {
    auto catalog = manifest_catalog();
    StubModelClient client(templates());
    Query q{"q6", kQ6Text, ts("2020-06-10T10:00:00Z"), ""};
    Plan plan = make_plan(q, catalog, client);

    json expected = {
        {"steps",
         json::array(
             {{{"step_id", 1}, {"server", "iot"}, {"tool", "list_sensors"},
               {"args", {{"asset", "Chiller 6"}}}, {"depends_on", json::array()}},
              {{"step_id", 2}, {"server", "fmsr"}, {"tool", "list_failure_modes"},
               {"args", {{"asset", "Chiller 6"}}}, {"depends_on", json::array()}},
              {{"step_id", 3}, {"server", "iot"}, {"tool", "get_sensor_window"},
               {"args", {{"asset", "Chiller 6"}, {"sensor", "Efficiency"},
                         {"start_day", "2020-06-01"}, {"end_day", "2020-06-08"}}},
               {"depends_on", json::array({1})}},
              {{"step_id", 4}, {"server", "fmsr"}, {"tool", "failure_modes_for_sensor"},
               {"args", {{"asset", "Chiller 6"}, {"sensor", "Efficiency"}}},
               {"depends_on", json::array({2})}},
              {{"step_id", 5}, {"server", "wo"}, {"tool", "list_work_orders"},
               {"args", {{"asset", "Chiller 6"}}}, {"depends_on", json::array({3, 4})}}})}};
    CHECK(plan.to_json() == expected);
    CHECK(plan.query_id == "q6");
}

TEST_CASE("stub planner: parameterized variants keep the shape, swap the args") {
    auto nine = templates()->plan_for(
        "what failure modes of Chiller 9 are detectable by its Tonnage sensor");
    json plan = json::parse(nine);
    REQUIRE(plan.at("steps").size() == 5);
    CHECK(plan["steps"][0]["args"]["asset"] == "Chiller 9");
    CHECK(plan["steps"][2]["args"]["sensor"] == "Tonnage");
    CHECK(plan["steps"][4]["depends_on"] == json::array({3, 4}));
}

TEST_CASE("stub planner: relative phrases resolve through the issue timestamp") {
    auto raw = templates()->plan_for("show anomalies for Chiller 6 from yesterday",
                                     ts("2020-06-11T08:00:00Z"));
    json plan = json::parse(raw);
    REQUIRE(plan.at("steps").size() == 1);
    CHECK(plan["steps"][0]["tool"] == "detect_anomalies");
    CHECK(plan["steps"][0]["args"]["day"] == "2020-06-10");
}

TEST_CASE("stub planner: unmatched text falls back to a one-step domain guess") {
    auto raw = templates()->plan_for("completely unrelated question about nothing");
    json plan = json::parse(raw);
    REQUIRE(plan.at("steps").size() == 1);
    CHECK(plan["steps"][0]["server"] == "iot");
    CHECK(plan["steps"][0]["tool"] == "list_assets");

    auto wo = json::parse(templates()->plan_for("anything about WO-1234 records"));
    CHECK(wo["steps"][0]["server"] == "wo");
    auto fmsr = json::parse(templates()->plan_for("possible fault conditions"));
    CHECK(fmsr["steps"][0]["server"] == "fmsr");
    auto tsfm = json::parse(templates()->plan_for("give me all forecasts"));
    CHECK(tsfm["steps"][0]["server"] == "tsfm");
}

TEST_CASE("make_plan: every bundled corpus scenario plans and validates model-free") {
    auto catalog = manifest_catalog();
    StubModelClient client(templates());
    auto rows = read_scenario_csv(tempo::test::data_dir() / "corpus.csv");
    REQUIRE(rows.size() >= 30);
    for (const auto& row : rows) {
        Query q{row.id, row.text, row.timestamp, ""};
        Plan plan = make_plan(q, catalog, client);
        CHECK(plan.steps.size() >= 1);
        // Paraphrased variants of every scenario stay plannable too.
        for (int v = 1; v <= 5; ++v) {
            Query pq{row.id, paraphrase(row.text, v, 42), row.timestamp, ""};
            CHECK(make_plan(pq, catalog, client).steps.size() >= 1);
        }
    }
}

TEST_CASE("make_plan: planning errors carry context") {
    auto catalog = manifest_catalog();

    CannedClient not_json("here is your plan: do the thing");
    Query q{"q", "some text", ts("2020-06-10T00:00:00Z"), ""};
    try {
        make_plan(q, catalog, not_json);
        FAIL("expected a planning error");
    } catch (const PlanningError& e) {
        CHECK(e.raw_output == "here is your plan: do the thing");
    }

    CannedClient cycle(R"({"steps":[
        {"step_id":1,"server":"iot","tool":"list_assets","args":{},"depends_on":[2]},
        {"step_id":2,"server":"iot","tool":"list_assets","args":{},"depends_on":[1]}]})");
    CHECK_THROWS_AS(make_plan(q, catalog, cycle), PlanningError);

    CannedClient unknown_tool(R"({"steps":[
        {"step_id":1,"server":"iot","tool":"melt_reactor","args":{},"depends_on":[]}]})");
    try {
        make_plan(q, catalog, unknown_tool);
        FAIL("expected a planning error");
    } catch (const PlanningError& e) {
        CHECK(std::string(e.what()).find("melt_reactor") != std::string::npos);
    }

    CannedClient empty(R"({"steps":[]})");
    CHECK_THROWS_AS(make_plan(q, catalog, empty), PlanningError);

    ToolCatalog no_tools;
    CannedClient whatever("{}");
    CHECK_THROWS_AS(make_plan(q, no_tools, whatever), PlanningError);
}

TEST_CASE("property: every corruption class is rejected") {
    auto catalog = manifest_catalog();
    json base = json::parse(templates()->plan_for(kQ6Text));
    // Sanity: the uncorrupted plan validates.
    validate_plan(parse_plan_json(base.dump(), "q"), catalog);

    std::mt19937_64 rng(59);
    for (int round = 0; round < 100; ++round) {
        json plan = base;
        auto& steps = plan["steps"];
        size_t n = steps.size();
        switch (round % 4) {
            case 0: {  // cycle: forward or self dependency
                size_t victim = rng() % n;
                int target = steps[std::min(n - 1, victim + rng() % n)]["step_id"];
                steps[victim]["depends_on"].push_back(target);
                break;
            }
            case 1: {  // duplicate step id
                size_t a = rng() % n, b = (a + 1 + rng() % (n - 1)) % n;
                steps[a]["step_id"] = steps[b]["step_id"];
                break;
            }
            case 2: {  // unknown tool
                steps[rng() % n]["tool"] = "tool_" + std::to_string(rng());
                break;
            }
            default: {  // dangling placeholder outside depends_on
                steps[rng() % n]["args"]["extra"] = "$step" + std::to_string(40 + rng() % 5);
                break;
            }
        }
        CHECK_THROWS_AS(validate_plan(parse_plan_json(plan.dump(), "q"), catalog),
                        PlanningError);
    }
}

TEST_CASE("resolve_args: placeholder substitution") {
    std::map<int, StepResult> completed;
    completed[1] = ok_result(1, json("Chiller6"));
    completed[2] = ok_result(2, json{{"mean", 12.5}, {"count", 3}});

    PlanStep step;
    step.step_id = 3;
    step.depends_on = {1, 2};

    SUBCASE("whole-leaf string output substitutes raw") {
        step.args_template = {{"asset", "$step1"}};
        CHECK(resolve_args(step, completed) == json{{"asset", "Chiller6"}});
    }
    SUBCASE("whole-leaf non-string output embeds the JSON value") {
        step.args_template = {{"stats", "$step2"}};
        CHECK(resolve_args(step, completed) ==
              json{{"stats", {{"mean", 12.5}, {"count", 3}}}});
    }
    SUBCASE("in-string splice renders non-strings as compact JSON") {
        step.args_template = {{"note", "stats were $step2 for $step1"}};
        auto out = resolve_args(step, completed);
        CHECK(out["note"] == "stats were {\"count\":3,\"mean\":12.5} for Chiller6");
    }
    SUBCASE("no placeholders is the identity, and is idempotent") {
        step.args_template = {{"asset", "Chiller 6"}, {"n", 3}, {"nested", {{"k", true}}}};
        auto once = resolve_args(step, completed);
        CHECK(once == step.args_template);
        PlanStep again = step;
        again.args_template = once;
        CHECK(resolve_args(again, completed) == once);
    }
    SUBCASE("failed or missing dependencies raise resolution errors") {
        completed[4] = failed_result(4, "tool exploded");
        step.depends_on = {4, 5};
        step.args_template = {{"x", "$step4"}};
        CHECK_THROWS_AS(resolve_args(step, completed), ResolutionError);
        step.args_template = {{"x", "$step5"}};
        CHECK_THROWS_AS(resolve_args(step, completed), ResolutionError);
    }
}

TEST_CASE("summarize: stub output is deterministic and ordered") {
    StubModelClient client(templates());
    Query q{"q", "some question", ts("2020-06-10T00:00:00Z"), ""};

    std::vector<StepResult> results;
    results.push_back(ok_result(1, json{{"assets", json::array({"Chiller 6"})}}));
    results.push_back(ok_result(2, json("plain string output")));

    std::string summary = summarize(q, results, client);
    CHECK(summary.rfind("Summary (2/2 steps ok):", 0) == 0);
    auto pos1 = summary.find("[step 1]");
    auto pos2 = summary.find("[step 2]");
    REQUIRE(pos1 != std::string::npos);
    REQUIRE(pos2 != std::string::npos);
    CHECK(pos1 < pos2);
    CHECK(summary == summarize(q, results, client));

    std::vector<StepResult> failed;
    failed.push_back(failed_result(1, "iot unreachable"));
    failed.push_back(failed_result(2, "fmsr unreachable"));
    std::string failure = summarize(q, failed, client);
    CHECK(failure.rfind("All 2 steps failed:", 0) == 0);
    CHECK(failure.find("iot unreachable") != std::string::npos);
    CHECK(failure.find("fmsr unreachable") != std::string::npos);

    CHECK_THROWS_AS(summarize(q, {}, client), std::invalid_argument);

    struct ExplodingClient : ModelClient {
        std::string complete(const std::string&) override { throw std::runtime_error("down"); }
    } exploding;
    CHECK_THROWS_AS(summarize(q, results, exploding), SummarizationError);
}

TEST_CASE("scenario templates: file loading and introspection") {
    auto t = templates();
    CHECK(t->family_count() == 14);
    CHECK_THROWS(ScenarioTemplates::from_file("/nonexistent/templates.json"));
}
