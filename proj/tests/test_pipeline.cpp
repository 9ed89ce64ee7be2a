#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tempo/evalharness.hpp"
#include "tempo/pipeline.hpp"
#include "test_common.hpp"

using namespace tempo;
using namespace std::chrono;
using tempo::test::TempDir;
using tempo::test::ts;

namespace {

PipelineDeps stub_deps() {
    PipelineDeps deps;
    deps.classifier = std::make_shared<TemporalClassifier>(tempo::test::make_classifier());
    deps.embedder = std::make_shared<TrigramEmbedder>(256);
    deps.judger = std::make_shared<JaccardJudger>();
    auto templates = std::make_shared<ScenarioTemplates>(
        ScenarioTemplates::from_file(tempo::test::data_dir() / "stub_plans.json"));
    deps.model = std::make_shared<StubModelClient>(templates);
    return deps;
}

DiscoverySetup discovery_setup(const TempDir& dir) {
    DiscoverySetup s;
    s.cache_path = dir.path / ".tempo" / "discovery_cache.json";
    s.ttl = hours(24);
    s.servers_dir = tempo::test::data_dir() / "sim";
    s.config_file = tempo::test::data_dir() / "stub_plans.json";
    return s;
}

PipelineConfig combined_config(const TempDir& dir, ClockMode clock = ClockMode::Measured) {
    PipelineConfig cfg;
    cfg.cache_enabled = true;
    cfg.discovery_cache_enabled = true;
    cfg.parallel_execution = true;
    cfg.clock = clock;
    cfg.discovery = discovery_setup(dir);
    return cfg;
}

PipelineConfig baseline_config(const TempDir& dir, ClockMode clock = ClockMode::Measured) {
    PipelineConfig cfg;
    cfg.cache_enabled = false;
    cfg.discovery_cache_enabled = false;
    cfg.parallel_execution = false;
    cfg.clock = clock;
    cfg.discovery = discovery_setup(dir);
    return cfg;
}

Query query(const std::string& id, const std::string& text,
            const std::string& when = "2020-06-10T09:00:00Z") {
    return Query{id, text, ts(when), ""};
}

const std::string kStaticText = "list all failure modes for Chiller 9";
const std::string kQ6Text =
    "what failure modes of Chiller 6 are detectable by its Efficiency sensor";
const std::string kLongFrame =
    "please provide a detailed summary of the Tonnage sensor readings recorded for "
    "Chiller 6 at the MAIN site covering the period from 2020-06-01 to 2020-06-07 inclusive";

void check_phase_accounting(const PipelineOutcome& out) {
    auto sum = out.timings.phase_sum();
    CHECK(out.timings.total >= sum);
    CHECK(double(out.timings.total.count()) <= double(sum.count()) * 1.1 + 200.0);
}

}  // namespace

TEST_CASE("pipeline: miss then exact repeat collapses to a fast hit") {
    TempDir dir;
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), stub_deps());

    auto miss = pipeline.answer_query(query("m1", kStaticText));
    CHECK(miss.cache_decision == PipelineCacheDecision::Miss);
    CHECK(miss.bucket == TemporalBucket::Static);
    REQUIRE(miss.plan.has_value());
    REQUIRE(miss.step_results.has_value());
    CHECK_FALSE(miss.error.has_value());
    CHECK(miss.answer.rfind("Summary", 0) == 0);
    check_phase_accounting(miss);

    auto hit = pipeline.answer_query(query("m2", kStaticText));
    CHECK(hit.cache_decision == PipelineCacheDecision::Hit);
    CHECK(hit.answer == miss.answer);
    // Hit outcome: no plan, no execution, just the lookup.
    CHECK_FALSE(hit.plan.has_value());
    CHECK(hit.timings.execution == microseconds{0});
    CHECK(hit.timings.discovery == microseconds{0});
    CHECK(hit.timings.total < milliseconds{50});
    check_phase_accounting(hit);
}

TEST_CASE("pipeline: volatile queries bypass the cache but run fully, never insert") {
    TempDir dir;
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), stub_deps());
    auto out = pipeline.answer_query(query("v1", "what is the current load on Chiller 6"));
    CHECK(out.cache_decision == PipelineCacheDecision::Bypass);
    CHECK(out.bucket == TemporalBucket::Volatile);
    REQUIRE(out.plan.has_value());
    CHECK(out.answer.rfind("Summary", 0) == 0);
    CHECK(pipeline.cache().stats().inserts == 0);
    CHECK(pipeline.cache().size() == 0);

    // Repeat: still bypass, still no insert.
    auto again = pipeline.answer_query(query("v2", "what is the current load on Chiller 6"));
    CHECK(again.cache_decision == PipelineCacheDecision::Bypass);
    CHECK(pipeline.cache().stats().inserts == 0);
}

TEST_CASE("pipeline: hits never re-insert") {
    TempDir dir;
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), stub_deps());
    pipeline.answer_query(query("a", kStaticText));
    CHECK(pipeline.cache().stats().inserts == 1);
    pipeline.answer_query(query("b", kStaticText));
    pipeline.answer_query(query("c", kStaticText));
    CHECK(pipeline.cache().stats().inserts == 1);
}

TEST_CASE("pipeline: cold combined run times every phase") {
    TempDir dir;
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), stub_deps());
    auto out = pipeline.answer_query(query("q", kQ6Text));
    CHECK(out.cache_decision == PipelineCacheDecision::Miss);
    CHECK(out.discovery_source == CatalogSource::Fresh);
    CHECK(out.timings.cache_lookup > microseconds{0});
    CHECK(out.timings.discovery > microseconds{0});
    CHECK(out.timings.planning > microseconds{0});
    CHECK(out.timings.execution > microseconds{0});
    CHECK(out.timings.summarization > microseconds{0});
    check_phase_accounting(out);

    // Second distinct query in the same process: discovery is now disk-warm.
    auto warm = pipeline.answer_query(query("q2", kStaticText));
    CHECK(warm.discovery_source == CatalogSource::DiskCache);
    CHECK(warm.timings.discovery < milliseconds{10});
    CHECK(pipeline.pool().total_spawn_count() == 4);
}

TEST_CASE("pipeline: anchored windows gate reuse end to end") {
    TempDir dir;
    auto cfg = combined_config(dir);
    Pipeline pipeline(cfg, tempo::test::sim_registry(), stub_deps());
    auto seeded = pipeline.answer_query(query("june", kLongFrame));
    CHECK(seeded.cache_decision == PipelineCacheDecision::Miss);
    CHECK(seeded.bucket == TemporalBucket::Anchored);
    CHECK(pipeline.cache().stats().inserts == 1);

    // Same frame, shifted window: must miss while the gate is on.
    std::string december = shift_parameters(kLongFrame, 0);
    auto miss = pipeline.answer_query(query("dec", december, "2020-12-10T09:00:00Z"));
    CHECK(miss.cache_decision == PipelineCacheDecision::Miss);

    // Identical repeat of the june query: hits, windows equal.
    auto hit = pipeline.answer_query(query("june2", kLongFrame));
    CHECK(hit.cache_decision == PipelineCacheDecision::Hit);

    // With the gate disabled the December twin is served stale june data.
    auto no_gate_cfg = combined_config(dir);
    no_gate_cfg.thresholds.window_gate = false;
    Pipeline unguarded(no_gate_cfg, tempo::test::sim_registry(), stub_deps());
    unguarded.answer_query(query("june", kLongFrame));
    auto stale = unguarded.answer_query(query("dec", december, "2020-12-10T09:00:00Z"));
    CHECK(stale.cache_decision == PipelineCacheDecision::Hit);
}

TEST_CASE("pipeline: planning failure aborts with an error outcome") {
    struct BadPlanner : ModelClient {
        std::string complete(const std::string& prompt) override {
            if (prompt.rfind("TASK: plan", 0) == 0) return "no plan for you";
            return "summary";
        }
    };
    TempDir dir;
    auto deps = stub_deps();
    deps.model = std::make_shared<BadPlanner>();
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), deps);
    auto out = pipeline.answer_query(query("q", kStaticText));
    REQUIRE(out.error.has_value());
    CHECK(out.error->find("planning failed") != std::string::npos);
    CHECK_FALSE(out.plan.has_value());
    CHECK(out.answer.empty());
    CHECK(pipeline.cache().stats().inserts == 0);
}

TEST_CASE("pipeline: summarizer failure degrades instead of aborting") {
    struct NoSummary : ModelClient {
        std::shared_ptr<ModelClient> inner;
        std::string complete(const std::string& prompt) override {
            if (prompt.rfind("TASK: summarize", 0) == 0)
                throw std::runtime_error("summarizer offline");
            return inner->complete(prompt);
        }
    };
    TempDir dir;
    auto deps = stub_deps();
    auto wrapper = std::make_shared<NoSummary>();
    wrapper->inner = deps.model;
    deps.model = wrapper;
    Pipeline pipeline(combined_config(dir), tempo::test::sim_registry(), deps);
    auto out = pipeline.answer_query(query("q", kQ6Text));
    CHECK_FALSE(out.error.has_value());
    CHECK(out.answer.find("Summarization unavailable") != std::string::npos);
    CHECK(out.answer.find("[step 1]") != std::string::npos);
    // The degraded answer is still cacheable and consistent.
    auto hit = pipeline.answer_query(query("q2", kQ6Text));
    CHECK(hit.cache_decision == PipelineCacheDecision::Hit);
    CHECK(hit.answer == out.answer);
}

TEST_CASE("pipeline: discovery failure is captured in the outcome") {
    ServerRegistry registry;
    registry.add({"ghost", {"/nonexistent/sim"}, {}});
    TempDir dir;
    Pipeline pipeline(baseline_config(dir), std::move(registry), stub_deps());
    auto out = pipeline.answer_query(query("q", kStaticText));
    REQUIRE(out.error.has_value());
    CHECK(out.error->find("discovery failed") != std::string::npos);
}

TEST_CASE("pipeline: cache-disabled runs are bit-identical across instances") {
    TempDir dir;
    auto run_once = [&] {
        Pipeline pipeline(baseline_config(dir, ClockMode::Simulated),
                          tempo::test::sim_registry(), stub_deps());
        auto a = pipeline.answer_query(query("r1", kQ6Text));
        auto b = pipeline.answer_query(query("r2", kStaticText));
        return std::pair{a, b};
    };
    auto [a1, b1] = run_once();
    auto [a2, b2] = run_once();
    CHECK(a1.answer == a2.answer);
    CHECK(b1.answer == b2.answer);
    CHECK(a1.cache_decision == PipelineCacheDecision::Disabled);
    CHECK(a1.timings.total == a2.timings.total);
    CHECK(a1.timings.execution == a2.timings.execution);
    REQUIRE(a1.step_results.has_value());
    REQUIRE(a2.step_results.has_value());
    for (size_t i = 0; i < a1.step_results->size(); ++i)
        CHECK((*a1.step_results)[i].output == (*a2.step_results)[i].output);
}

TEST_CASE("pipeline: simulated clock charges the documented cost model") {
    TempDir dir;
    // Defaults: spawn 500, call 200, plan 8000, summarize 5000, lookup 800.
    Pipeline baseline(baseline_config(dir, ClockMode::Simulated),
                      tempo::test::sim_registry(), stub_deps());
    auto b = baseline.answer_query(query("b", kQ6Text));
    CHECK(b.timings.cache_lookup == microseconds{0});
    CHECK(b.timings.discovery == milliseconds{2000});   // 4 ephemeral spawns
    CHECK(b.timings.planning == milliseconds{8000});
    CHECK(b.timings.prefetch == microseconds{0});
    CHECK(b.timings.execution == milliseconds{3500});   // 5 x (spawn + call)
    CHECK(b.timings.summarization == milliseconds{5000});
    CHECK(b.timings.total == milliseconds{18500});

    TempDir dir2;
    Pipeline combined(combined_config(dir2, ClockMode::Simulated),
                      tempo::test::sim_registry(), stub_deps());
    auto m = combined.answer_query(query("m", kQ6Text));
    CHECK(m.timings.cache_lookup == milliseconds{800});
    CHECK(m.timings.discovery == milliseconds{2000});   // cold pool, 4 spawns
    CHECK(m.timings.execution == milliseconds{600});    // 3 layer barriers
    CHECK(m.timings.total == milliseconds{16400});

    auto h = combined.answer_query(query("h", kQ6Text));
    CHECK(h.cache_decision == PipelineCacheDecision::Hit);
    CHECK(h.timings.total == milliseconds{800});

    // Warm-discovery miss: no spawn charges left anywhere.
    auto m2 = combined.answer_query(query("m2", kStaticText));
    CHECK(m2.timings.discovery == microseconds{0});
    CHECK(m2.timings.prefetch == microseconds{0});
}

TEST_CASE("pipeline: miss path stays at or below baseline at equal sim latency") {
    auto env = std::map<std::string, std::string>{{"TEMPO_SIM_LATENCY_MS", "100"},
                                                  {"TEMPO_SIM_SPAWN_MS", "100"}};
    TempDir dir;
    Pipeline baseline(baseline_config(dir), tempo::test::sim_registry(env), stub_deps());
    TempDir dir2;
    Pipeline combined(combined_config(dir2), tempo::test::sim_registry(env), stub_deps());

    auto b = baseline.answer_query(query("b", kQ6Text));
    auto m = combined.answer_query(query("m", kQ6Text));
    CHECK(m.cache_decision == PipelineCacheDecision::Miss);
    CHECK(m.timings.total <= b.timings.total);
}
