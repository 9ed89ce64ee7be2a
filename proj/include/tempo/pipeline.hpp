#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tempo/discovery.hpp"
#include "tempo/executor.hpp"
#include "tempo/planner.hpp"
#include "tempo/semcache.hpp"
#include "tempo/temporal.hpp"

namespace tempo {

struct PhaseTimings {
    std::chrono::microseconds cache_lookup{0};
    std::chrono::microseconds discovery{0};
    std::chrono::microseconds planning{0};
    std::chrono::microseconds prefetch{0};
    std::chrono::microseconds execution{0};
    std::chrono::microseconds summarization{0};
    std::chrono::microseconds total{0};

    std::chrono::microseconds phase_sum() const {
        return cache_lookup + discovery + planning + prefetch + execution + summarization;
    }
};

/// Measured: phases timed with the steady clock. Simulated: phases charged
/// deterministic costs from the model below, based on what structurally
/// happened (spawns performed, calls dispatched, layer shape). Simulated
/// timing makes paired runs reproducible bit-for-bit while the pipeline still
/// does all real work.
enum class ClockMode { Measured, Simulated };

struct SimCostModel {
    int64_t spawn_ms = 500;       // per server-process spawn
    int64_t call_ms = 200;        // per tools/call
    int64_t plan_ms = 8000;       // planner model latency
    int64_t summarize_ms = 5000;  // summarizer model latency
    int64_t lookup_ms = 800;      // semantic-cache lookup (embed + judge)
};

enum class PipelineCacheDecision { Hit, Miss, Bypass, Disabled };

const char* to_string(PipelineCacheDecision d);

struct PipelineConfig {
    bool cache_enabled = true;
    bool discovery_cache_enabled = true;
    bool parallel_execution = true;
    CacheConfig thresholds;
    std::chrono::milliseconds call_timeout{30000};
    ClockMode clock = ClockMode::Measured;
    SimCostModel costs;
    DiscoverySetup discovery;
};

struct PipelineOutcome {
    std::string answer;
    PhaseTimings timings;
    PipelineCacheDecision cache_decision = PipelineCacheDecision::Disabled;
    TemporalBucket bucket = TemporalBucket::Static;
    std::optional<Plan> plan;
    std::optional<std::vector<StepResult>> step_results;
    std::optional<std::string> error;  // fatal phase error (planning, discovery)
    LookupOutcome lookup;
    std::optional<CatalogSource> discovery_source;
};

struct PipelineDeps {
    std::shared_ptr<const TemporalClassifier> classifier;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const Judger> judger;
    std::shared_ptr<ModelClient> model;
};

/// One query end to end: cache lookup -> (on miss/bypass) discovery ->
/// planning -> prefetch -> execution -> summarization -> cache insert.
///
/// A cache hit returns immediately with only cache_lookup and total timed.
/// Planning failure aborts the query with an error outcome; tool failures
/// degrade (summary over partial results). The final answer is inserted for
/// Miss outcomes of cacheable buckets only.
///
/// One pipeline instance owns its server pool and must not share it; a single
/// instance runs one query at a time.
class Pipeline {
public:
    Pipeline(PipelineConfig config, ServerRegistry registry, PipelineDeps deps);

    PipelineOutcome answer_query(const Query& query);

    SemanticCache& cache() { return cache_; }
    ServerPool& pool() { return pool_; }
    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    PipelineDeps deps_;
    ServerPool pool_;
    SemanticCache cache_;
};

}  // namespace tempo
