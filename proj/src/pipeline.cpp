#include "tempo/pipeline.hpp"

#include <algorithm>

namespace tempo {

using std::chrono::duration_cast;
using std::chrono::microseconds;
using std::chrono::milliseconds;
using std::chrono::steady_clock;

const char* to_string(PipelineCacheDecision d) {
    switch (d) {
        case PipelineCacheDecision::Hit: return "hit";
        case PipelineCacheDecision::Miss: return "miss";
        case PipelineCacheDecision::Bypass: return "bypass";
        case PipelineCacheDecision::Disabled: return "disabled";
    }
    return "?";
}

Pipeline::Pipeline(PipelineConfig config, ServerRegistry registry, PipelineDeps deps)
    : config_(std::move(config)), deps_(std::move(deps)),
      pool_(std::move(registry), PoolConfig{.handshake_timeout = milliseconds{10000},
                                            .call_timeout = config_.call_timeout}),
      cache_(config_.thresholds, deps_.embedder, deps_.judger) {
    if (!deps_.classifier || !deps_.model)
        throw std::invalid_argument("pipeline: classifier and model client required");
}

namespace {

microseconds ms_to_us(int64_t ms) { return microseconds{ms * 1000}; }

class PhaseClock {
public:
    explicit PhaseClock(bool measured) : measured_(measured), t0_(steady_clock::now()) {}

    // Measured mode: time fn. Simulated mode: run fn, then charge the
    // deterministic cost it reports.
    template <typename Fn>
    void phase(microseconds& slot, Fn&& fn) {
        auto p0 = steady_clock::now();
        microseconds simulated = fn();
        if (measured_)
            slot = duration_cast<microseconds>(steady_clock::now() - p0);
        else
            slot = simulated;
    }

    microseconds total(const PhaseTimings& t) const {
        if (measured_) return duration_cast<microseconds>(steady_clock::now() - t0_);
        return t.phase_sum();
    }

private:
    bool measured_;
    steady_clock::time_point t0_;
};

}  // namespace

PipelineOutcome Pipeline::answer_query(const Query& query) {
    PipelineOutcome out;
    const SimCostModel& costs = config_.costs;
    PhaseClock clock(config_.clock == ClockMode::Measured);

    // Phase: cache lookup (pre-retrieval temporal routing included).
    ClassifiedQuery cq;
    if (config_.cache_enabled) {
        clock.phase(out.timings.cache_lookup, [&] {
            cq = deps_.classifier->classify_and_resolve(query);
            out.lookup = cache_.lookup(cq);
            return ms_to_us(costs.lookup_ms);
        });
        out.bucket = cq.bucket;
        switch (out.lookup.decision) {
            case CacheDecision::Hit: out.cache_decision = PipelineCacheDecision::Hit; break;
            case CacheDecision::Miss: out.cache_decision = PipelineCacheDecision::Miss; break;
            case CacheDecision::Bypass: out.cache_decision = PipelineCacheDecision::Bypass; break;
        }
        if (out.lookup.decision == CacheDecision::Hit) {
            out.answer = *out.lookup.answer;
            out.timings.total = clock.total(out.timings);
            return out;
        }
    } else {
        clock.phase(out.timings.cache_lookup, [&] {
            cq = deps_.classifier->classify_and_resolve(query);
            return microseconds{0};
        });
        out.bucket = cq.bucket;
        out.cache_decision = PipelineCacheDecision::Disabled;
    }

    // Phase: discovery.
    ToolCatalog catalog;
    try {
        clock.phase(out.timings.discovery, [&]() -> microseconds {
            if (config_.discovery_cache_enabled) {
                uint64_t spawns_before = pool_.total_spawn_count();
                auto now = std::chrono::time_point_cast<std::chrono::seconds>(
                    std::chrono::system_clock::now());
                auto [cat, source] = load_or_discover(pool_, config_.discovery, now);
                catalog = std::move(cat);
                out.discovery_source = source;
                // Pool acquisition is sequential inside live discovery.
                int64_t spawns = int64_t(pool_.total_spawn_count() - spawns_before);
                return ms_to_us(spawns * costs.spawn_ms);
            }
            catalog = discover_ephemeral(pool_.registry(),
                                         PoolConfig{.handshake_timeout = milliseconds{10000},
                                                    .call_timeout = config_.call_timeout});
            return ms_to_us(int64_t(pool_.registry().names().size()) * costs.spawn_ms);
        });
    } catch (const std::exception& e) {
        out.error = std::string("discovery failed: ") + e.what();
        out.timings.total = clock.total(out.timings);
        return out;
    }

    // Phase: planning. Failure aborts the query; tool failures later degrade.
    try {
        clock.phase(out.timings.planning, [&] {
            out.plan = make_plan(query, catalog, *deps_.model);
            return ms_to_us(costs.plan_ms);
        });
    } catch (const PlanningError& e) {
        out.error = std::string("planning failed: ") + e.what();
        out.timings.total = clock.total(out.timings);
        return out;
    }

    // Phase: prefetch (parallel mode only; the sequential baseline spawns per
    // step).
    if (config_.parallel_execution) {
        clock.phase(out.timings.prefetch, [&] {
            PrefetchReport report = prefetch_sessions(pool_, *out.plan);
            return ms_to_us(report.spawned > 0 ? costs.spawn_ms : 0);
        });
    }

    // Phase: execution.
    ExecReport exec;
    clock.phase(out.timings.execution, [&]() -> microseconds {
        exec = execute(*out.plan, pool_,
                       config_.parallel_execution ? ExecMode::Parallel : ExecMode::Sequential,
                       config_.call_timeout);
        if (exec.mode == ExecMode::Sequential)
            return ms_to_us(int64_t(exec.dispatched_calls) * (costs.spawn_ms + costs.call_ms));
        int64_t total_ms = 0;
        for (const auto& layer : exec.layer_server_calls) {
            int64_t layer_ms = 0;
            for (const auto& [server, calls] : layer)
                layer_ms = std::max(layer_ms, int64_t(calls) * costs.call_ms);
            total_ms += layer_ms;
        }
        return ms_to_us(total_ms);
    });
    out.step_results = exec.results;

    // Phase: summarization. Client failure degrades to a deterministic
    // fallback assembled from the step results.
    clock.phase(out.timings.summarization, [&]() -> microseconds {
        if (exec.results.empty()) {
            out.answer = "No plan steps were executed.";
            return ms_to_us(costs.summarize_ms);
        }
        try {
            out.answer = summarize(query, exec.results, *deps_.model);
        } catch (const std::exception& e) {
            std::string fallback = std::string("Summarization unavailable (") + e.what() + ").";
            for (const auto& r : exec.results) {
                fallback += "\n[step " + std::to_string(r.step_id) + "] ";
                fallback += to_string(r.status);
                if (r.output) fallback += ": " + r.output->dump();
                if (r.error) fallback += ": " + *r.error;
            }
            out.answer = fallback;
        }
        return ms_to_us(costs.summarize_ms);
    });

    // Cache insert: misses of cacheable buckets only, after summarization.
    if (config_.cache_enabled && out.cache_decision == PipelineCacheDecision::Miss &&
        (cq.bucket == TemporalBucket::Static || cq.bucket == TemporalBucket::Anchored)) {
        try {
            cache_.insert(cq, out.answer);
        } catch (const std::exception&) {
            // A failed insert must never fail the query.
        }
    }

    out.timings.total = clock.total(out.timings);
    return out;
}

}  // namespace tempo
