#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tempo/scoring.hpp"
#include "tempo/temporal.hpp"

namespace tempo {

struct CacheConfig {
    double tau_sim = 0.75;
    double tau_judge = 0.92;
    int top_k = 5;
    int capacity = 50;
    int embedding_dim = 256;
    // The window gate blocks cross-window reuse before the judger ever sees a
    // candidate. Disabling it reproduces the collision failure mode of a pure
    // semantic cache.
    bool window_gate = true;

    void validate() const;
};

struct CacheEntry {
    std::string entry_id;
    std::string query_text;
    std::vector<float> embedding;
    std::string answer;
    std::optional<TimeWindow> window;  // present only for anchored insertions
    uint64_t hit_count = 0;
    uint64_t last_access = 0;  // monotonic tick
    UtcSeconds inserted_at{};
    uint64_t seq = 0;  // insertion sequence, final eviction tie-break
};

enum class CacheDecision { Hit, Miss, Bypass };

const char* to_string(CacheDecision d);

struct LookupOutcome {
    CacheDecision decision = CacheDecision::Miss;
    std::optional<std::string> answer;         // present iff Hit
    std::optional<std::string> matched_entry;  // present iff Hit
    std::optional<double> similarity;          // best retrieved cosine, if any
    std::optional<double> judge_score;         // best judged score, if any
    bool degraded = false;                     // embedder failure forced a Miss
};

struct CacheStats {
    uint64_t index_reads = 0;
    uint64_t index_writes = 0;
    uint64_t hits = 0;
    uint64_t misses = 0;
    uint64_t bypasses = 0;
    uint64_t inserts = 0;
    uint64_t evictions = 0;
    uint64_t judger_calls = 0;
};

/// Embedding-retrieval + judger-gated semantic cache with window compatibility
/// checks and LCFU eviction (least hit_count, then least recent access, then
/// oldest insertion).
///
/// Retrieval is an exact cosine scan: at the configured capacities an ANN
/// structure is an optimization, not a semantic requirement, and the exact
/// scan doubles as the candidate-set contract.
///
/// All operations are linearizable; a single internal mutex guards the index
/// and every counter.
class SemanticCache {
public:
    SemanticCache(CacheConfig config, std::shared_ptr<const Embedder> embedder,
                  std::shared_ptr<const Judger> judger,
                  std::function<UtcSeconds()> clock = nullptr);

    // Volatile queries bypass without touching the index. Otherwise: retrieve
    // up to top_k by cosine, drop below tau_sim, drop window-incompatible
    // candidates (unless the gate is disabled), judge the survivors, accept
    // the best iff its score >= tau_judge.
    LookupOutcome lookup(const ClassifiedQuery& cq);

    // Only Static and Anchored queries may be inserted; Volatile insertion is
    // a contract violation. Evicts first when at capacity. Returns the new
    // entry id.
    std::string insert(const ClassifiedQuery& cq, const std::string& answer);

    // Removes and returns the LCFU victim. Throws on an empty cache.
    std::string evict_one();

    static bool window_compatible(const std::optional<TimeWindow>& entry_window,
                                  const std::optional<TimeWindow>& query_window);

    // Retrieval diagnostic: the top-k entries by cosine against text, before
    // any threshold or window filtering. This is the candidate-set contract
    // the exact-scan oracle checks.
    std::vector<std::pair<std::string, double>> top_candidates(const std::string& text,
                                                               int k) const;

    size_t size() const;
    CacheStats stats() const;
    std::vector<CacheEntry> entries_snapshot() const;
    const CacheConfig& config() const { return config_; }

    // Test hook: overwrite LCFU bookkeeping fields of an existing entry.
    void set_entry_counters(const std::string& entry_id, uint64_t hit_count, uint64_t last_access,
                            UtcSeconds inserted_at);

private:
    std::string evict_one_locked();
    size_t victim_index_locked() const;

    CacheConfig config_;
    std::shared_ptr<const Embedder> embedder_;
    std::shared_ptr<const Judger> judger_;
    std::function<UtcSeconds()> clock_;

    mutable std::mutex mu_;
    std::vector<CacheEntry> entries_;
    uint64_t tick_ = 0;
    uint64_t next_seq_ = 1;
    CacheStats stats_;
};

}  // namespace tempo
