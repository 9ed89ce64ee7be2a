#pragma once

#include <chrono>
#include <map>
#include <string>
#include <vector>

#include "tempo/mcpio.hpp"
#include "tempo/plan.hpp"

namespace tempo {

/// Canonical Kahn layering: each step's layer index is the length of its
/// longest dependency chain, so the concatenation of layers is a topological
/// order and steps within a layer are mutually independent.
struct LayeredPlan {
    std::vector<std::vector<int>> layers;  // ascending step_id within a layer

    int layer_of(int step_id) const;
};

// Throws McpError on a cycle (defense in depth; validated plans cannot
// contain one).
LayeredPlan layer_plan(const Plan& plan);

enum class ExecMode { Sequential, Parallel };

struct PrefetchReport {
    std::chrono::microseconds wall{0};
    int spawned = 0;                  // sessions newly spawned
    std::vector<std::string> failed;  // servers that could not be acquired
};

// Acquires one pooled session per distinct server named in the plan,
// concurrently across servers. Failures are recorded, not thrown: execution
// still attempts the remaining servers' steps.
PrefetchReport prefetch_sessions(ServerPool& pool, const Plan& plan);

struct ExecReport {
    std::vector<StepResult> results;  // one per plan step, in declaration order
    std::chrono::microseconds wall{0};
    ExecMode mode = ExecMode::Sequential;
    // Structural facts for deterministic cost accounting.
    int dispatched_calls = 0;   // steps that actually issued a tools/call
    int ephemeral_spawns = 0;   // Sequential mode: one short-lived session per step
    // Per layer, per server: number of dispatched calls (Parallel mode).
    std::vector<std::map<std::string, int>> layer_server_calls;
};

/// Runs the plan. Sequential mode mirrors the unoptimized baseline: steps in
/// declaration order, each in a fresh short-lived session. Parallel mode runs
/// Kahn layers in order, dispatching all runnable steps of a layer
/// concurrently over pooled sessions, with a barrier between layers.
///
/// A step failure never aborts the plan: dependents are Skipped, siblings are
/// unaffected, and partial results are returned.
ExecReport execute(const Plan& plan, ServerPool& pool, ExecMode mode,
                   std::chrono::milliseconds call_timeout);

}  // namespace tempo
