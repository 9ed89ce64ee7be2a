#include "tempo/executor.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "tempo/planner.hpp"

namespace tempo {

using std::chrono::duration_cast;
using std::chrono::microseconds;
using std::chrono::steady_clock;

int LayeredPlan::layer_of(int step_id) const {
    for (size_t i = 0; i < layers.size(); ++i)
        for (int id : layers[i])
            if (id == step_id) return int(i);
    return -1;
}

LayeredPlan layer_plan(const Plan& plan) {
    std::map<int, std::set<int>> dependents;  // dep -> steps that wait on it
    std::map<int, int> indegree;
    for (const auto& step : plan.steps) {
        indegree[step.step_id] = int(step.depends_on.size());
        for (int dep : step.depends_on) dependents[dep].insert(step.step_id);
    }

    LayeredPlan out;
    std::vector<int> wave;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) wave.push_back(id);
    size_t placed = 0;
    while (!wave.empty()) {
        std::sort(wave.begin(), wave.end());
        out.layers.push_back(wave);
        placed += wave.size();
        std::vector<int> next;
        for (int id : wave) {
            for (int child : dependents[id]) {
                if (--indegree[child] == 0) next.push_back(child);
            }
        }
        wave = std::move(next);
    }
    if (placed != plan.steps.size()) throw McpError("layer_plan: dependency cycle detected");
    return out;
}

PrefetchReport prefetch_sessions(ServerPool& pool, const Plan& plan) {
    PrefetchReport report;
    std::set<std::string> servers;
    for (const auto& step : plan.steps) servers.insert(step.server);

    auto t0 = steady_clock::now();
    uint64_t spawns_before = pool.total_spawn_count();

    std::vector<std::thread> threads;
    std::mutex mu;
    for (const auto& server : servers) {
        threads.emplace_back([&pool, &mu, &report, server] {
            try {
                pool.acquire(server);
            } catch (const std::exception&) {
                std::lock_guard lock(mu);
                report.failed.push_back(server);
            }
        });
    }
    for (auto& t : threads) t.join();
    std::sort(report.failed.begin(), report.failed.end());

    report.spawned = int(pool.total_spawn_count() - spawns_before);
    report.wall = duration_cast<microseconds>(steady_clock::now() - t0);
    return report;
}

namespace {

StepResult run_step(const PlanStep& step, const std::map<int, StepResult>& completed,
                    ServerPool& pool, bool ephemeral, std::chrono::milliseconds call_timeout,
                    int layer_index) {
    StepResult result;
    result.step_id = step.step_id;
    result.layer_index = layer_index;
    auto t0 = steady_clock::now();
    try {
        nlohmann::json args = resolve_args(step, completed);
        nlohmann::json output;
        if (ephemeral) {
            const ServerSpec* spec = pool.registry().find(step.server);
            if (!spec) throw SpawnError("server '" + step.server + "' is not registered");
            auto session = ServerSession::spawn(*spec, pool.config().handshake_timeout);
            output = session->call_tool(step.tool, args, call_timeout);
            session->close();
        } else {
            auto session = pool.acquire(step.server);
            output = session->call_tool(step.tool, args, call_timeout);
        }
        result.status = StepStatus::Ok;
        result.output = std::move(output);
    } catch (const ResolutionError& e) {
        result.status = StepStatus::Skipped;
        result.error = e.what();
    } catch (const std::exception& e) {
        result.status = StepStatus::Error;
        result.error = e.what();
    }
    result.latency = duration_cast<microseconds>(steady_clock::now() - t0);
    return result;
}

bool deps_ok(const PlanStep& step, const std::map<int, StepResult>& completed) {
    for (int dep : step.depends_on) {
        auto it = completed.find(dep);
        if (it == completed.end() || it->second.status != StepStatus::Ok) return false;
    }
    return true;
}

StepResult skipped_result(const PlanStep& step, int layer_index) {
    StepResult r;
    r.step_id = step.step_id;
    r.status = StepStatus::Skipped;
    r.error = "dependency did not complete successfully";
    r.layer_index = layer_index;
    return r;
}

}  // namespace

ExecReport execute(const Plan& plan, ServerPool& pool, ExecMode mode,
                   std::chrono::milliseconds call_timeout) {
    ExecReport report;
    report.mode = mode;
    if (plan.steps.empty()) return report;

    LayeredPlan layered = layer_plan(plan);
    std::map<int, StepResult> completed;
    auto t0 = steady_clock::now();

    if (mode == ExecMode::Sequential) {
        for (const auto& step : plan.steps) {
            int layer = layered.layer_of(step.step_id);
            if (!deps_ok(step, completed)) {
                completed[step.step_id] = skipped_result(step, layer);
                continue;
            }
            ++report.ephemeral_spawns;
            ++report.dispatched_calls;
            completed[step.step_id] =
                run_step(step, completed, pool, /*ephemeral=*/true, call_timeout, layer);
        }
    } else {
        report.layer_server_calls.resize(layered.layers.size());
        for (size_t li = 0; li < layered.layers.size(); ++li) {
            std::vector<const PlanStep*> runnable;
            for (int id : layered.layers[li]) {
                const PlanStep* step = plan.find_step(id);
                if (!deps_ok(*step, completed)) {
                    completed[id] = skipped_result(*step, int(li));
                } else {
                    runnable.push_back(step);
                    ++report.layer_server_calls[li][step->server];
                    ++report.dispatched_calls;
                }
            }
            // Fan out the layer, then barrier before the next one starts.
            std::vector<StepResult> layer_results(runnable.size());
            std::vector<std::thread> threads;
            threads.reserve(runnable.size());
            for (size_t i = 0; i < runnable.size(); ++i) {
                threads.emplace_back([&, i] {
                    layer_results[i] = run_step(*runnable[i], completed, pool,
                                                /*ephemeral=*/false, call_timeout, int(li));
                });
            }
            for (auto& t : threads) t.join();
            for (auto& r : layer_results) completed[r.step_id] = std::move(r);
        }
    }

    report.wall = duration_cast<microseconds>(steady_clock::now() - t0);
    for (const auto& step : plan.steps) report.results.push_back(completed.at(step.step_id));
    return report;
}

}  // namespace tempo
