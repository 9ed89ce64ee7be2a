// tempo: workload generation, cache warming, paired baseline/optimized runs,
// and report rendering for the simulated plan-execute pipeline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempo/csv.hpp"
#include "tempo/evalharness.hpp"
#include "tempo/http_adapters.hpp"
#include "tempo/runtime.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tempo;

namespace {

struct CliConfig {
    CacheConfig thresholds;
    std::string embedder = "trigram";
    std::string judger = "jaccard";
    std::string model = "stub";
    std::string embedder_url, judger_url, model_url;
    ClockMode clock = ClockMode::Simulated;
    SimCostModel costs;
    long sim_latency_ms = 0;
    long sim_spawn_ms = 0;
    long sim_seed = 42;
    long timeout_ms = 30000;
    fs::path data_dir = default_data_dir();
    fs::path sim_bin = default_sim_bin();
    fs::path discovery_cache_path;  // default: <out>/.tempo/discovery_cache.json
    long discovery_ttl_hours = 24;
    // Optimized-arm toggles; the baseline arm always runs everything off.
    bool cache_enabled = true;
    bool discovery_cache_enabled = true;
    bool parallel_execution = true;
};

CliConfig load_config(const std::string& path) {
    CliConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json j = json::parse(in);
    cfg.thresholds.tau_sim = j.value("tau_sim", cfg.thresholds.tau_sim);
    cfg.thresholds.tau_judge = j.value("tau_judge", cfg.thresholds.tau_judge);
    cfg.thresholds.top_k = j.value("top_k", cfg.thresholds.top_k);
    cfg.thresholds.capacity = j.value("capacity", cfg.thresholds.capacity);
    cfg.thresholds.embedding_dim = j.value("embedding_dim", cfg.thresholds.embedding_dim);
    cfg.thresholds.window_gate = j.value("window_gate", cfg.thresholds.window_gate);
    if (j.contains("embedder")) {
        if (j["embedder"].is_string()) cfg.embedder = j["embedder"].get<std::string>();
        else {
            cfg.embedder = "http";
            cfg.embedder_url = j["embedder"].at("http").at("url").get<std::string>();
            cfg.thresholds.embedding_dim =
                j["embedder"]["http"].value("dim", cfg.thresholds.embedding_dim);
        }
    }
    if (j.contains("judger")) {
        if (j["judger"].is_string()) cfg.judger = j["judger"].get<std::string>();
        else {
            cfg.judger = "http";
            cfg.judger_url = j["judger"].at("http").at("url").get<std::string>();
        }
    }
    if (j.contains("model")) {
        if (j["model"].is_string()) cfg.model = j["model"].get<std::string>();
        else {
            cfg.model = "http";
            cfg.model_url = j["model"].at("http").at("url").get<std::string>();
        }
    }
    if (j.contains("clock"))
        cfg.clock = j["clock"] == "measured" ? ClockMode::Measured : ClockMode::Simulated;
    if (j.contains("costs")) {
        const json& c = j["costs"];
        cfg.costs.spawn_ms = c.value("spawn_ms", cfg.costs.spawn_ms);
        cfg.costs.call_ms = c.value("call_ms", cfg.costs.call_ms);
        cfg.costs.plan_ms = c.value("plan_ms", cfg.costs.plan_ms);
        cfg.costs.summarize_ms = c.value("summarize_ms", cfg.costs.summarize_ms);
        cfg.costs.lookup_ms = c.value("lookup_ms", cfg.costs.lookup_ms);
    }
    if (j.contains("sim")) {
        const json& s = j["sim"];
        cfg.sim_latency_ms = s.value("latency_ms", cfg.sim_latency_ms);
        cfg.sim_spawn_ms = s.value("spawn_ms", cfg.sim_spawn_ms);
        cfg.sim_seed = s.value("seed", cfg.sim_seed);
    }
    cfg.timeout_ms = j.value("timeout_ms", cfg.timeout_ms);
    if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("sim_bin")) cfg.sim_bin = j["sim_bin"].get<std::string>();
    if (j.contains("discovery_cache_path"))
        cfg.discovery_cache_path = j["discovery_cache_path"].get<std::string>();
    cfg.discovery_ttl_hours = j.value("discovery_ttl_hours", cfg.discovery_ttl_hours);
    cfg.cache_enabled = j.value("cache_enabled", cfg.cache_enabled);
    cfg.discovery_cache_enabled =
        j.value("discovery_cache_enabled", cfg.discovery_cache_enabled);
    cfg.parallel_execution = j.value("parallel_execution", cfg.parallel_execution);
    return cfg;
}

PipelineDeps build_deps(const CliConfig& cfg, const std::string& config_path) {
    PipelineDeps deps;
    deps.classifier = std::make_shared<TemporalClassifier>(
        TemporalClassifier::from_file(cfg.data_dir / "temporal_rules.tsv"));
    if (cfg.embedder == "http")
        deps.embedder = std::make_shared<HttpEmbedder>(cfg.embedder_url,
                                                       cfg.thresholds.embedding_dim);
    else
        deps.embedder = std::make_shared<TrigramEmbedder>(cfg.thresholds.embedding_dim);
    if (cfg.judger == "http")
        deps.judger = std::make_shared<HttpJudger>(cfg.judger_url);
    else
        deps.judger = std::make_shared<JaccardJudger>();
    if (cfg.model == "http") {
        deps.model = std::make_shared<HttpModelClient>(cfg.model_url);
    } else {
        auto templates = std::make_shared<ScenarioTemplates>(
            ScenarioTemplates::from_file(cfg.data_dir / "stub_plans.json"));
        deps.model = std::make_shared<StubModelClient>(templates);
    }
    (void)config_path;
    return deps;
}

ServerRegistry build_registry(const CliConfig& cfg) {
    std::map<std::string, std::string> env;
    env["TEMPO_SIM_LATENCY_MS"] = std::to_string(cfg.sim_latency_ms);
    env["TEMPO_SIM_SPAWN_MS"] = std::to_string(cfg.sim_spawn_ms);
    env["TEMPO_SIM_SEED"] = std::to_string(cfg.sim_seed);
    return make_sim_registry(cfg.sim_bin, cfg.data_dir / "sim", env);
}

PipelineConfig arm_pipeline_config(const CliConfig& cfg, Arm arm, const fs::path& out_dir,
                                   const std::string& config_path) {
    PipelineConfig pc;
    if (arm == Arm::Baseline) {
        pc.cache_enabled = false;
        pc.discovery_cache_enabled = false;
        pc.parallel_execution = false;
    } else {
        pc.cache_enabled = cfg.cache_enabled;
        pc.discovery_cache_enabled = cfg.discovery_cache_enabled;
        pc.parallel_execution = cfg.parallel_execution;
    }
    pc.thresholds = cfg.thresholds;
    pc.call_timeout = std::chrono::milliseconds(cfg.timeout_ms);
    pc.clock = cfg.clock;
    pc.costs = cfg.costs;
    pc.discovery.cache_path = !cfg.discovery_cache_path.empty()
                                  ? cfg.discovery_cache_path
                                  : out_dir / ".tempo" / "discovery_cache.json";
    pc.discovery.ttl = std::chrono::hours(cfg.discovery_ttl_hours);
    pc.discovery.servers_dir = cfg.data_dir / "sim";
    pc.discovery.config_file =
        config_path.empty() ? cfg.data_dir / "stub_plans.json" : fs::path(config_path);
    return pc;
}

int cmd_gen_workload(const std::string& seeds_path, int warm, int rows, double warm_frac,
                     uint64_t rng, bool adversarial, const std::string& out_dir) {
    auto corpus = read_scenario_csv(seeds_path);
    WorkloadSpec spec{warm, rows, warm_frac, rng, adversarial};
    Workload w = build_workload(corpus, spec);
    fs::create_directories(out_dir);
    write_scenario_csv(fs::path(out_dir) / "seeds.csv", w.seed_rows);
    write_scenario_csv(fs::path(out_dir) / "test.csv", w.test_rows);
    int warm_rows = 0, cold_rows = 0;
    for (const auto& r : w.test_rows) (r.tier == Tier::Warm ? warm_rows : cold_rows)++;
    std::cout << "wrote " << (fs::path(out_dir) / "seeds.csv").string() << " ("
              << w.seed_rows.size() << " rows) and " << (fs::path(out_dir) / "test.csv").string()
              << " (" << warm_rows << " warm + " << cold_rows << " cold rows)\n";
    return 0;
}

int cmd_warm(const std::string& seeds_path, const std::string& config_path) {
    CliConfig cfg = load_config(config_path);
    auto seeds = read_scenario_csv(seeds_path);
    PipelineDeps deps = build_deps(cfg, config_path);
    fs::path tmp_out = fs::temp_directory_path() / "tempo-warm";
    Pipeline pipeline(arm_pipeline_config(cfg, Arm::Optimized, tmp_out, config_path),
                      build_registry(cfg), deps);
    std::map<std::string, int> buckets;
    for (const auto& seed : seeds) {
        Query q{seed.id, seed.text, seed.timestamp, seed.parent_id};
        PipelineOutcome outcome = pipeline.answer_query(q);
        buckets[to_string(outcome.bucket)]++;
    }
    std::cout << "warmed " << seeds.size() << " seed rows; cache now holds "
              << pipeline.cache().size() << " entries\n";
    for (const auto& [bucket, count] : buckets)
        std::cout << "  bucket " << bucket << ": " << count << "\n";
    std::cout << "note: the semantic cache is in-memory only; `tempo run` re-warms from "
                 "--seeds before the test pass\n";
    return 0;
}

int cmd_run(const std::string& scenarios_path, const std::string& seeds_path,
            const std::string& arm_name, const std::string& out_dir,
            const std::string& config_path, bool no_window_gate, const std::string& clock_flag) {
    CliConfig cfg = load_config(config_path);
    if (no_window_gate) cfg.thresholds.window_gate = false;
    if (clock_flag == "measured") cfg.clock = ClockMode::Measured;
    if (clock_flag == "sim") cfg.clock = ClockMode::Simulated;

    auto rows = read_scenario_csv(scenarios_path);
    std::vector<ScenarioRow> seeds;
    if (!seeds_path.empty()) seeds = read_scenario_csv(seeds_path);

    fs::path out(out_dir);
    fs::create_directories(out);
    // Each run starts with a cold discovery cache so reruns are reproducible.
    std::error_code ec;
    fs::remove(out / ".tempo" / "discovery_cache.json", ec);

    PipelineDeps deps = build_deps(cfg, config_path);
    ServerRegistry registry_template = build_registry(cfg);
    PipelineFactory factory = [&](Arm arm) {
        return std::make_unique<Pipeline>(arm_pipeline_config(cfg, arm, out, config_path),
                                          build_registry(cfg), deps);
    };

    if (arm_name == "both") {
        auto paired = run_paired(rows, seeds, factory);
        std::set<std::string> warm_parents;
        for (const auto& s : seeds) warm_parents.insert(s.parent_id);
        ConfusionMatrix confusion = decision_quality(paired, warm_parents);
        LatencyStats stats = latency_stats(paired);
        emit_report(stats, confusion, paired, out);
        std::cout << render_summary_table(stats, confusion);
        return 0;
    }

    Arm arm = arm_name == "baseline" ? Arm::Baseline : Arm::Optimized;
    auto pipeline = factory(arm);
    if (arm == Arm::Optimized) {
        for (const auto& seed : seeds) {
            Query q{seed.id, seed.text, seed.timestamp, seed.parent_id};
            pipeline->answer_query(q);
        }
    }
    std::vector<csv::Row> out_rows;
    out_rows.push_back({"id", "parent_id", "tier", "bucket", "decision", "wall_us"});
    for (const auto& row : rows) {
        Query q{row.id, row.text, row.timestamp, row.parent_id};
        PipelineOutcome outcome = pipeline->answer_query(q);
        out_rows.push_back({row.id, row.parent_id, to_string(row.tier),
                            to_string(outcome.bucket), to_string(outcome.cache_decision),
                            std::to_string(outcome.timings.total.count())});
    }
    fs::path rows_path = out / ("rows_" + arm_name + ".csv");
    csv::write_file(rows_path, out_rows);
    std::cout << "wrote " << rows_path.string() << " (" << rows.size() << " rows)\n";
    return 0;
}

int cmd_report(const std::string& in_dir) {
    fs::path path = fs::path(in_dir) / "report.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    json j = json::parse(in);
    const json& s = j.at("stats");
    LatencyStats stats;
    stats.rows = s.value("rows", 0);
    stats.hit_rows = s.value("hit_rows", 0);
    stats.miss_rows = s.value("miss_rows", 0);
    stats.median_ratio = s.value("median_ratio", 0.0);
    stats.median_baseline_ms = s.value("median_baseline_ms", 0.0);
    stats.median_optimized_ms = s.value("median_optimized_ms", 0.0);
    stats.trimmed_mean_baseline_ms = s.value("trimmed_mean_baseline_ms", 0.0);
    stats.trimmed_mean_optimized_ms = s.value("trimmed_mean_optimized_ms", 0.0);
    stats.hit_rate = s.value("hit_rate", 0.0);
    stats.median_hit_speedup = s.value("median_hit_speedup", 0.0);
    stats.median_miss_delta_ms = s.value("median_miss_delta_ms", 0.0);
    auto phases = [](const json& p) {
        PhaseMediansMs m;
        m.cache_lookup = p.value("cache_lookup_ms", 0.0);
        m.discovery = p.value("discovery_ms", 0.0);
        m.planning = p.value("planning_ms", 0.0);
        m.prefetch = p.value("prefetch_ms", 0.0);
        m.execution = p.value("execution_ms", 0.0);
        m.summarization = p.value("summarization_ms", 0.0);
        m.total = p.value("total_ms", 0.0);
        return m;
    };
    stats.baseline_phases = phases(s.at("baseline_phases"));
    stats.optimized_phases = phases(s.at("optimized_phases"));
    const json& c = j.at("confusion");
    ConfusionMatrix confusion{c.value("tp", int64_t(0)), c.value("fp", int64_t(0)),
                              c.value("fn", int64_t(0)), c.value("tn", int64_t(0))};
    std::cout << render_summary_table(stats, confusion);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempo: temporal semantic cache + MCP workflow optimization harness"};
    app.require_subcommand(1);

    // gen-workload
    auto* gen = app.add_subcommand("gen-workload", "Build seed/test CSVs from a corpus");
    std::string gen_seeds, gen_out = ".";
    int gen_warm = 20, gen_rows = 80;
    double gen_frac = 0.6;
    uint64_t gen_rng = 42;
    bool gen_adversarial = false;
    gen->add_option("--seeds", gen_seeds, "Corpus CSV (id,parent_id,text,tier,timestamp)")
        ->required();
    gen->add_option("--warm", gen_warm, "Number of warm parents");
    gen->add_option("--rows", gen_rows, "Test rows to emit");
    gen->add_option("--warm-frac", gen_frac, "Warm fraction of test rows, in (0,1)");
    gen->add_option("--rng", gen_rng, "RNG seed");
    gen->add_flag("--adversarial", gen_adversarial,
                  "Emit parameter-shifted twins instead of cold-parent paraphrases");
    gen->add_option("--out", gen_out, "Output directory");

    // warm
    auto* warm = app.add_subcommand("warm", "Warm a cache from a seed CSV and report");
    std::string warm_seeds, warm_config;
    warm->add_option("--seeds", warm_seeds, "Seed CSV")->required();
    warm->add_option("--config", warm_config, "Config JSON");

    // run
    auto* run = app.add_subcommand("run", "Run scenarios under baseline/optimized arms");
    std::string run_scenarios, run_seeds, run_arm = "both", run_out = "out", run_config;
    std::string run_clock;
    bool run_no_gate = false;
    run->add_option("--scenarios", run_scenarios, "Test CSV")->required();
    run->add_option("--seeds", run_seeds, "Seed CSV for warming the optimized arm");
    run->add_option("--arm", run_arm, "baseline|optimized|both")
        ->check(CLI::IsMember({"baseline", "optimized", "both"}));
    run->add_option("--out", run_out, "Output directory");
    run->add_option("--config", run_config, "Config JSON");
    run->add_flag("--no-window-gate", run_no_gate,
                  "Disable the window-compatibility gate (collision regression)");
    run->add_option("--clock", run_clock, "sim|measured")
        ->check(CLI::IsMember({"sim", "measured"}));

    // report
    auto* report = app.add_subcommand("report", "Render a report directory as text");
    std::string report_in;
    report->add_option("--in", report_in, "Directory containing report.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen_workload(gen_seeds, gen_warm, gen_rows, gen_frac, gen_rng,
                                    gen_adversarial, gen_out);
        if (warm->parsed()) return cmd_warm(warm_seeds, warm_config);
        if (run->parsed())
            return cmd_run(run_scenarios, run_seeds, run_arm, run_out, run_config, run_no_gate,
                           run_clock);
        if (report->parsed()) return cmd_report(report_in);
    } catch (const std::exception& e) {
        std::cerr << "tempo: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
