#include "tempo/evalharness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "tempo/csv.hpp"
#include "tempo/scoring.hpp"

namespace tempo {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Tier t) {
    switch (t) {
        case Tier::Seed: return "seed";
        case Tier::Warm: return "warm";
        case Tier::Cold: return "cold";
    }
    return "?";
}

Tier tier_from_string(const std::string& s) {
    if (s == "seed") return Tier::Seed;
    if (s == "warm") return Tier::Warm;
    if (s == "cold") return Tier::Cold;
    throw std::runtime_error("unknown tier '" + s + "'");
}

const char* to_string(Arm a) { return a == Arm::Baseline ? "baseline" : "optimized"; }

// ── scenario CSV ────────────────────────────────────────────────────────

std::vector<ScenarioRow> read_scenario_csv(const fs::path& path) {
    auto rows = csv::read_file(path);
    if (rows.empty()) throw std::runtime_error("scenario csv is empty: " + path.string());
    const csv::Row header = {"id", "parent_id", "text", "tier", "timestamp"};
    if (rows.front() != header)
        throw std::runtime_error("scenario csv has unexpected header: " + path.string());
    std::vector<ScenarioRow> out;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != 5)
            throw std::runtime_error(path.string() + ": row " + std::to_string(i + 1) +
                                     " has " + std::to_string(r.size()) + " fields");
        ScenarioRow row;
        row.id = r[0];
        row.parent_id = r[1];
        row.text = r[2];
        row.tier = tier_from_string(r[3]);
        auto ts = parse_iso8601(r[4]);
        if (!ts)
            throw std::runtime_error(path.string() + ": row " + std::to_string(i + 1) +
                                     " has bad timestamp '" + r[4] + "'");
        if (row.text.empty())
            throw std::runtime_error(path.string() + ": row " + std::to_string(i + 1) +
                                     " has empty text");
        row.timestamp = *ts;
        out.push_back(std::move(row));
    }
    return out;
}

void write_scenario_csv(const fs::path& path, const std::vector<ScenarioRow>& rows) {
    std::vector<csv::Row> out;
    out.push_back({"id", "parent_id", "text", "tier", "timestamp"});
    for (const auto& r : rows)
        out.push_back({r.id, r.parent_id, r.text, to_string(r.tier), format_iso8601(r.timestamp)});
    csv::write_file(path, out);
}

// ── paraphraser ─────────────────────────────────────────────────────────

namespace {

std::string lower_first(std::string s) {
    if (!s.empty()) s[0] = char(std::tolower(static_cast<unsigned char>(s[0])));
    return s;
}

std::string title_case_words(const std::string& s) {
    std::string out = s;
    bool at_word_start = true;
    for (auto& c : out) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::isalpha(uc)) {
            c = char(at_word_start ? std::toupper(uc) : std::tolower(uc));
            at_word_start = false;
        } else {
            at_word_start = !std::isalnum(uc);
        }
    }
    return out;
}

// Moves a trailing " from X ..." clause to the front, keeping the token set.
std::optional<std::string> rotate_from_clause(const std::string& s) {
    auto pos = s.rfind(" from ");
    if (pos == std::string::npos || pos == 0) return std::nullopt;
    std::string head = s.substr(0, pos);
    std::string tail = s.substr(pos + 1);  // "from ..."
    return tail + ", " + lower_first(head);
}

// Safe swaps only: never a template keyword or an operational parameter.
const std::vector<std::pair<std::string, std::string>>& synonym_table() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"show", "display"}, {"get", "fetch"}, {"all", "every"}, {"list", "enumerate"}};
    return table;
}

std::string swap_synonym(const std::string& s, uint64_t seed) {
    const auto& table = synonym_table();
    size_t start = fnv1a64(s + "#" + std::to_string(seed)) % table.size();
    for (size_t k = 0; k < table.size(); ++k) {
        const auto& [from, to] = table[(start + k) % table.size()];
        std::regex re("\\b" + from + "\\b");
        if (std::regex_search(s, re)) return std::regex_replace(s, re, to, std::regex_constants::format_first_only);
    }
    return "kindly " + lower_first(s);
}

}  // namespace

std::string paraphrase(const std::string& text, int variant_index, uint64_t rng_seed) {
    switch (((variant_index % 6) + 6) % 6) {
        case 0: return text;
        case 1: return title_case_words(text);
        case 2: {
            if (auto rotated = rotate_from_clause(text)) return *rotated;
            if (!text.empty() && text.back() == '?') return text.substr(0, text.size() - 1);
            return text + "?";
        }
        case 3: return "please " + lower_first(text);
        case 4: return text + ", thanks";
        default: return swap_synonym(text, rng_seed);
    }
}

std::string shift_parameters(const std::string& text, int variant_index) {
    auto replace_all = [](std::string s, const std::string& from, const std::string& to) {
        size_t pos = 0;
        while ((pos = s.find(from, pos)) != std::string::npos) {
            s.replace(pos, from.size(), to);
            pos += to.size();
        }
        return s;
    };

    int dim = ((variant_index % 3) + 3) % 3;
    for (int attempt = 0; attempt < 3; ++attempt, dim = (dim + 1) % 3) {
        if (dim == 0) {  // time window
            if (text.find("-06-") != std::string::npos)
                return replace_all(text, "-06-", "-12-");
            if (text.find("-12-") != std::string::npos)
                return replace_all(text, "-12-", "-06-");
            std::regex june("\\bJune\\b");
            if (std::regex_search(text, june)) return std::regex_replace(text, june, "December");
        } else if (dim == 1) {  // asset
            static const std::vector<std::pair<std::string, std::string>> swaps = {
                {"Chiller 6", "Chiller 9"},
                {"Chiller 9", "Chiller 6"},
                {"AHU 1", "AHU 2"},
                {"Pump 2", "Pump 3"}};
            for (const auto& [from, to] : swaps)
                if (text.find(from) != std::string::npos) return replace_all(text, from, to);
        } else {  // sensor
            static const std::vector<std::pair<std::string, std::string>> swaps = {
                {"Tonnage", "% Loaded"},
                {"% Loaded", "Tonnage"},
                {"Efficiency", "Tonnage"},
                {"Supply Temp", "Fan Speed"},
                {"Flow Rate", "Power Draw"}};
            for (const auto& [from, to] : swaps)
                if (text.find(from) != std::string::npos) return replace_all(text, from, to);
        }
    }
    return "regarding another site entirely, " + text;
}

// ── workload builder ────────────────────────────────────────────────────

Workload build_workload(const std::vector<ScenarioRow>& corpus, const WorkloadSpec& spec) {
    if (corpus.empty()) throw std::invalid_argument("gen-workload: empty corpus");
    if (spec.warm_count <= 0 || spec.warm_count > int(corpus.size()))
        throw std::invalid_argument("gen-workload: warm_count must be in [1, corpus size]");
    if (spec.warm_fraction <= 0.0 || spec.warm_fraction >= 1.0)
        throw std::invalid_argument("gen-workload: warm_fraction must be in (0, 1)");
    if (spec.test_size <= 0) throw std::invalid_argument("gen-workload: test_size must be positive");

    // Seeded Fisher-Yates so the warm/cold partition is reproducible and
    // independent of the standard library's shuffle implementation.
    std::vector<size_t> order(corpus.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(spec.rng_seed);
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);

    std::vector<const ScenarioRow*> warm, cold;
    for (size_t i = 0; i < order.size(); ++i) {
        if (int(i) < spec.warm_count)
            warm.push_back(&corpus[order[i]]);
        else
            cold.push_back(&corpus[order[i]]);
    }

    int warm_rows = int(std::ceil(spec.warm_fraction * spec.test_size));
    int cold_rows = spec.test_size - warm_rows;
    if (!spec.adversarial && cold_rows > 0 && cold.empty())
        throw std::invalid_argument("gen-workload: no cold parents left for cold rows");

    Workload out;
    for (size_t i = 0; i < warm.size(); ++i) {
        ScenarioRow row;
        char id[16];
        std::snprintf(id, sizeof(id), "s%03zu", i);
        row.id = id;
        row.parent_id = warm[i]->id;
        row.text = paraphrase(warm[i]->text, 0, spec.rng_seed);
        row.tier = Tier::Seed;
        row.timestamp = warm[i]->timestamp;
        out.seed_rows.push_back(std::move(row));
        out.warm_parents.insert(warm[i]->id);
    }

    for (int i = 0; i < warm_rows; ++i) {
        const ScenarioRow* parent = warm[size_t(i) % warm.size()];
        ScenarioRow row;
        char id[16];
        std::snprintf(id, sizeof(id), "w%03d", i);
        row.id = id;
        row.parent_id = parent->id;
        row.text = paraphrase(parent->text, 1 + (i % 5), spec.rng_seed);
        row.tier = Tier::Warm;
        row.timestamp = parent->timestamp;
        out.test_rows.push_back(std::move(row));
    }

    for (int i = 0; i < cold_rows; ++i) {
        ScenarioRow row;
        char id[16];
        std::snprintf(id, sizeof(id), "c%03d", i);
        row.id = id;
        if (spec.adversarial) {
            // Parameter-shifted twins of warm parents: same frame, different
            // operational parameters, must-miss ground truth.
            const ScenarioRow* parent = warm[size_t(i) % warm.size()];
            row.parent_id = parent->id + "#shifted";
            row.text = shift_parameters(parent->text, i);
            row.timestamp = parent->timestamp;
        } else {
            const ScenarioRow* parent = cold[size_t(i) % cold.size()];
            row.parent_id = parent->id;
            row.text = paraphrase(parent->text, 1 + (i % 5), spec.rng_seed);
            row.timestamp = parent->timestamp;
        }
        row.tier = Tier::Cold;
        out.test_rows.push_back(std::move(row));
    }
    return out;
}

// ── paired runs ─────────────────────────────────────────────────────────

std::vector<PairedRun> run_paired(const std::vector<ScenarioRow>& test_rows,
                                  const std::vector<ScenarioRow>& seed_rows,
                                  const PipelineFactory& factory) {
    auto baseline = factory(Arm::Baseline);
    auto optimized = factory(Arm::Optimized);

    // Warm the optimized arm: answer every seed row so cacheable ones insert.
    for (const auto& seed : seed_rows) {
        Query q{seed.id, seed.text, seed.timestamp, seed.parent_id};
        optimized->answer_query(q);
    }

    std::vector<PairedRun> out;
    out.reserve(test_rows.size());
    for (const auto& row : test_rows) {
        Query q{row.id, row.text, row.timestamp, row.parent_id};
        PairedRun pair;
        pair.baseline = {row.id, row.parent_id, row.tier, Arm::Baseline,
                         baseline->answer_query(q), 0};
        pair.baseline.wall_us = pair.baseline.outcome.timings.total.count();
        pair.optimized = {row.id, row.parent_id, row.tier, Arm::Optimized,
                          optimized->answer_query(q), 0};
        pair.optimized.wall_us = pair.optimized.outcome.timings.total.count();
        out.push_back(std::move(pair));
    }
    return out;
}

// ── decision quality ────────────────────────────────────────────────────

double ConfusionMatrix::precision() const {
    return tp + fp > 0 ? double(tp) / double(tp + fp) : 0.0;
}
double ConfusionMatrix::recall() const {
    return tp + fn > 0 ? double(tp) / double(tp + fn) : 0.0;
}
double ConfusionMatrix::f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}
double ConfusionMatrix::specificity() const {
    return tn + fp > 0 ? double(tn) / double(tn + fp) : 0.0;
}

json ConfusionMatrix::to_json() const {
    return {{"tp", tp},
            {"fp", fp},
            {"fn", fn},
            {"tn", tn},
            {"precision", precision()},
            {"recall", recall()},
            {"f1", f1()},
            {"specificity", specificity()}};
}

ConfusionMatrix decision_quality(const std::vector<PairedRun>& runs,
                                 const std::set<std::string>& warm_parents) {
    ConfusionMatrix m;
    for (const auto& pair : runs) {
        bool warm = warm_parents.count(pair.optimized.parent_id) > 0;
        bool hit = pair.optimized.outcome.cache_decision == PipelineCacheDecision::Hit;
        if (hit)
            warm ? ++m.tp : ++m.fp;
        else
            warm ? ++m.fn : ++m.tn;
    }
    return m;
}

// ── latency statistics ──────────────────────────────────────────────────

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

double trimmed_mean(std::vector<double> values, double frac) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    size_t drop = size_t(std::floor(frac * double(values.size())));
    if (values.size() <= 2 * drop) return median(values);
    double sum = 0;
    size_t n = 0;
    for (size_t i = drop; i < values.size() - drop; ++i) {
        sum += values[i];
        ++n;
    }
    return sum / double(n);
}

json PhaseMediansMs::to_json() const {
    return {{"cache_lookup_ms", cache_lookup}, {"discovery_ms", discovery},
            {"planning_ms", planning},         {"prefetch_ms", prefetch},
            {"execution_ms", execution},       {"summarization_ms", summarization},
            {"total_ms", total}};
}

json LatencyStats::to_json() const {
    return {{"rows", rows},
            {"hit_rows", hit_rows},
            {"miss_rows", miss_rows},
            {"median_ratio", median_ratio},
            {"median_baseline_ms", median_baseline_ms},
            {"median_optimized_ms", median_optimized_ms},
            {"trimmed_mean_baseline_ms", trimmed_mean_baseline_ms},
            {"trimmed_mean_optimized_ms", trimmed_mean_optimized_ms},
            {"hit_rate", hit_rate},
            {"median_hit_speedup", median_hit_speedup},
            {"median_miss_delta_ms", median_miss_delta_ms},
            {"median_miss_baseline_ms", median_miss_baseline_ms},
            {"median_miss_optimized_ms", median_miss_optimized_ms},
            {"baseline_phases", baseline_phases.to_json()},
            {"optimized_phases", optimized_phases.to_json()}};
}

namespace {

double us_to_ms(int64_t us) { return double(us) / 1000.0; }

PhaseMediansMs phase_medians(const std::vector<PairedRun>& runs, Arm arm) {
    std::vector<double> lookup, discovery, planning, prefetch, execution, summarization, total;
    for (const auto& pair : runs) {
        const PhaseTimings& t =
            (arm == Arm::Baseline ? pair.baseline : pair.optimized).outcome.timings;
        lookup.push_back(us_to_ms(t.cache_lookup.count()));
        discovery.push_back(us_to_ms(t.discovery.count()));
        planning.push_back(us_to_ms(t.planning.count()));
        prefetch.push_back(us_to_ms(t.prefetch.count()));
        execution.push_back(us_to_ms(t.execution.count()));
        summarization.push_back(us_to_ms(t.summarization.count()));
        total.push_back(us_to_ms(t.total.count()));
    }
    PhaseMediansMs out;
    out.cache_lookup = median(lookup);
    out.discovery = median(discovery);
    out.planning = median(planning);
    out.prefetch = median(prefetch);
    out.execution = median(execution);
    out.summarization = median(summarization);
    out.total = median(total);
    return out;
}

}  // namespace

LatencyStats latency_stats(const std::vector<PairedRun>& runs) {
    LatencyStats s;
    s.rows = int64_t(runs.size());
    std::vector<double> ratios, base_ms, opt_ms, hit_ratios, miss_delta, miss_base, miss_opt;
    for (const auto& pair : runs) {
        double b = us_to_ms(pair.baseline.wall_us);
        double o = us_to_ms(pair.optimized.wall_us);
        base_ms.push_back(b);
        opt_ms.push_back(o);
        if (o > 0) ratios.push_back(b / o);
        bool hit = pair.optimized.outcome.cache_decision == PipelineCacheDecision::Hit;
        if (hit) {
            ++s.hit_rows;
            if (o > 0) hit_ratios.push_back(b / o);
        } else {
            ++s.miss_rows;
            miss_delta.push_back(o - b);
            miss_base.push_back(b);
            miss_opt.push_back(o);
        }
    }
    s.median_ratio = median(ratios);
    s.median_baseline_ms = median(base_ms);
    s.median_optimized_ms = median(opt_ms);
    s.trimmed_mean_baseline_ms = trimmed_mean(base_ms, 0.05);
    s.trimmed_mean_optimized_ms = trimmed_mean(opt_ms, 0.05);
    s.hit_rate = runs.empty() ? 0.0 : double(s.hit_rows) / double(runs.size());
    s.median_hit_speedup = median(hit_ratios);
    s.median_miss_delta_ms = median(miss_delta);
    s.median_miss_baseline_ms = median(miss_base);
    s.median_miss_optimized_ms = median(miss_opt);
    s.baseline_phases = phase_medians(runs, Arm::Baseline);
    s.optimized_phases = phase_medians(runs, Arm::Optimized);
    return s;
}

// ── report emission ─────────────────────────────────────────────────────

namespace {

std::string format_ratio(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::string render_summary_table(const LatencyStats& stats, const ConfusionMatrix& confusion) {
    std::ostringstream out;
    auto line = [&](const char* name, double b, double o) {
        char buf[128];
        if (o > 0)
            std::snprintf(buf, sizeof(buf), "%-14s %12.1f %12.1f %9.2fx\n", name, b, o, b / o);
        else
            std::snprintf(buf, sizeof(buf), "%-14s %12.1f %12.1f %9s\n", name, b, o, "-");
        out << buf;
    };
    out << "Phase medians (ms)      baseline    optimized   speedup\n";
    line("cache_lookup", stats.baseline_phases.cache_lookup, stats.optimized_phases.cache_lookup);
    line("discovery", stats.baseline_phases.discovery, stats.optimized_phases.discovery);
    line("planning", stats.baseline_phases.planning, stats.optimized_phases.planning);
    line("prefetch", stats.baseline_phases.prefetch, stats.optimized_phases.prefetch);
    line("execution", stats.baseline_phases.execution, stats.optimized_phases.execution);
    line("summarization", stats.baseline_phases.summarization,
         stats.optimized_phases.summarization);
    line("total", stats.baseline_phases.total, stats.optimized_phases.total);
    out << "\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "rows=%lld hits=%lld (hit rate %.1f%%), median speedup %.2fx, "
                  "median hit speedup %.2fx, median miss delta %+.1f ms\n",
                  (long long)stats.rows, (long long)stats.hit_rows, stats.hit_rate * 100.0,
                  stats.median_ratio, stats.median_hit_speedup, stats.median_miss_delta_ms);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "decision quality: tp=%lld fp=%lld fn=%lld tn=%lld "
                  "precision=%.4f recall=%.4f f1=%.4f specificity=%.4f\n",
                  (long long)confusion.tp, (long long)confusion.fp, (long long)confusion.fn,
                  (long long)confusion.tn, confusion.precision(), confusion.recall(),
                  confusion.f1(), confusion.specificity());
    out << buf;
    return out.str();
}

void emit_report(const LatencyStats& stats, const ConfusionMatrix& confusion,
                 const std::vector<PairedRun>& runs, const fs::path& out_dir) {
    fs::create_directories(out_dir);

    json report = {{"schema_version", 1},
                   {"stats", stats.to_json()},
                   {"confusion", confusion.to_json()}};
    {
        std::ofstream out(out_dir / "report.json", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (out_dir / "report.json").string());
        out << report.dump(2) << "\n";
    }

    std::vector<csv::Row> rows;
    rows.push_back({"id", "parent_id", "tier", "bucket", "decision", "baseline_us",
                    "optimized_us", "ratio"});
    for (const auto& pair : runs) {
        double ratio = pair.optimized.wall_us > 0
                           ? double(pair.baseline.wall_us) / double(pair.optimized.wall_us)
                           : 0.0;
        rows.push_back({pair.baseline.scenario_id, pair.baseline.parent_id,
                        to_string(pair.baseline.tier),
                        to_string(pair.optimized.outcome.bucket),
                        to_string(pair.optimized.outcome.cache_decision),
                        std::to_string(pair.baseline.wall_us),
                        std::to_string(pair.optimized.wall_us), format_ratio(ratio)});
    }
    csv::write_file(out_dir / "rows.csv", rows);

    {
        std::ofstream out(out_dir / "summary.txt", std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + (out_dir / "summary.txt").string());
        out << render_summary_table(stats, confusion);
    }
}

}  // namespace tempo
