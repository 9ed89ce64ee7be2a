// Simulated MCP domain server: JSON-RPC 2.0 over stdio, one message per line.
// Serves deterministic tools over seeded CSV tables so pipeline experiments
// are reproducible. Stands in for the real asset-operations servers.
//
// Environment:
//   TEMPO_SIM_DATA_DIR     directory with the CSV tables and manifests/
//   TEMPO_SIM_LATENCY_MS   artificial latency applied to every tools/call
//   TEMPO_SIM_SPAWN_MS     artificial startup latency before serving
//   TEMPO_SIM_SEED         seed for out-of-table deterministic values
//   TEMPO_SIM_LOG          append RECV/SEND lines (monotonic ns) to this file
// Test-fixture behaviors (all default off):
//   TEMPO_SIM_NO_TOOLS     tools/list returns an empty list
//   TEMPO_SIM_FAIL_CALLS   every tools/call returns a JSON-RPC error
//   TEMPO_SIM_GARBAGE      tools/call responses are non-JSON lines
//   TEMPO_SIM_BAD_ID       responses carry a wrong request id
//   TEMPO_SIM_NO_RESPONSE  tools/call never answers (timeout fixture)

#include <time.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tempo/csv.hpp"
#include "tempo/scoring.hpp"
#include "tempo/time_util.hpp"

using nlohmann::json;

namespace {

struct SimConfig {
    std::string domain;
    std::string data_dir;
    long latency_ms = 0;
    long spawn_ms = 0;
    uint64_t seed = 42;
    std::string log_path;
    bool no_tools = false;
    bool fail_calls = false;
    bool garbage = false;
    bool bad_id = false;
    bool no_response = false;
};

long env_long(const char* name, long fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    return std::strtol(v, nullptr, 10);
}

bool env_flag(const char* name) {
    const char* v = std::getenv(name);
    return v && *v && std::string(v) != "0";
}

int64_t mono_ns() {
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return int64_t(ts.tv_sec) * 1000000000 + ts.tv_nsec;
}

class EventLog {
public:
    EventLog(const std::string& path, std::string domain) : domain_(std::move(domain)) {
        if (!path.empty()) out_.open(path, std::ios::app);
    }
    void log(const char* kind, int64_t id, const std::string& method, const std::string& tool) {
        if (!out_.is_open()) return;
        out_ << kind << " " << mono_ns() << " " << domain_ << " id=" << id
             << " method=" << method << " tool=" << tool << "\n";
        out_.flush();
    }

private:
    std::string domain_;
    std::ofstream out_;
};

struct Tables {
    // asset -> site
    std::map<std::string, std::string> assets;
    // asset -> [(sensor, unit, threshold)]
    struct SensorInfo {
        std::string sensor, unit;
        double threshold;
    };
    std::map<std::string, std::vector<SensorInfo>> sensors;
    // (asset|sensor|day) -> value
    std::map<std::string, double> readings;
    struct FailureMode {
        std::string mode_id, asset, name, sensor;
    };
    std::vector<FailureMode> failure_modes;
    struct WorkOrder {
        std::string wo_id, asset, status, opened, closed, description;
    };
    std::vector<WorkOrder> work_orders;
    struct Model {
        std::string model, granularity;
        long horizon_days;
    };
    std::vector<Model> models;

    static std::string rkey(const std::string& a, const std::string& s, const std::string& d) {
        return a + "|" + s + "|" + d;
    }
};

Tables load_tables(const std::string& dir, const std::string& domain) {
    Tables t;
    auto rows_of = [&](const char* file) {
        auto rows = tempo::csv::read_file(dir + "/" + file);
        if (rows.empty()) throw std::runtime_error(std::string(file) + ": empty");
        rows.erase(rows.begin());  // header
        return rows;
    };
    if (domain == "iot" || domain == "tsfm") {
        for (auto& r : rows_of("assets.csv")) t.assets[r[0]] = r[1];
        for (auto& r : rows_of("sensors.csv"))
            t.sensors[r[0]].push_back({r[1], r[2], std::stod(r[3])});
        for (auto& r : rows_of("readings.csv"))
            t.readings[Tables::rkey(r[0], r[1], r[2])] = std::stod(r[3]);
    }
    if (domain == "fmsr") {
        for (auto& r : rows_of("failure_modes.csv"))
            t.failure_modes.push_back({r[0], r[1], r[2], r[3]});
    }
    if (domain == "wo") {
        for (auto& r : rows_of("work_orders.csv"))
            t.work_orders.push_back({r[0], r[1], r[2], r[3], r[4], r[5]});
    }
    if (domain == "tsfm") {
        for (auto& r : rows_of("models.csv")) t.models.push_back({r[0], r[1], std::stol(r[2])});
    }
    return t;
}

struct ToolFailure {
    int code;
    std::string message;
};

using Handler = std::function<json(const json&)>;

json require_str(const json& args, const char* key) {
    if (!args.contains(key) || !args[key].is_string())
        throw ToolFailure{-32602, std::string("missing or non-string argument '") + key + "'"};
    return args[key];
}

long require_int(const json& args, const char* key) {
    if (!args.contains(key) || !args[key].is_number_integer())
        throw ToolFailure{-32602, std::string("missing or non-integer argument '") + key + "'"};
    return args[key].get<long>();
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::map<std::string, Handler> make_handlers(const std::string& domain, const Tables& t,
                                             uint64_t seed) {
    std::map<std::string, Handler> h;

    auto check_asset = [&t](const std::string& asset) {
        if (!t.sensors.count(asset)) throw ToolFailure{-32000, "unknown asset '" + asset + "'"};
    };
    auto check_sensor = [&t, check_asset](const std::string& asset, const std::string& sensor) {
        check_asset(asset);
        for (const auto& s : t.sensors.at(asset))
            if (s.sensor == sensor) return;
        throw ToolFailure{-32000, "unknown sensor '" + sensor + "' on asset '" + asset + "'"};
    };
    auto check_day = [](const std::string& day) {
        if (!tempo::parse_iso_date(day))
            throw ToolFailure{-32602, "bad day '" + day + "', expected YYYY-MM-DD"};
    };

    if (domain == "iot") {
        h["list_assets"] = [&t](const json&) {
            json arr = json::array();
            for (const auto& [asset, site] : t.assets)
                arr.push_back({{"asset", asset}, {"site", site}});
            return json{{"assets", arr}};
        };
        h["list_sensors"] = [&t, check_asset](const json& args) {
            std::string asset = require_str(args, "asset");
            check_asset(asset);
            json arr = json::array();
            for (const auto& s : t.sensors.at(asset))
                arr.push_back({{"sensor", s.sensor}, {"unit", s.unit}});
            return json{{"asset", asset}, {"sensors", arr}};
        };
        h["get_sensor_reading"] = [&t, check_sensor, check_day](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string sensor = require_str(args, "sensor");
            std::string day = require_str(args, "day");
            check_sensor(asset, sensor);
            check_day(day);
            auto it = t.readings.find(Tables::rkey(asset, sensor, day));
            if (it == t.readings.end())
                throw ToolFailure{-32000, "no reading for " + asset + "/" + sensor + " on " + day};
            return json{{"asset", asset}, {"sensor", sensor}, {"day", day}, {"value", it->second}};
        };
        h["get_sensor_window"] = [&t, check_sensor, check_day](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string sensor = require_str(args, "sensor");
            std::string start = require_str(args, "start_day");
            std::string end = require_str(args, "end_day");
            check_sensor(asset, sensor);
            check_day(start);
            check_day(end);
            auto d0 = *tempo::parse_iso_date(start);
            auto d1 = *tempo::parse_iso_date(end);
            json values = json::array();
            double sum = 0, lo = 0, hi = 0;
            int count = 0;
            for (auto d = d0; d < d1; d += std::chrono::days{1}) {
                auto it = t.readings.find(Tables::rkey(asset, sensor, tempo::format_iso_date(d)));
                if (it == t.readings.end()) continue;
                values.push_back({{"day", tempo::format_iso_date(d)}, {"value", it->second}});
                if (count == 0) lo = hi = it->second;
                lo = std::min(lo, it->second);
                hi = std::max(hi, it->second);
                sum += it->second;
                ++count;
            }
            json out{{"asset", asset}, {"sensor", sensor},      {"start_day", start},
                     {"end_day", end}, {"count", count},        {"values", values}};
            if (count > 0) {
                out["mean"] = round2(sum / count);
                out["min"] = lo;
                out["max"] = hi;
            }
            return out;
        };
        h["detect_anomalies"] = [&t, check_asset, check_day](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string day = require_str(args, "day");
            check_asset(asset);
            check_day(day);
            json arr = json::array();
            for (const auto& s : t.sensors.at(asset)) {
                auto it = t.readings.find(Tables::rkey(asset, s.sensor, day));
                if (it == t.readings.end()) continue;
                if (it->second > s.threshold)
                    arr.push_back({{"sensor", s.sensor},
                                   {"value", it->second},
                                   {"threshold", s.threshold}});
            }
            return json{{"asset", asset}, {"day", day}, {"anomalies", arr}};
        };
    }

    if (domain == "fmsr") {
        h["list_failure_modes"] = [&t](const json& args) {
            std::optional<std::string> asset;
            if (args.contains("asset")) asset = args["asset"].get<std::string>();
            json arr = json::array();
            for (const auto& m : t.failure_modes) {
                if (asset && m.asset != *asset) continue;
                arr.push_back({{"mode_id", m.mode_id},
                               {"asset", m.asset},
                               {"name", m.name},
                               {"sensor", m.sensor}});
            }
            return json{{"modes", arr}};
        };
        h["get_failure_mode"] = [&t](const json& args) {
            std::string id = require_str(args, "mode_id");
            for (const auto& m : t.failure_modes)
                if (m.mode_id == id)
                    return json{{"mode_id", m.mode_id},
                                {"asset", m.asset},
                                {"name", m.name},
                                {"sensor", m.sensor}};
            throw ToolFailure{-32000, "unknown failure mode '" + id + "'"};
        };
        h["failure_modes_for_sensor"] = [&t](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string sensor = require_str(args, "sensor");
            json arr = json::array();
            for (const auto& m : t.failure_modes)
                if (m.asset == asset && m.sensor == sensor)
                    arr.push_back({{"mode_id", m.mode_id}, {"name", m.name}});
            return json{{"asset", asset}, {"sensor", sensor}, {"modes", arr}};
        };
        h["sensors_for_failure_mode"] = [&t](const json& args) {
            std::string id = require_str(args, "mode_id");
            json arr = json::array();
            bool found = false;
            for (const auto& m : t.failure_modes)
                if (m.mode_id == id) {
                    arr.push_back(m.sensor);
                    found = true;
                }
            if (!found) throw ToolFailure{-32000, "unknown failure mode '" + id + "'"};
            return json{{"mode_id", id}, {"sensors", arr}};
        };
    }

    if (domain == "tsfm") {
        h["list_models"] = [&t](const json&) {
            json arr = json::array();
            for (const auto& m : t.models)
                arr.push_back({{"model", m.model},
                               {"granularity", m.granularity},
                               {"horizon_days", m.horizon_days}});
            return json{{"models", arr}};
        };
        h["forecast"] = [&t, check_sensor, check_day, seed](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string sensor = require_str(args, "sensor");
            std::string start = require_str(args, "start_day");
            long horizon = require_int(args, "horizon_days");
            check_sensor(asset, sensor);
            check_day(start);
            if (horizon <= 0 || horizon > 365)
                throw ToolFailure{-32602, "horizon_days out of range"};
            auto d0 = *tempo::parse_iso_date(start);
            json points = json::array();
            for (long i = 0; i < horizon; ++i) {
                std::string day = tempo::format_iso_date(d0 + std::chrono::days{i});
                auto it = t.readings.find(Tables::rkey(asset, sensor, day));
                double v;
                if (it != t.readings.end()) {
                    v = it->second;
                } else {
                    uint64_t hsh = tempo::fnv1a64(asset + "|" + sensor + "|" + day + "|" +
                                                  std::to_string(seed));
                    v = 50.0 + double(hsh % 10000) / 100.0;
                }
                points.push_back({{"day", day}, {"value", round2(v)}});
            }
            return json{{"asset", asset},
                        {"sensor", sensor},
                        {"start_day", start},
                        {"horizon_days", horizon},
                        {"points", points}};
        };
        h["evaluate_model"] = [&t, seed](const json& args) {
            std::string model = require_str(args, "model");
            std::string asset = require_str(args, "asset");
            std::string sensor = require_str(args, "sensor");
            bool known = false;
            for (const auto& m : t.models) known = known || m.model == model;
            if (!known) throw ToolFailure{-32000, "unknown model '" + model + "'"};
            uint64_t hsh =
                tempo::fnv1a64(model + "|" + asset + "|" + sensor + "|" + std::to_string(seed));
            double mape = 2.0 + double(hsh % 1000) / 100.0;
            return json{
                {"model", model}, {"asset", asset}, {"sensor", sensor}, {"mape", round2(mape)}};
        };
    }

    if (domain == "wo") {
        auto order_json = [](const Tables::WorkOrder& o) {
            return json{{"wo_id", o.wo_id},   {"asset", o.asset},
                        {"status", o.status}, {"opened", o.opened},
                        {"closed", o.closed}, {"description", o.description}};
        };
        h["list_work_orders"] = [&t, order_json](const json& args) {
            std::optional<std::string> asset, status;
            if (args.contains("asset")) asset = args["asset"].get<std::string>();
            if (args.contains("status")) status = args["status"].get<std::string>();
            json arr = json::array();
            for (const auto& o : t.work_orders) {
                if (asset && o.asset != *asset) continue;
                if (status && o.status != *status) continue;
                arr.push_back(order_json(o));
            }
            return json{{"orders", arr}};
        };
        h["get_work_order"] = [&t, order_json](const json& args) {
            std::string id = require_str(args, "wo_id");
            for (const auto& o : t.work_orders)
                if (o.wo_id == id) return order_json(o);
            throw ToolFailure{-32000, "unknown work order '" + id + "'"};
        };
        h["work_order_history"] = [&t, order_json, check_day](const json& args) {
            std::string asset = require_str(args, "asset");
            std::string start = require_str(args, "start_day");
            std::string end = require_str(args, "end_day");
            check_day(start);
            check_day(end);
            json arr = json::array();
            for (const auto& o : t.work_orders) {
                if (o.asset != asset) continue;
                if (o.opened >= start && o.opened < end) arr.push_back(order_json(o));
            }
            return json{{"asset", asset}, {"start_day", start}, {"end_day", end}, {"orders", arr}};
        };
        h["summarize_backlog"] = [&t](const json&) {
            json by_asset = json::object();
            int open_count = 0;
            for (const auto& o : t.work_orders) {
                if (o.status != "open") continue;
                ++open_count;
                by_asset[o.asset] = by_asset.value(o.asset, 0) + 1;
            }
            return json{{"open_count", open_count}, {"by_asset", by_asset}};
        };
    }

    return h;
}

json load_manifest(const std::string& data_dir, const std::string& domain) {
    std::string path = data_dir + "/manifests/" + domain + ".json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest " + path);
    json m = json::parse(in);
    if (!m.is_array()) throw std::runtime_error("manifest " + path + " is not an array");
    return m;
}

void write_response(const json& response) {
    std::string line = response.dump();
    std::fwrite(line.data(), 1, line.size(), stdout);
    std::fputc('\n', stdout);
    std::fflush(stdout);
}

json error_response(const json& id, int code, const std::string& message) {
    return json{{"jsonrpc", "2.0"}, {"id", id}, {"error", {{"code", code}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempo-sim: simulated MCP domain server (JSON-RPC 2.0 over stdio)"};
    SimConfig cfg;
    app.add_option("--domain", cfg.domain, "Domain to serve")
        ->required()
        ->check(CLI::IsMember({"iot", "fmsr", "tsfm", "wo"}));
    app.add_option("--data-dir", cfg.data_dir, "Override TEMPO_SIM_DATA_DIR");
    CLI11_PARSE(app, argc, argv);

    if (cfg.data_dir.empty()) {
        const char* env = std::getenv("TEMPO_SIM_DATA_DIR");
        if (env && *env) cfg.data_dir = env;
    }
    if (cfg.data_dir.empty()) {
        std::cerr << "tempo-sim: TEMPO_SIM_DATA_DIR not set and --data-dir not given\n";
        return 2;
    }
    cfg.latency_ms = env_long("TEMPO_SIM_LATENCY_MS", 0);
    cfg.spawn_ms = env_long("TEMPO_SIM_SPAWN_MS", 0);
    cfg.seed = uint64_t(env_long("TEMPO_SIM_SEED", 42));
    if (const char* lp = std::getenv("TEMPO_SIM_LOG"); lp) cfg.log_path = lp;
    cfg.no_tools = env_flag("TEMPO_SIM_NO_TOOLS");
    cfg.fail_calls = env_flag("TEMPO_SIM_FAIL_CALLS");
    cfg.garbage = env_flag("TEMPO_SIM_GARBAGE");
    cfg.bad_id = env_flag("TEMPO_SIM_BAD_ID");
    cfg.no_response = env_flag("TEMPO_SIM_NO_RESPONSE");

    Tables tables;
    json manifest;
    std::map<std::string, Handler> handlers;
    try {
        tables = load_tables(cfg.data_dir, cfg.domain);
        manifest = load_manifest(cfg.data_dir, cfg.domain);
        handlers = make_handlers(cfg.domain, tables, cfg.seed);
        // The manifest is the single source of truth for the tool surface;
        // refuse to start on any mismatch with the handler table.
        for (const json& t : manifest)
            if (!handlers.count(t.at("name").get<std::string>()))
                throw std::runtime_error("manifest tool '" + t["name"].get<std::string>() +
                                         "' has no handler");
        if (manifest.size() != handlers.size())
            throw std::runtime_error("handler count does not match manifest");
    } catch (const std::exception& e) {
        std::cerr << "tempo-sim[" << cfg.domain << "]: " << e.what() << "\n";
        return 2;
    }

    if (cfg.spawn_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg.spawn_ms));

    EventLog log(cfg.log_path, cfg.domain);

    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        json req = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (req.is_discarded() || !req.is_object()) {
            write_response(error_response(nullptr, -32700, "parse error"));
            continue;
        }
        json id = req.value("id", json(nullptr));
        std::string method = req.value("method", "");
        json params = req.value("params", json::object());
        std::string tool =
            method == "tools/call" ? params.value("name", std::string{}) : std::string{};
        log.log("RECV", id.is_number_integer() ? id.get<int64_t>() : -1, method, tool);

        json response;
        if (method == "initialize") {
            response = json{{"jsonrpc", "2.0"},
                            {"id", id},
                            {"result",
                             {{"protocolVersion", "2024-11-05"},
                              {"serverInfo", {{"name", "tempo-sim-" + cfg.domain}, {"version", "0.1"}}},
                              {"capabilities", {{"tools", json::object()}}}}}};
        } else if (method == "tools/list") {
            json tools = json::array();
            if (!cfg.no_tools)
                for (const json& t : manifest) tools.push_back(t);
            response = json{{"jsonrpc", "2.0"}, {"id", id}, {"result", {{"tools", tools}}}};
        } else if (method == "tools/call") {
            if (cfg.latency_ms > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(cfg.latency_ms));
            if (cfg.no_response) continue;
            if (cfg.garbage) {
                std::fputs("%% this is not json %%\n", stdout);
                std::fflush(stdout);
                continue;
            }
            if (cfg.fail_calls) {
                response = error_response(id, -32050, "simulated tool failure");
            } else if (!handlers.count(tool) || cfg.no_tools) {
                response = error_response(id, -32601, "method not found: tool '" + tool + "'");
            } else {
                try {
                    json result = handlers[tool](params.value("arguments", json::object()));
                    json content = json::array(
                        {{{"type", "text"}, {"text", result.dump()}}});
                    response = json{
                        {"jsonrpc", "2.0"}, {"id", id}, {"result", {{"content", content}}}};
                } catch (const ToolFailure& f) {
                    response = error_response(id, f.code, f.message);
                } catch (const std::exception& e) {
                    response = error_response(id, -32000, std::string("tool error: ") + e.what());
                }
            }
        } else {
            response = error_response(id, -32601, "method not found: " + method);
        }

        if (cfg.bad_id && response.contains("id") && response["id"].is_number_integer())
            response["id"] = response["id"].get<int64_t>() + 1000;
        log.log("SEND", id.is_number_integer() ? id.get<int64_t>() : -1, method, tool);
        write_response(response);
    }
    return 0;
}
