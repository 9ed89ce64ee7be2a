#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempo/tool_catalog.hpp"

namespace tempo {

// Wire protocol: JSON-RPC 2.0 over stdio, newline-delimited. Every message is
// a single line of UTF-8 JSON terminated by LF, with no embedded raw
// newlines. Supported methods: initialize, tools/list, tools/call.

struct McpError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SpawnError : McpError {
    using McpError::McpError;
};
struct ProtocolError : McpError {
    using McpError::McpError;
};
struct TimeoutError : McpError {
    using McpError::McpError;
};
/// A JSON-RPC error response. The session that produced it stays usable.
struct ToolError : McpError {
    ToolError(int code_, const std::string& message)
        : McpError(message), code(code_) {}
    int code;
};

struct ServerSpec {
    std::string name;
    std::vector<std::string> command;        // executable path + args
    std::map<std::string, std::string> env;  // extra environment for the child
};

class ServerRegistry {
public:
    void add(ServerSpec spec);
    const ServerSpec* find(const std::string& name) const;
    std::vector<std::string> names() const;  // sorted
    bool empty() const { return specs_.empty(); }

private:
    std::map<std::string, ServerSpec> specs_;
};

enum class SessionState { Starting, Ready, Failed, Closed };

const char* to_string(SessionState s);

/// One stdio child process speaking the wire protocol. Request ids are
/// strictly increasing per session and at most one request is in flight at a
/// time: concurrent callers serialize on an internal mutex.
///
/// Timeouts and malformed wire data mark the session Failed and kill the
/// child; a JSON-RPC error response is surfaced as ToolError and leaves the
/// session Ready.
class ServerSession {
public:
    // Spawns the process and performs the initialize handshake. Throws
    // SpawnError (process could not start or handshake failed).
    static std::unique_ptr<ServerSession> spawn(const ServerSpec& spec,
                                                std::chrono::milliseconds handshake_timeout);

    ~ServerSession();
    ServerSession(const ServerSession&) = delete;
    ServerSession& operator=(const ServerSession&) = delete;

    nlohmann::json call_tool(const std::string& tool, const nlohmann::json& args,
                             std::chrono::milliseconds timeout);

    std::vector<ToolSignature> list_tools(std::chrono::milliseconds timeout);

    SessionState state() const { return state_.load(); }
    const ServerSpec& spec() const { return spec_; }
    uint64_t messages_sent() const { return messages_sent_.load(); }
    int64_t last_request_id() const { return next_request_id_.load() - 1; }

    void close();

private:
    ServerSession() = default;
    void start_process(const ServerSpec& spec);
    void initialize(std::chrono::milliseconds timeout);
    nlohmann::json rpc(const std::string& method, const nlohmann::json& params,
                       std::chrono::milliseconds timeout, bool handshake);
    std::string read_line(std::chrono::steady_clock::time_point deadline);
    void write_line(const std::string& line);
    void fail_and_kill();
    void reap(bool force_kill);

    ServerSpec spec_;
    int pid_ = -1;
    int to_child_ = -1;    // write end of child's stdin
    int from_child_ = -1;  // read end of child's stdout
    std::string read_buffer_;
    std::atomic<int64_t> next_request_id_{1};
    std::atomic<uint64_t> messages_sent_{0};
    std::atomic<SessionState> state_{SessionState::Starting};
    std::mutex call_mu_;
};

struct PoolConfig {
    std::chrono::milliseconds handshake_timeout{10000};
    std::chrono::milliseconds call_timeout{30000};
};

/// Persistent per-server session pool. At most one live session per server
/// name; acquiring distinct servers never blocks on each other; a failed
/// session is isolated and respawned on the next acquire of that name.
class ServerPool {
public:
    explicit ServerPool(ServerRegistry registry, PoolConfig config = {});
    ~ServerPool();
    ServerPool(const ServerPool&) = delete;
    ServerPool& operator=(const ServerPool&) = delete;

    // Returns the existing Ready session or spawns exactly one new process.
    // Idempotent under concurrent acquisition of the same name.
    std::shared_ptr<ServerSession> acquire(const std::string& name);

    void close_all();

    uint64_t spawn_count(const std::string& name) const;
    uint64_t total_spawn_count() const;
    uint64_t message_count(const std::string& name) const;
    uint64_t total_message_count() const;

    const ServerRegistry& registry() const { return registry_; }
    const PoolConfig& config() const { return config_; }

private:
    struct Slot {
        std::mutex mu;
        std::shared_ptr<ServerSession> session;
        uint64_t spawns = 0;
        uint64_t messages_closed = 0;
    };
    std::shared_ptr<Slot> slot_for(const std::string& name);

    ServerRegistry registry_;
    PoolConfig config_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace tempo
