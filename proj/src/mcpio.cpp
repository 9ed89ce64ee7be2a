#include "tempo/mcpio.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <thread>

extern char** environ;

namespace tempo {

using nlohmann::json;
using std::chrono::milliseconds;
using std::chrono::steady_clock;

const char* to_string(SessionState s) {
    switch (s) {
        case SessionState::Starting: return "starting";
        case SessionState::Ready: return "ready";
        case SessionState::Failed: return "failed";
        case SessionState::Closed: return "closed";
    }
    return "?";
}

namespace {

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

// ── ServerRegistry ──────────────────────────────────────────────────────

void ServerRegistry::add(ServerSpec spec) {
    if (spec.name.empty()) throw std::invalid_argument("registry: empty server name");
    if (spec.command.empty()) throw std::invalid_argument("registry: empty command");
    if (specs_.count(spec.name))
        throw std::invalid_argument("registry: duplicate server name '" + spec.name + "'");
    specs_.emplace(spec.name, std::move(spec));
}

const ServerSpec* ServerRegistry::find(const std::string& name) const {
    auto it = specs_.find(name);
    return it == specs_.end() ? nullptr : &it->second;
}

std::vector<std::string> ServerRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& [name, _] : specs_) out.push_back(name);
    return out;
}

// ── ServerSession ───────────────────────────────────────────────────────

std::unique_ptr<ServerSession> ServerSession::spawn(const ServerSpec& spec,
                                                    milliseconds handshake_timeout) {
    ignore_sigpipe_once();
    std::unique_ptr<ServerSession> s(new ServerSession());
    s->spec_ = spec;
    s->start_process(spec);
    s->initialize(handshake_timeout);
    return s;
}

void ServerSession::start_process(const ServerSpec& spec) {
    int in_pipe[2];   // parent -> child stdin
    int out_pipe[2];  // child stdout -> parent
    if (::pipe2(in_pipe, O_CLOEXEC) != 0)
        throw SpawnError("spawn " + spec.name + ": pipe: " + std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
        ::close(in_pipe[0]);
        ::close(in_pipe[1]);
        throw SpawnError("spawn " + spec.name + ": pipe: " + std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

    std::vector<std::string> argv_store = spec.command;
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());
    argv.push_back(nullptr);

    // Child environment: current environment with the spec's entries layered
    // on top.
    std::vector<std::string> env_store;
    for (char** e = environ; *e; ++e) {
        std::string entry = *e;
        auto eq = entry.find('=');
        std::string key = eq == std::string::npos ? entry : entry.substr(0, eq);
        if (!spec.env.count(key)) env_store.push_back(entry);
    }
    for (const auto& [k, v] : spec.env) env_store.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& e : env_store) envp.push_back(e.data());
    envp.push_back(nullptr);

    pid_t pid = -1;
    int rc = ::posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), envp.data());
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
        ::close(in_pipe[1]);
        ::close(out_pipe[0]);
        state_ = SessionState::Failed;
        throw SpawnError("spawn " + spec.name + ": " + spec.command[0] + ": " +
                         std::strerror(rc));
    }
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

void ServerSession::initialize(milliseconds timeout) {
    try {
        json params = {{"protocolVersion", "2024-11-05"},
                       {"clientInfo", {{"name", "tempo"}, {"version", "0.1"}}},
                       {"capabilities", json::object()}};
        json result = rpc("initialize", params, timeout, /*handshake=*/true);
        if (!result.is_object() || !result.contains("protocolVersion"))
            throw ProtocolError("initialize: malformed result");
        state_ = SessionState::Ready;
    } catch (const McpError& e) {
        fail_and_kill();
        throw SpawnError("handshake with " + spec_.name + " failed: " + e.what());
    }
}

nlohmann::json ServerSession::rpc(const std::string& method, const json& params,
                                  milliseconds timeout, bool handshake) {
    std::lock_guard lock(call_mu_);
    SessionState st = state_.load();
    if (handshake ? (st != SessionState::Starting) : (st != SessionState::Ready))
        throw ProtocolError("session " + spec_.name + " not usable (state " +
                            std::string(to_string(st)) + ")");

    int64_t id = next_request_id_.fetch_add(1);
    json request = {{"jsonrpc", "2.0"}, {"id", id}, {"method", method}, {"params", params}};
    write_line(request.dump());
    ++messages_sent_;

    auto deadline = steady_clock::now() + timeout;
    std::string line = read_line(deadline);

    json response;
    try {
        response = json::parse(line);
    } catch (const json::exception& e) {
        fail_and_kill();
        throw ProtocolError("malformed wire line from " + spec_.name + ": " + e.what());
    }
    if (!response.is_object() || response.value("jsonrpc", "") != "2.0" ||
        !response.contains("id")) {
        fail_and_kill();
        throw ProtocolError("invalid JSON-RPC response from " + spec_.name);
    }
    if (!response["id"].is_number_integer() || response["id"].get<int64_t>() != id) {
        fail_and_kill();
        throw ProtocolError("response id mismatch from " + spec_.name + " (sent " +
                            std::to_string(id) + ")");
    }
    if (response.contains("error")) {
        const json& err = response["error"];
        throw ToolError(err.value("code", -32000),
                        spec_.name + ": " + err.value("message", "unknown error"));
    }
    if (!response.contains("result")) {
        fail_and_kill();
        throw ProtocolError("response from " + spec_.name + " has neither result nor error");
    }
    return response["result"];
}

nlohmann::json ServerSession::call_tool(const std::string& tool, const json& args,
                                        milliseconds timeout) {
    json params = {{"name", tool}, {"arguments", args}};
    json result = rpc("tools/call", params, timeout, /*handshake=*/false);
    // Unwrap MCP-style content: [{"type":"text","text":"<json>"}].
    if (result.is_object() && result.contains("content") && result["content"].is_array() &&
        !result["content"].empty()) {
        const json& item = result["content"][0];
        if (item.is_object() && item.value("type", "") == "text") {
            const std::string& text = item.value("text", "");
            json parsed = json::parse(text, nullptr, /*allow_exceptions=*/false);
            if (!parsed.is_discarded()) return parsed;
            return json(text);
        }
    }
    return result;
}

std::vector<ToolSignature> ServerSession::list_tools(milliseconds timeout) {
    json result = rpc("tools/list", json::object(), timeout, /*handshake=*/false);
    if (!result.is_object() || !result.contains("tools") || !result["tools"].is_array()) {
        fail_and_kill();
        throw ProtocolError("tools/list from " + spec_.name + ": malformed result");
    }
    std::vector<ToolSignature> out;
    for (const json& t : result["tools"]) {
        ToolSignature sig;
        sig.server = spec_.name;
        sig.tool = t.value("name", "");
        sig.description = t.value("description", "");
        sig.params_schema = t.value("inputSchema", json::object());
        if (sig.tool.empty()) {
            fail_and_kill();
            throw ProtocolError("tools/list from " + spec_.name + ": tool without name");
        }
        out.push_back(std::move(sig));
    }
    return out;
}

void ServerSession::write_line(const std::string& line) {
    std::string framed = line;
    framed += '\n';
    size_t off = 0;
    while (off < framed.size()) {
        ssize_t n = ::write(to_child_, framed.data() + off, framed.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail_and_kill();
            throw ProtocolError("write to " + spec_.name + ": " + std::strerror(errno));
        }
        off += size_t(n);
    }
}

std::string ServerSession::read_line(steady_clock::time_point deadline) {
    while (true) {
        auto nl = read_buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = read_buffer_.substr(0, nl);
            read_buffer_.erase(0, nl + 1);
            return line;
        }
        auto remaining =
            std::chrono::duration_cast<milliseconds>(deadline - steady_clock::now());
        if (remaining.count() <= 0) {
            fail_and_kill();
            throw TimeoutError("timeout waiting for " + spec_.name);
        }
        struct pollfd pfd {};
        pfd.fd = from_child_;
        pfd.events = POLLIN;
        int pr = ::poll(&pfd, 1, int(std::min<int64_t>(remaining.count(), 1000)));
        if (pr < 0) {
            if (errno == EINTR) continue;
            fail_and_kill();
            throw ProtocolError("poll " + spec_.name + ": " + std::strerror(errno));
        }
        if (pr == 0) continue;
        char buf[4096];
        ssize_t n = ::read(from_child_, buf, sizeof(buf));
        if (n < 0) {
            if (errno == EINTR) continue;
            fail_and_kill();
            throw ProtocolError("read from " + spec_.name + ": " + std::strerror(errno));
        }
        if (n == 0) {
            fail_and_kill();
            throw ProtocolError("server " + spec_.name + " closed its stdout");
        }
        read_buffer_.append(buf, size_t(n));
    }
}

void ServerSession::fail_and_kill() {
    state_ = SessionState::Failed;
    reap(/*force_kill=*/true);
}

void ServerSession::reap(bool force_kill) {
    if (to_child_ >= 0) {
        ::close(to_child_);
        to_child_ = -1;
    }
    if (pid_ > 0) {
        if (force_kill) ::kill(pid_, SIGKILL);
        // Children exit on stdin EOF; give them a moment before escalating.
        auto deadline = steady_clock::now() + milliseconds(force_kill ? 2000 : 1000);
        while (true) {
            int status = 0;
            pid_t r = ::waitpid(pid_, &status, WNOHANG);
            if (r == pid_ || r < 0) break;
            if (steady_clock::now() >= deadline) {
                ::kill(pid_, SIGKILL);
                ::waitpid(pid_, &status, 0);
                break;
            }
            std::this_thread::sleep_for(milliseconds(2));
        }
        pid_ = -1;
    }
    if (from_child_ >= 0) {
        ::close(from_child_);
        from_child_ = -1;
    }
}

void ServerSession::close() {
    std::lock_guard lock(call_mu_);
    SessionState st = state_.load();
    if (st == SessionState::Ready || st == SessionState::Starting)
        state_ = SessionState::Closed;
    reap(/*force_kill=*/false);
}

ServerSession::~ServerSession() {
    std::lock_guard lock(call_mu_);
    reap(/*force_kill=*/false);
}

// ── ServerPool ──────────────────────────────────────────────────────────

ServerPool::ServerPool(ServerRegistry registry, PoolConfig config)
    : registry_(std::move(registry)), config_(config) {}

ServerPool::~ServerPool() { close_all(); }

std::shared_ptr<ServerPool::Slot> ServerPool::slot_for(const std::string& name) {
    std::lock_guard lock(mu_);
    auto it = slots_.find(name);
    if (it != slots_.end()) return it->second;
    auto slot = std::make_shared<Slot>();
    slots_.emplace(name, slot);
    return slot;
}

std::shared_ptr<ServerSession> ServerPool::acquire(const std::string& name) {
    const ServerSpec* spec = registry_.find(name);
    if (!spec) throw SpawnError("pool: server '" + name + "' is not registered");

    auto slot = slot_for(name);
    std::lock_guard lock(slot->mu);
    if (slot->session && slot->session->state() == SessionState::Ready) return slot->session;
    if (slot->session) {
        slot->messages_closed += slot->session->messages_sent();
        slot->session->close();
        slot->session.reset();
    }
    ++slot->spawns;
    slot->session = ServerSession::spawn(*spec, config_.handshake_timeout);
    return slot->session;
}

void ServerPool::close_all() {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(mu_);
        for (auto& [_, slot] : slots_) slots.push_back(slot);
    }
    for (auto& slot : slots) {
        std::lock_guard lock(slot->mu);
        if (slot->session) {
            slot->messages_closed += slot->session->messages_sent();
            slot->session->close();
            slot->session.reset();
        }
    }
}

uint64_t ServerPool::spawn_count(const std::string& name) const {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mu_);
        auto it = slots_.find(name);
        if (it == slots_.end()) return 0;
        slot = it->second;
    }
    std::lock_guard lock(slot->mu);
    return slot->spawns;
}

uint64_t ServerPool::total_spawn_count() const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lock(mu_);
        for (const auto& [_, slot] : slots_) slots.push_back(slot);
    }
    uint64_t total = 0;
    for (const auto& slot : slots) {
        std::lock_guard lock(slot->mu);
        total += slot->spawns;
    }
    return total;
}

uint64_t ServerPool::message_count(const std::string& name) const {
    std::shared_ptr<Slot> slot;
    {
        std::lock_guard lock(mu_);
        auto it = slots_.find(name);
        if (it == slots_.end()) return 0;
        slot = it->second;
    }
    std::lock_guard lock(slot->mu);
    uint64_t n = slot->messages_closed;
    if (slot->session) n += slot->session->messages_sent();
    return n;
}

uint64_t ServerPool::total_message_count() const {
    uint64_t total = 0;
    for (const auto& name : registry_.names()) total += message_count(name);
    return total;
}

}  // namespace tempo
