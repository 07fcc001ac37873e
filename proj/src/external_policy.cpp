#include "steam_mapf/external_policy.hpp"

#include "steam_mapf/error.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

namespace steam_mapf {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point deadline) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    return left > 0 ? static_cast<int>(left) : 0;
}

[[noreturn]] void protocol_violation(const std::string& what) {
    throw PolicyError(ErrorCode::ProtocolViolation, "external policy: " + what);
}

double decode_logit(const nlohmann::json& x) {
    if (x.is_number()) {
        return x.get<double>();
    }
    if (x.is_string()) {
        const auto& s = x.get_ref<const std::string&>();
        if (s == "inf") {
            return kInfinity;
        }
        if (s == "-inf") {
            return -kInfinity;
        }
    }
    protocol_violation("logit entries must be numbers, \"inf\" or \"-inf\"");
}

} // namespace

std::string encode_policy_request(int step, std::span<const Observation> batch) {
    nlohmann::json observations = nlohmann::json::array();
    for (const auto& obs : batch) {
        nlohmann::json cost = nlohmann::json::array();
        for (double c : obs.cost.cells) {
            if (c < kInfinity) {
                cost.push_back(c);
            } else {
                cost.push_back("inf");
            }
        }
        nlohmann::json entry;
        entry["window"] = obs.window();
        entry["obstacle"] = obs.obstacles.cells;
        entry["agents"] = obs.agents.cells;
        entry["cost"] = std::move(cost);
        entry["action_order"] = {"wait", "up", "down", "left", "right"};
        observations.push_back(std::move(entry));
    }
    nlohmann::json request;
    request["step"] = step;
    request["observations"] = std::move(observations);
    return request.dump();
}

std::vector<LogitVector> decode_policy_reply(std::string_view line, std::size_t expected) {
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        protocol_violation(std::string("malformed reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("logits") || !reply["logits"].is_array()) {
        protocol_violation("reply must be an object with a \"logits\" array");
    }
    const auto& rows = reply["logits"];
    if (rows.size() != expected) {
        protocol_violation("expected " + std::to_string(expected) + " logit vectors, got " +
                           std::to_string(rows.size()));
    }
    std::vector<LogitVector> out;
    out.reserve(expected);
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != kActionCount) {
            protocol_violation("each logit vector must have exactly 5 entries");
        }
        LogitVector v{};
        bool any_finite = false;
        for (std::size_t k = 0; k < kActionCount; ++k) {
            v[k] = decode_logit(row[k]);
            any_finite = any_finite || std::isfinite(v[k]);
        }
        if (!any_finite) {
            protocol_violation("logit vector has no finite entry");
        }
        out.push_back(v);
    }
    return out;
}

ExternalPolicy::ExternalPolicy(const std::vector<std::string>& argv, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
    if (argv.empty()) {
        throw Error(ErrorCode::InvalidConfig, "external policy command is empty");
    }
    int fds[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
        throw PolicyError(ErrorCode::ProcessExited, std::string("socketpair failed: ") + std::strerror(errno));
    }
    // Build argv before fork: the child may only make async-signal-safe calls.
    std::vector<char*> cargs;
    cargs.reserve(argv.size() + 1);
    for (const auto& a : argv) {
        cargs.push_back(const_cast<char*>(a.c_str()));
    }
    cargs.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw PolicyError(ErrorCode::ProcessExited, std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::dup2(fds[1], STDIN_FILENO);
        ::dup2(fds[1], STDOUT_FILENO);
        ::execvp(cargs[0], cargs.data());
        ::_exit(127);
    }
    ::close(fds[1]);
    pid_ = pid;
    fd_ = fds[0];
    ::fcntl(fd_, F_SETFL, ::fcntl(fd_, F_GETFL) | O_NONBLOCK);
}

ExternalPolicy::~ExternalPolicy() { shutdown(); }

void ExternalPolicy::shutdown() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ <= 0) {
        return;
    }
    // Closing the socket gives a well-behaved policy EOF; give it a moment.
    for (int i = 0; i < 20; ++i) {
        if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
            pid_ = -1;
            return;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
}

void ExternalPolicy::send_line(const std::string& line, Clock::time_point deadline) {
    std::size_t sent = 0;
    while (sent < line.size()) {
        const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            continue;
        }
        if (n < 0 && errno == EINTR) {
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            pollfd p{fd_, POLLOUT, 0};
            const int ready = ::poll(&p, 1, remaining_ms(deadline));
            if (ready == 0) {
                throw PolicyError(ErrorCode::PolicyTimeout, "external policy did not accept the request in time");
            }
            if (ready < 0 && errno != EINTR) {
                throw PolicyError(ErrorCode::ProcessExited, std::string("poll failed: ") + std::strerror(errno));
            }
            continue;
        }
        throw PolicyError(ErrorCode::ProcessExited, "external policy closed its input");
    }
}

std::string ExternalPolicy::read_line(Clock::time_point deadline) {
    for (;;) {
        if (const auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        char chunk[4096];
        const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
        if (n > 0) {
            buffer_.append(chunk, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) {
            throw PolicyError(ErrorCode::ProcessExited, "external policy exited");
        }
        if (errno == EINTR) {
            continue;
        }
        if (errno != EAGAIN && errno != EWOULDBLOCK) {
            throw PolicyError(ErrorCode::ProcessExited, std::string("recv failed: ") + std::strerror(errno));
        }
        pollfd p{fd_, POLLIN, 0};
        const int ready = ::poll(&p, 1, remaining_ms(deadline));
        if (ready == 0) {
            throw PolicyError(ErrorCode::PolicyTimeout,
                              "external policy did not reply within " + std::to_string(timeout_.count()) + " ms");
        }
        if (ready < 0 && errno != EINTR) {
            throw PolicyError(ErrorCode::ProcessExited, std::string("poll failed: ") + std::strerror(errno));
        }
    }
}

std::vector<LogitVector> ExternalPolicy::query(int step, std::span<const Observation> batch) {
    if (fd_ < 0) {
        throw PolicyError(ErrorCode::ProcessExited, "external policy is not running");
    }
    const auto deadline = Clock::now() + timeout_;
    send_line(encode_policy_request(step, batch) + "\n", deadline);
    return decode_policy_reply(read_line(deadline), batch.size());
}

} // namespace steam_mapf
