#include "tdsearch/harvester/execution.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>

#include "tdsearch/core/error.hpp"
#include "tdsearch/io/json.hpp"

namespace tds {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

std::string_view to_string(ExitStatus s)
{
    switch (s) {
    case ExitStatus::Ok:
        return "OK";
    case ExitStatus::Nonzero:
        return "NONZERO";
    case ExitStatus::Timeout:
        return "TIMEOUT";
    case ExitStatus::ToolMissing:
        return "TOOL_MISSING";
    }
    return "NONZERO";
}

ExitStatus exit_status_from_string(std::string_view s)
{
    if (s == "OK") {
        return ExitStatus::Ok;
    }
    if (s == "NONZERO") {
        return ExitStatus::Nonzero;
    }
    if (s == "TIMEOUT") {
        return ExitStatus::Timeout;
    }
    if (s == "TOOL_MISSING") {
        return ExitStatus::ToolMissing;
    }
    throw InvalidArgument("unknown exitStatus '" + std::string(s) + "'");
}

std::string_view to_string(Phase p) { return p == Phase::Build ? "BUILD" : "RUN"; }

Phase phase_from_string(std::string_view s)
{
    if (s == "BUILD") {
        return Phase::Build;
    }
    if (s == "RUN") {
        return Phase::Run;
    }
    throw InvalidArgument("unknown phase '" + std::string(s) + "'");
}

CommandSpec CommandSpec::default_cpp()
{
    return {{"c++", "-std=c++17", "-O0", "-w", "-o", "harness", "harness.cpp"}, {"./harness"}};
}

bool program_on_path(const std::string& program)
{
    if (program.find('/') != std::string::npos) {
        return ::access(program.c_str(), X_OK) == 0;
    }
    const char* path = std::getenv("PATH");
    if (!path) {
        return false;
    }
    std::string_view rest(path);
    while (true) {
        const auto colon = rest.find(':');
        std::string dir(rest.substr(0, colon));
        if (dir.empty()) {
            dir = ".";
        }
        if (::access((dir + "/" + program).c_str(), X_OK) == 0) {
            return true;
        }
        if (colon == std::string_view::npos) {
            return false;
        }
        rest.remove_prefix(colon + 1);
    }
}

namespace {

struct ProcessOutcome {
    ExitStatus status = ExitStatus::Ok;
    int exit_code = 0;
    std::string out;
    std::string err;
};

void append_capped(std::string& buf, const char* data, std::size_t n)
{
    if (buf.size() < kOutputCap) {
        buf.append(data, std::min(n, kOutputCap - buf.size()));
    }
}

/// Reads whatever is available on `fd`; returns false at EOF.
bool drain(int fd, std::string& buf)
{
    char chunk[8192];
    while (true) {
        const ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n > 0) {
            append_capped(buf, chunk, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) {
            return false;
        }
        if (errno == EINTR) {
            continue;
        }
        return errno == EAGAIN || errno == EWOULDBLOCK;
    }
}

ProcessOutcome run_process(const std::vector<std::string>& argv, const fs::path& cwd,
                           const std::vector<std::string>& env, Clock::time_point deadline)
{
    ProcessOutcome res;
    int out_pipe[2];
    int err_pipe[2];
    int exec_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0 ||
        ::pipe2(exec_pipe, O_CLOEXEC) != 0) {
        throw IoError(std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<char*> cargv;
    for (const auto& a : argv) {
        cargv.push_back(const_cast<char*>(a.c_str()));
    }
    cargv.push_back(nullptr);
    std::vector<char*> cenv;
    for (const auto& e : env) {
        cenv.push_back(const_cast<char*>(e.c_str()));
    }
    cenv.push_back(nullptr);

    const pid_t pid = ::fork();
    if (pid < 0) {
        throw IoError(std::string("fork: ") + std::strerror(errno));
    }
    if (pid == 0) {
        ::setsid();
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) {
            ::dup2(devnull, STDIN_FILENO);
        }
        rlimit no_core{0, 0};
        ::setrlimit(RLIMIT_CORE, &no_core);
        int err = 0;
        if (::chdir(cwd.c_str()) != 0) {
            err = errno;
        } else {
            ::execvpe(cargv[0], cargv.data(), cenv.data());
            err = errno;
        }
        (void)!::write(exec_pipe[1], &err, sizeof err);
        ::_exit(127);
    }

    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);
    ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    bool out_open = true;
    bool err_open = true;
    bool exited = false;
    bool timed_out = false;
    int wstatus = 0;
    while (true) {
        if (!exited) {
            const pid_t w = ::waitpid(pid, &wstatus, WNOHANG);
            if (w == pid) {
                exited = true;
                // Stragglers in the group must not keep the pipes open.
                ::kill(-pid, SIGKILL);
            }
        }
        if (exited && !out_open && !err_open) {
            break;
        }
        const auto now = Clock::now();
        if (!exited && now >= deadline) {
            timed_out = true;
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &wstatus, 0);
            exited = true;
            continue;
        }
        pollfd fds[2];
        nfds_t n = 0;
        if (out_open) {
            fds[n++] = {out_pipe[0], POLLIN, 0};
        }
        if (err_open) {
            fds[n++] = {err_pipe[0], POLLIN, 0};
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        const int wait_ms = exited ? 50 : static_cast<int>(std::clamp<long long>(remaining, 0, 20));
        if (n > 0) {
            ::poll(fds, n, wait_ms);
        } else {
            ::usleep(static_cast<useconds_t>(wait_ms) * 1000);
        }
        if (out_open) {
            out_open = drain(out_pipe[0], res.out);
        }
        if (err_open) {
            err_open = drain(err_pipe[0], res.err);
        }
        if (exited && (out_open || err_open) && Clock::now() >= deadline + std::chrono::seconds(1)) {
            break;  // a grandchild escaped the group; stop waiting for it
        }
    }
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);

    int exec_errno = 0;
    const bool exec_failed = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno) == sizeof exec_errno;
    ::close(exec_pipe[0]);

    if (timed_out) {
        res.status = ExitStatus::Timeout;
        res.exit_code = -1;
    } else if (exec_failed) {
        res.status = exec_errno == ENOENT ? ExitStatus::ToolMissing : ExitStatus::Nonzero;
        res.exit_code = 127;
        res.err += "cannot execute " + argv.front() + ": " + std::strerror(exec_errno) + "\n";
    } else if (WIFEXITED(wstatus)) {
        res.exit_code = WEXITSTATUS(wstatus);
        res.status = res.exit_code == 0 ? ExitStatus::Ok : ExitStatus::Nonzero;
    } else {
        res.exit_code = WIFSIGNALED(wstatus) ? 128 + WTERMSIG(wstatus) : -1;
        res.status = ExitStatus::Nonzero;
        if (WIFSIGNALED(wstatus)) {
            res.err += std::string("terminated by signal ") + strsignal(WTERMSIG(wstatus)) + "\n";
        }
    }
    return res;
}

std::vector<std::string> sandbox_environment(const fs::path& work_dir)
{
    std::vector<std::string> env;
    if (const char* path = std::getenv("PATH")) {
        env.push_back(std::string("PATH=") + path);
    } else {
        env.emplace_back("PATH=/usr/bin:/bin");
    }
    env.emplace_back("LANG=C");
    env.push_back("HOME=" + work_dir.string());
    env.push_back("TMPDIR=" + work_dir.string());
    return env;
}

}  // namespace

bool ProcessBackend::available() const { return program_on_path(compiler_); }

ExecutionResult ProcessBackend::execute(const ExecutionRequest& req)
{
    const auto start = Clock::now();
    const auto deadline = start + std::chrono::milliseconds(static_cast<long long>(req.timeout_seconds * 1000.0));

    std::error_code ec;
    fs::create_directories(req.work_dir, ec);
    if (ec) {
        throw IoError("cannot create work directory " + req.work_dir.string() + ": " + ec.message());
    }
    for (const auto& [name, text] : req.sources) {
        std::ofstream out(req.work_dir / name, std::ios::binary);
        out << text;
        if (!out) {
            throw IoError("cannot write " + (req.work_dir / name).string());
        }
    }

    const auto env = sandbox_environment(fs::absolute(req.work_dir));
    ExecutionResult result;
    auto finish = [&](const ProcessOutcome& p, Phase phase) {
        result.exit_status = p.status;
        result.exit_code = p.exit_code;
        result.phase = phase;
        append_capped(result.stdout_text, p.out.data(), p.out.size());
        append_capped(result.stderr_text, p.err.data(), p.err.size());
        result.duration_ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
    };

    if (!req.command.build.empty()) {
        auto argv = req.command.build;
        if (argv.front() == "c++") {
            argv.front() = compiler_;
        }
        const auto built = run_process(argv, req.work_dir, env, deadline);
        if (built.status != ExitStatus::Ok) {
            finish(built, Phase::Build);
            return result;
        }
        // Compiler chatter is kept on stderr for the log, not mixed with the protocol.
        append_capped(result.stderr_text, built.out.data(), built.out.size());
        append_capped(result.stderr_text, built.err.data(), built.err.size());
    }
    finish(run_process(req.command.run, req.work_dir, env, deadline), Phase::Run);
    return result;
}

ScriptedBackend ScriptedBackend::from_json_text(const std::string& text)
{
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("malformed transcript: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidArgument("transcript must be a JSON object keyed by component id");
    }
    std::map<std::string, ExecutionResult> t;
    for (const auto& [id, entry] : j.items()) {
        ExecutionResult r;
        try {
            r.exit_status = exit_status_from_string(entry.at("exitStatus").get<std::string>());
            r.stdout_text = entry.value("stdout", "");
            r.stderr_text = entry.value("stderr", "");
            r.duration_ms = entry.value("durationMs", std::int64_t{0});
            r.phase = phase_from_string(entry.value("phase", "RUN"));
        } catch (const Json::exception& e) {
            throw InvalidArgument("malformed transcript entry '" + id + "': " + e.what());
        }
        r.exit_code = r.exit_status == ExitStatus::Ok ? 0 : 1;
        t.emplace(id, std::move(r));
    }
    return ScriptedBackend(std::move(t));
}

ExecutionResult RecordingBackend::execute(const ExecutionRequest& req)
{
    auto r = inner_.execute(req);
    std::lock_guard lock(mutex_);
    recorded_[req.candidate.value] = r;
    return r;
}

std::string RecordingBackend::transcript_json() const
{
    std::lock_guard lock(mutex_);
    Json j = Json::object();
    for (const auto& [id, r] : recorded_) {
        j[id] = Json{{"exitStatus", std::string(to_string(r.exit_status))},
                     {"phase", std::string(to_string(r.phase))},
                     {"stdout", r.stdout_text},
                     {"stderr", r.stderr_text},
                     {"durationMs", r.duration_ms}};
    }
    return j.dump(2) + "\n";
}

ScriptedBackend ScriptedBackend::from_file(const std::string& path) { return from_json_text(read_file(path)); }

ExecutionResult ScriptedBackend::execute(const ExecutionRequest& req)
{
    auto it = transcript_.find(req.candidate.value);
    if (it == transcript_.end()) {
        it = transcript_.find("*");
    }
    if (it == transcript_.end()) {
        ExecutionResult r;
        r.exit_status = ExitStatus::Nonzero;
        r.exit_code = 1;
        r.stderr_text = "no transcript entry for " + req.candidate.value + "\n";
        return r;
    }
    return it->second;
}

ExecutionResult execute(const ExecutionRequest& req, ExecutionBackend& backend)
{
    std::error_code ec;
    if (fs::exists(req.work_dir, ec) && !fs::is_empty(req.work_dir, ec)) {
        throw InvalidArgument("work directory is not fresh: " + req.work_dir.string());
    }
    return backend.execute(req);
}

}  // namespace tds
