#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "tdsearch/core/types.hpp"

namespace tds {

/// Captured output is cut at this many bytes per stream.
inline constexpr std::size_t kOutputCap = 64 * 1024;

enum class ExitStatus : std::uint8_t { Ok, Nonzero, Timeout, ToolMissing };
enum class Phase : std::uint8_t { Build, Run };

std::string_view to_string(ExitStatus s);
ExitStatus exit_status_from_string(std::string_view s);
std::string_view to_string(Phase p);
Phase phase_from_string(std::string_view s);

/// Build and run argv vectors, executed with the work directory as cwd.
/// An empty build command skips the build phase.
struct CommandSpec {
    std::vector<std::string> build;
    std::vector<std::string> run;

    /// `c++ -std=c++17 -O0 -w -o harness harness.cpp` then `./harness`.
    static CommandSpec default_cpp();
};

struct ExecutionRequest {
    std::filesystem::path work_dir;
    std::map<std::string, std::string> sources;  // file name -> text
    CommandSpec command;
    double timeout_seconds = 10.0;
    ComponentId candidate;  // lets scripted backends key their transcript
};

struct ExecutionResult {
    ExitStatus exit_status = ExitStatus::Ok;
    Phase phase = Phase::Run;  // phase that produced the final status
    std::string stdout_text;
    std::string stderr_text;
    std::int64_t duration_ms = 0;
    int exit_code = 0;
};

class ExecutionBackend {
public:
    virtual ~ExecutionBackend() = default;
    virtual ExecutionResult execute(const ExecutionRequest& req) = 0;
    virtual bool available() const = 0;
    virtual std::string name() const = 0;
};

/// Real subprocesses: fresh work directory, environment allowlist
/// (PATH, LANG; HOME and TMPDIR point at the work directory), one wall-clock
/// deadline shared by build and run, process-group kill on timeout.
class ProcessBackend : public ExecutionBackend {
public:
    explicit ProcessBackend(std::string compiler = "c++") : compiler_(std::move(compiler)) {}

    ExecutionResult execute(const ExecutionRequest& req) override;
    bool available() const override;
    std::string name() const override { return "process"; }

private:
    std::string compiler_;
};

/// Replays canned results from a transcript: ComponentId -> {exitStatus,
/// stdout, stderr, durationMs[, phase]}. A "*" entry is the default.
class ScriptedBackend : public ExecutionBackend {
public:
    explicit ScriptedBackend(std::map<std::string, ExecutionResult> transcript)
        : transcript_(std::move(transcript)) {}

    static ScriptedBackend from_json_text(const std::string& text);
    static ScriptedBackend from_file(const std::string& path);

    ExecutionResult execute(const ExecutionRequest& req) override;
    bool available() const override { return true; }
    std::string name() const override { return "scripted"; }

private:
    std::map<std::string, ExecutionResult> transcript_;
};

/// Passes requests through to another backend and keeps every result, so a
/// real run can be frozen into a transcript for ScriptedBackend.
class RecordingBackend : public ExecutionBackend {
public:
    explicit RecordingBackend(ExecutionBackend& inner) : inner_(inner) {}

    ExecutionResult execute(const ExecutionRequest& req) override;
    bool available() const override { return inner_.available(); }
    std::string name() const override { return inner_.name(); }

    /// Transcript JSON in the ScriptedBackend format.
    std::string transcript_json() const;

private:
    ExecutionBackend& inner_;
    mutable std::mutex mutex_;
    std::map<std::string, ExecutionResult> recorded_;
};

/// Checks that the work directory is fresh, then delegates to the backend.
ExecutionResult execute(const ExecutionRequest& req, ExecutionBackend& backend);

/// Looks `program` up on PATH (or checks it directly when it contains '/').
bool program_on_path(const std::string& program);

}  // namespace tds
