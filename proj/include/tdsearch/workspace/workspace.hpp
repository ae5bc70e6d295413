#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "tdsearch/analysis/group_picture.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/core/types.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/mql/mql.hpp"

namespace tds {

struct ChangeDetection {
    bool changed = false;
    std::string fingerprint;
    std::optional<InterfaceSpec> iface;  // first type declared in the source
};

/// The fingerprint covers every type declared in the source, in order.
/// Unparsable sources report no change and keep the old fingerprint.
ChangeDetection detect_significant_change(const std::string& old_fingerprint, std::string_view new_source);

/// Referenced type names (declarations, constructions, parameter and return
/// types) minus `workspace_types`, built-ins, template parameters and types
/// declared in the source, in first-occurrence order. Workspace types match
/// by qualified or simple name. Throws UnparsableSource.
std::vector<TypeName> find_missing_types(std::string_view source, const std::set<TypeName>& workspace_types);

/// Member functions invoked on values of type `type` in `source`: name and
/// argument count, first occurrence order.
std::vector<std::pair<std::string, std::size_t>> members_used_on(std::string_view source, const TypeName& type);

enum class Heuristic : std::uint8_t { Workspace, QualifiedName, SimpleNameMembers };

std::string_view to_string(Heuristic h);

struct ResolutionStep {
    TypeName missing_type;
    std::optional<ComponentId> resolved_by;  // empty for WORKSPACE and UNRESOLVED
    std::optional<Heuristic> heuristic;      // empty when UNRESOLVED
    int depth = 1;

    bool resolved() const { return heuristic.has_value(); }
    bool operator==(const ResolutionStep&) const = default;
};

struct ResolutionPlan {
    ComponentId root;
    std::vector<ResolutionStep> steps;
    int depth_reached = 0;

    bool operator==(const ResolutionPlan&) const = default;
};

inline constexpr int kDefaultDepthCap = 3;

/// Breadth-first over missing types. Each type is tried against the
/// workspace, then an exact qualified-name lookup (unique hit), then simple
/// name plus the members the referencing source invokes (least id on ties).
/// Resolved components contribute their own missing types while depth < cap.
/// Throws InvalidArgument when depth_cap < 1.
ResolutionPlan resolve_dependencies(const ComponentRecord& root, const CorpusIndex& ix,
                                    const std::set<TypeName>& workspace_types, int depth_cap = kDefaultDepthCap);

enum class Trigger : std::uint8_t { InterfaceChange, MissingType };

std::string_view to_string(Trigger t);

struct Recommendation {
    Trigger trigger = Trigger::InterfaceChange;
    std::string cud_path;  // relative to the project root
    MqlQuery query;
    std::vector<SearchHit> hits;
    std::optional<GroupPicture> group_picture;
    std::string created_at;  // ISO-8601 UTC
};

struct AgentConfig {
    std::filesystem::path project_root;
    double debounce_seconds = 2.0;
    int poll_interval_ms = 500;
    std::optional<std::filesystem::path> sink_path;  // JSONL, must lie outside the project
    std::function<void(const Recommendation&)> sink;
    std::function<void(const Error&)> on_error;
    int max_hits = 20;
    double group_threshold = 0.5;

    /// Throws InvalidArgument.
    void validate() const;
};

/// Polls the project for source changes. A file whose interface fingerprint
/// (or missing-type set) changed is recommended on once the file has been
/// quiet for the debounce period. Searching runs on a worker thread so the
/// poll loop never waits on it. Nothing is written under the project root.
class ProjectWatcher {
public:
    ProjectWatcher(AgentConfig cfg, const CorpusIndex& ix);
    ~ProjectWatcher();
    ProjectWatcher(const ProjectWatcher&) = delete;
    ProjectWatcher& operator=(const ProjectWatcher&) = delete;

    /// Records the baseline and starts the threads. Throws IoError when the
    /// root is not a readable directory.
    void start();
    /// Stops both threads; queued recommendations are still delivered.
    void stop();
    /// False once stopped or after the root became unreadable.
    bool running() const { return running_; }

    std::size_t emitted() const { return emitted_; }

private:
    struct FileState {
        std::filesystem::file_time_type mtime;
        std::uintmax_t size = 0;
        std::string baseline;  // fingerprint at the last emission
        std::string current;
        std::set<std::string> missing_baseline;
        std::set<std::string> missing_current;
        std::optional<InterfaceSpec> iface;
        std::optional<std::chrono::steady_clock::time_point> due;
        std::string source;
    };
    struct Job {
        Trigger trigger;
        std::string path;
        MqlQuery query;
    };

    void scan(bool baseline);
    void poll_loop();
    void work_loop();
    void fail(const Error& e);
    void deliver(const Recommendation& r);
    std::set<TypeName> workspace_types() const;

    AgentConfig cfg_;
    const CorpusIndex& ix_;
    std::map<std::string, FileState> files_;
    std::atomic<bool> running_{false};
    std::atomic<bool> stopping_{false};
    std::atomic<std::size_t> emitted_{0};
    std::mutex mutex_;
    std::condition_variable cv_;
    std::deque<Job> queue_;
    std::thread poller_;
    std::thread worker_;
};

}  // namespace tds
