#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"

namespace tds {

enum class JobState : std::uint8_t { Queued, Extracting, Searching, Testing, Done, Failed };

std::string_view to_string(JobState s);
JobState job_state_from_string(std::string_view s);
bool is_terminal(JobState s);

struct JobRecord {
    std::string job_id;
    JobState state = JobState::Queued;
    int tested = 0;
    int total = 0;
    std::optional<HarvestResult> result;
    std::optional<std::string> error;
    std::string submitted_at;
    std::optional<std::string> finished_at;

    bool operator==(const JobRecord&) const = default;
};

void to_json(Json& j, const JobRecord& v);
void from_json(const Json& j, JobRecord& v);

/// Job records kept in memory and appended to a JSONL log on every state
/// change. Loading replays the log (last line per job wins); jobs that were
/// still in flight are marked FAILED.
class JobStore {
public:
    /// Empty path: memory only.
    explicit JobStore(std::filesystem::path log_path = {});

    JobRecord create();
    /// Applies `fn` to the stored record under the lock and persists it when
    /// `persist` is set. Throws InvalidArgument on a backwards transition.
    void update(const std::string& id, const std::function<void(JobRecord&)>& fn, bool persist = true);
    std::optional<JobRecord> get(const std::string& id) const;
    std::vector<std::string> ids() const;

    static constexpr const char* kRestartMessage = "restart: the service stopped while this job was in flight";

private:
    void append(const JobRecord& r);

    std::filesystem::path log_path_;
    mutable std::mutex mutex_;
    std::map<std::string, JobRecord> jobs_;
};

/// Caps the number of concurrent executions across all jobs.
class LimitedBackend : public ExecutionBackend {
public:
    LimitedBackend(std::shared_ptr<ExecutionBackend> inner, int slots);

    ExecutionResult execute(const ExecutionRequest& req) override;
    bool available() const override { return inner_->available(); }
    std::string name() const override { return inner_->name(); }

private:
    std::shared_ptr<ExecutionBackend> inner_;
    std::mutex mutex_;
    std::condition_variable cv_;
    int free_;
};

struct HttpResponse {
    int status = 200;
    Json body;
};

struct ServiceOptions {
    std::filesystem::path index_dir;  // job log lives here; empty keeps jobs in memory
    HarvestConfig harvest;            // defaults for submitted jobs
    int global_parallelism = 4;
    int job_workers = 2;
};

/// HTTP/JSON facade over one loaded, immutable index.
class Service {
public:
    Service(CorpusIndex ix, std::shared_ptr<ExecutionBackend> backend, ServiceOptions opts);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Routes one request; never throws.
    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

    /// Serves until stop(); returns false when the address cannot be bound.
    bool listen(const std::string& host, int port);
    /// Binds an ephemeral port and serves on a background thread.
    int listen_background(const std::string& host);
    void stop();

    const JobStore& jobs() const { return jobs_; }

private:
    HttpResponse search(const Json& body);
    HttpResponse submit_harvest(const Json& body);
    HttpResponse job(const std::string& id);
    HttpResponse component(const std::string& id);
    HttpResponse group(const Json& body);
    HttpResponse metrics(const Json& body);
    void run_jobs();

    CorpusIndex ix_;
    std::shared_ptr<LimitedBackend> backend_;
    ServiceOptions opts_;
    JobStore jobs_;

    std::mutex queue_mutex_;
    std::condition_variable queue_cv_;
    std::deque<std::pair<std::string, std::pair<std::string, HarvestConfig>>> queue_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;

    struct Http;
    std::unique_ptr<Http> http_;
    std::thread http_thread_;
};

}  // namespace tds
