#include "tdsearch/service/service.hpp"

#include <httplib.h>

#include <fstream>
#include <random>
#include <regex>

#include "tdsearch/analysis/group_picture.hpp"
#include "tdsearch/analysis/metrics.hpp"
#include "tdsearch/core/clock.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/extractor/scan.hpp"

namespace tds {

namespace fs = std::filesystem;

namespace {

constexpr std::array kStates = {JobState::Queued,  JobState::Extracting, JobState::Searching,
                                JobState::Testing, JobState::Done,       JobState::Failed};

HttpResponse error_response(int status, const Error& e) { return {status, error_json(e)}; }

HttpResponse error_response(int status, const std::string& code, const std::string& message)
{
    return {status, Json{{"error", {{"code", code}, {"message", message}}}}};
}

int status_for(const Error& e)
{
    const auto& c = e.code();
    if (c == "SyntaxError" || c == "UnparsableSource") {
        return 400;
    }
    if (c == "NotFound") {
        return 404;
    }
    return 422;
}

std::string new_job_id()
{
    static std::mt19937_64 rng{std::random_device{}()};
    static std::mutex m;
    std::lock_guard lock(m);
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    char suffix[17];
    std::snprintf(suffix, sizeof suffix, "%016llx", static_cast<unsigned long long>(rng()));
    return std::string(stamp) + "-" + suffix;
}

SearchConstraints constraints_from(const Json& body)
{
    SearchConstraints c;
    if (!body.contains("constraints")) {
        return c;
    }
    const auto& j = body.at("constraints");
    if (!j.is_object()) {
        throw InvalidArgument("constraints must be an object");
    }
    c.dedupe = j.value("dedupe", false);
    c.max_results = j.value("maxResults", c.max_results);
    if (j.contains("excludeKinds")) {
        for (const auto& k : j.at("excludeKinds")) {
            c.exclude_kinds.insert(component_kind_from_string(k.get<std::string>()));
        }
    }
    if (j.contains("pathPrefix")) {
        c.path_prefix = j.at("pathPrefix").get<std::string>();
    }
    return c;
}

}  // namespace

std::string_view to_string(JobState s)
{
    switch (s) {
    case JobState::Queued:
        return "QUEUED";
    case JobState::Extracting:
        return "EXTRACTING";
    case JobState::Searching:
        return "SEARCHING";
    case JobState::Testing:
        return "TESTING";
    case JobState::Done:
        return "DONE";
    case JobState::Failed:
        return "FAILED";
    }
    return "FAILED";
}

JobState job_state_from_string(std::string_view s)
{
    for (auto st : kStates) {
        if (to_string(st) == s) {
            return st;
        }
    }
    throw InvalidArgument("unknown job state '" + std::string(s) + "'");
}

bool is_terminal(JobState s) { return s == JobState::Done || s == JobState::Failed; }

void to_json(Json& j, const JobRecord& v)
{
    j = Json{{"jobId", v.job_id},
             {"state", std::string(to_string(v.state))},
             {"progress", {{"tested", v.tested}, {"total", v.total}}},
             {"result", v.result ? Json(*v.result) : Json(nullptr)},
             {"error", v.error ? Json(*v.error) : Json(nullptr)},
             {"submittedAt", v.submitted_at},
             {"finishedAt", v.finished_at ? Json(*v.finished_at) : Json(nullptr)}};
}

void from_json(const Json& j, JobRecord& v)
{
    j.at("jobId").get_to(v.job_id);
    v.state = job_state_from_string(j.at("state").get<std::string>());
    j.at("progress").at("tested").get_to(v.tested);
    j.at("progress").at("total").get_to(v.total);
    v.result.reset();
    if (!j.at("result").is_null()) {
        v.result = j.at("result").get<HarvestResult>();
    }
    v.error.reset();
    if (!j.at("error").is_null()) {
        v.error = j.at("error").get<std::string>();
    }
    j.at("submittedAt").get_to(v.submitted_at);
    v.finished_at.reset();
    if (!j.at("finishedAt").is_null()) {
        v.finished_at = j.at("finishedAt").get<std::string>();
    }
}

JobStore::JobStore(fs::path log_path) : log_path_(std::move(log_path))
{
    if (log_path_.empty()) {
        return;
    }
    std::ifstream in(log_path_);
    std::string line;
    while (std::getline(in, line)) {
        try {
            auto r = Json::parse(line).get<JobRecord>();
            jobs_[r.job_id] = std::move(r);
        } catch (const std::exception&) {
            continue;  // torn final line after a crash
        }
    }
    for (auto& [id, r] : jobs_) {
        if (!is_terminal(r.state)) {
            r.state = JobState::Failed;
            r.result.reset();
            r.error = kRestartMessage;
            r.finished_at = now_iso_utc();
            append(r);
        }
    }
}

void JobStore::append(const JobRecord& r)
{
    if (log_path_.empty()) {
        return;
    }
    std::ofstream out(log_path_, std::ios::app);
    out << Json(r).dump() << "\n";
    out.flush();
    if (!out) {
        throw IoError("cannot append to job log " + log_path_.string());
    }
}

JobRecord JobStore::create()
{
    JobRecord r;
    r.submitted_at = now_iso_utc();
    std::lock_guard lock(mutex_);
    do {
        r.job_id = new_job_id();
    } while (jobs_.count(r.job_id));
    jobs_[r.job_id] = r;
    append(r);
    return r;
}

void JobStore::update(const std::string& id, const std::function<void(JobRecord&)>& fn, bool persist)
{
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        throw InvalidArgument("unknown job " + id);
    }
    JobRecord next = it->second;
    fn(next);
    const auto rank = [](JobState s) { return static_cast<int>(s); };
    if (is_terminal(it->second.state) ? next.state != it->second.state
                                      : (rank(next.state) < rank(it->second.state) ||
                                         (next.state == JobState::Done && it->second.state != JobState::Testing))) {
        throw InvalidArgument("illegal job transition " + std::string(to_string(it->second.state)) + " -> " +
                              std::string(to_string(next.state)));
    }
    it->second = std::move(next);
    if (persist) {
        append(it->second);
    }
}

std::optional<JobRecord> JobStore::get(const std::string& id) const
{
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> JobStore::ids() const
{
    std::lock_guard lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [id, r] : jobs_) {
        out.push_back(id);
    }
    return out;
}

LimitedBackend::LimitedBackend(std::shared_ptr<ExecutionBackend> inner, int slots)
    : inner_(std::move(inner)), free_(std::max(1, slots))
{
}

ExecutionResult LimitedBackend::execute(const ExecutionRequest& req)
{
    {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return free_ > 0; });
        --free_;
    }
    struct Release {
        LimitedBackend* self;
        ~Release()
        {
            {
                std::lock_guard lock(self->mutex_);
                ++self->free_;
            }
            self->cv_.notify_one();
        }
    } release{this};
    return inner_->execute(req);
}

struct Service::Http {
    httplib::Server server;
};

Service::Service(CorpusIndex ix, std::shared_ptr<ExecutionBackend> backend, ServiceOptions opts)
    : ix_(std::move(ix)),
      backend_(std::make_shared<LimitedBackend>(std::move(backend), opts.global_parallelism)),
      opts_(std::move(opts)),
      jobs_(opts_.index_dir.empty() ? fs::path{} : opts_.index_dir / "jobs.jsonl"),
      http_(std::make_unique<Http>())
{
    opts_.harvest.validate();
    for (int i = 0; i < std::max(1, opts_.job_workers); ++i) {
        workers_.emplace_back([this] { run_jobs(); });
    }
}

Service::~Service()
{
    stop();
    {
        std::lock_guard lock(queue_mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) {
        w.join();
    }
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body)
{
    static const std::regex kJob(R"(^/api/v1/harvest/([^/]+)$)");
    static const std::regex kComponent(R"(^/api/v1/components/([^/]+)$)");
    try {
        std::smatch m;
        if (method == "GET") {
            if (path == "/api/v1/health") {
                return {200, Json{{"status", "ok"}, {"indexVersion", ix_.manifest.format_version}}};
            }
            if (std::regex_match(path, m, kJob)) {
                return job(m[1].str());
            }
            if (std::regex_match(path, m, kComponent)) {
                return component(m[1].str());
            }
        } else if (method == "POST") {
            const bool known = path == "/api/v1/search" || path == "/api/v1/harvest" ||
                               path == "/api/v1/group-picture" || path == "/api/v1/metrics";
            if (known) {
                Json j;
                try {
                    j = Json::parse(body);
                } catch (const Json::exception& e) {
                    return error_response(400, "BadRequest", std::string("malformed JSON body: ") + e.what());
                }
                if (!j.is_object()) {
                    return error_response(400, "BadRequest", "request body must be a JSON object");
                }
                if (path == "/api/v1/search") {
                    return search(j);
                }
                if (path == "/api/v1/harvest") {
                    return submit_harvest(j);
                }
                if (path == "/api/v1/group-picture") {
                    return group(j);
                }
                return metrics(j);
            }
        }
        return error_response(404, "NotFound", "no route for " + method + " " + path);
    } catch (const Error& e) {
        return error_response(status_for(e), e);
    } catch (const Json::exception& e) {
        return error_response(422, "InvalidArgument", std::string("bad field: ") + e.what());
    } catch (const std::exception& e) {
        return error_response(500, "Internal", e.what());
    }
}

HttpResponse Service::search(const Json& body)
{
    const bool has_mql = body.contains("mql");
    const bool has_terms = body.contains("terms");
    if (has_mql == has_terms) {
        return error_response(422, "InvalidArgument", "give exactly one of 'mql' and 'terms'");
    }
    const auto c = constraints_from(body);
    std::vector<SearchHit> hits;
    if (has_mql) {
        hits = search_mql(ix_, parse_mql(body.at("mql").get<std::string>()), c);
    } else {
        std::vector<std::string> terms;
        if (body.at("terms").is_string()) {
            terms.push_back(body.at("terms").get<std::string>());
        } else {
            terms = body.at("terms").get<std::vector<std::string>>();
        }
        hits = search_keyword(ix_, terms, c);
    }
    Json out = Json::array();
    for (const auto& h : hits) {
        Json jh = h;
        const auto* rec = ix_.find(h.id);
        jh["className"] = rec->iface.class_name;
        jh["kind"] = std::string(to_string(rec->iface.kind));
        jh["path"] = rec->path;
        jh["metrics"] = {{"loc", rec->metrics.loc},
                         {"cyclomatic", rec->metrics.cyclomatic},
                         {"halsteadVolume", rec->metrics.halstead.volume}};
        out.push_back(std::move(jh));
    }
    return {200, Json{{"hits", out}}};
}

HttpResponse Service::submit_harvest(const Json& body)
{
    const auto source = body.value("testSource", std::string());
    if (source.empty()) {
        return error_response(422, "InvalidArgument", "testSource must be a non-empty string");
    }
    HarvestConfig cfg = opts_.harvest;
    if (body.contains("config")) {
        merge_config(body.at("config"), cfg);
    }
    const auto rec = jobs_.create();
    {
        std::lock_guard lock(queue_mutex_);
        queue_.push_back({rec.job_id, {source, cfg}});
    }
    queue_cv_.notify_one();
    return {202, Json{{"jobId", rec.job_id}}};
}

HttpResponse Service::job(const std::string& id)
{
    auto r = jobs_.get(id);
    if (!r) {
        return error_response(404, "NotFound", "unknown job " + id);
    }
    return {200, Json(*r)};
}

HttpResponse Service::component(const std::string& id)
{
    const auto* rec = ix_.find(ComponentId{id});
    if (!rec) {
        return error_response(404, "NotFound", "unknown component " + id);
    }
    return {200, Json{{"record", *rec}, {"metrics", rec->metrics}}};
}

HttpResponse Service::group(const Json& body)
{
    const double threshold = body.value("threshold", 0.5);
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        return error_response(422, "InvalidArgument", "threshold must be in (0, 1]");
    }
    if (body.contains("mql") == body.contains("ids")) {
        return error_response(422, "InvalidArgument", "give exactly one of 'mql' and 'ids'");
    }
    std::vector<InterfaceSpec> ifaces;
    TypeName name;
    if (body.contains("mql")) {
        const auto q = parse_mql(body.at("mql").get<std::string>());
        for (const auto& h : search_mql(ix_, q, constraints_from(body))) {
            ifaces.push_back(ix_.find(h.id)->iface);
        }
        name = TypeName{q.class_name};
    } else {
        for (const auto& id : body.at("ids").get<std::vector<std::string>>()) {
            const auto* rec = ix_.find(ComponentId{id});
            if (!rec) {
                return error_response(404, "NotFound", "unknown component " + id);
            }
            ifaces.push_back(rec->iface);
        }
        if (!ifaces.empty()) {
            name = TypeName{ifaces.front().class_name.simple};
        }
    }
    if (ifaces.empty()) {
        return error_response(422, "EmptyCandidateSet", "no candidates to build a group picture from");
    }
    if (body.contains("name")) {
        name = TypeName{body.at("name").get<std::string>()};
    }
    const auto gp = group_picture(ifaces, threshold, name);
    return {200, Json{{"groupPicture", gp}, {"skeleton", render_skeleton(gp)}}};
}

HttpResponse Service::metrics(const Json& body)
{
    return {200, Json(compute_metrics(body.at("source").get<std::string>()))};
}

void Service::run_jobs()
{
    while (true) {
        std::pair<std::string, std::pair<std::string, HarvestConfig>> item;
        {
            std::unique_lock lock(queue_mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) {
                return;
            }
            item = std::move(queue_.front());
            queue_.pop_front();
        }
        const auto& id = item.first;
        HarvestObserver obs;
        obs.on_stage = [&](HarvestStage s) {
            const auto state = s == HarvestStage::Extracting  ? JobState::Extracting
                               : s == HarvestStage::Searching ? JobState::Searching
                                                              : JobState::Testing;
            jobs_.update(id, [&](JobRecord& r) { r.state = state; });
        };
        obs.on_progress = [&](int tested, int total) {
            jobs_.update(
                id,
                [&](JobRecord& r) {
                    r.tested = std::max(r.tested, tested);
                    r.total = total;
                },
                false);
        };
        try {
            auto result = run_harvest(item.second.first, ix_, item.second.second, *backend_, obs);
            jobs_.update(id, [&](JobRecord& r) {
                r.state = JobState::Done;
                r.tested = static_cast<int>(result.outcomes.size());
                r.total = r.tested;
                r.result = std::move(result);
                r.finished_at = now_iso_utc();
            });
        } catch (const std::exception& e) {
            const auto* err = dynamic_cast<const Error*>(&e);
            const std::string message = err ? err->code() + ": " + e.what() : std::string(e.what());
            jobs_.update(id, [&](JobRecord& r) {
                r.state = JobState::Failed;
                r.error = message;
                r.finished_at = now_iso_utc();
            });
        }
    }
}

namespace {

void install_routes(httplib::Server& server, Service& svc)
{
    auto relay = [&svc](const httplib::Request& req, httplib::Response& res) {
        const auto r = svc.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    server.Get(".*", relay);
    server.Post(".*", relay);
}

}  // namespace

bool Service::listen(const std::string& host, int port)
{
    install_routes(http_->server, *this);
    return http_->server.listen(host, port);
}

int Service::listen_background(const std::string& host)
{
    install_routes(http_->server, *this);
    const int port = http_->server.bind_to_any_port(host);
    if (port < 0) {
        throw IoError("cannot bind " + host);
    }
    http_thread_ = std::thread([this] { http_->server.listen_after_bind(); });
    http_->server.wait_until_ready();
    return port;
}

void Service::stop()
{
    if (http_) {
        http_->server.stop();
    }
    if (http_thread_.joinable()) {
        http_thread_.join();
    }
}

}  // namespace tds
