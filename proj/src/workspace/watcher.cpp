#include <algorithm>
#include <fstream>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/core/clock.hpp"
#include "tdsearch/core/hash.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/io/json.hpp"
#include "tdsearch/workspace/workspace.hpp"

namespace tds {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

ChangeDetection detect_significant_change(const std::string& old_fingerprint, std::string_view new_source)
{
    ChangeDetection d;
    d.fingerprint = old_fingerprint;
    std::vector<ComponentRecord> recs;
    try {
        recs = extract_components(new_source, "");
    } catch (const UnparsableSource&) {
        return d;
    }
    std::string joined;
    for (const auto& r : recs) {
        joined += interface_fingerprint(r.iface) + "\n";
    }
    d.fingerprint = sha256_hex(joined);
    d.changed = d.fingerprint != old_fingerprint;
    d.iface = recs.front().iface;
    return d;
}

std::string_view to_string(Trigger t) { return t == Trigger::InterfaceChange ? "INTERFACE_CHANGE" : "MISSING_TYPE"; }

void AgentConfig::validate() const
{
    if (debounce_seconds <= 0 || poll_interval_ms <= 0) {
        throw InvalidArgument("debounceSeconds and pollIntervalMs must be positive");
    }
    if (debounce_seconds * 1000.0 < poll_interval_ms) {
        throw InvalidArgument("debounceSeconds must not be shorter than pollIntervalMs");
    }
    if (max_hits < 1 || group_threshold <= 0 || group_threshold > 1) {
        throw InvalidArgument("maxHits must be positive and groupThreshold in (0, 1]");
    }
    if (sink_path) {
        std::error_code ec;
        const auto root = fs::weakly_canonical(project_root, ec);
        const auto sink = fs::weakly_canonical(*sink_path, ec);
        const auto rel = sink.lexically_relative(root);
        if (!rel.empty() && *rel.begin() != "..") {
            throw InvalidArgument("recommendation sink must lie outside the watched project");
        }
    }
}

ProjectWatcher::ProjectWatcher(AgentConfig cfg, const CorpusIndex& ix) : cfg_(std::move(cfg)), ix_(ix)
{
    cfg_.validate();
}

ProjectWatcher::~ProjectWatcher() { stop(); }

void ProjectWatcher::start()
{
    if (running_) {
        return;
    }
    std::error_code ec;
    if (!fs::is_directory(cfg_.project_root, ec)) {
        throw IoError("project root is not a readable directory: " + cfg_.project_root.string());
    }
    files_.clear();
    scan(true);
    stopping_ = false;
    running_ = true;
    poller_ = std::thread([this] { poll_loop(); });
    worker_ = std::thread([this] { work_loop(); });
}

void ProjectWatcher::stop()
{
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    cv_.notify_all();
    if (poller_.joinable()) {
        poller_.join();
    }
    if (worker_.joinable()) {
        worker_.join();
    }
    running_ = false;
}

std::set<TypeName> ProjectWatcher::workspace_types() const
{
    std::set<TypeName> out;
    for (const auto& [path, st] : files_) {
        if (st.iface) {
            out.insert(st.iface->class_name);
        }
        const auto tu = parse_translation_unit(st.source);
        for (const auto& decl : tu.types) {
            out.insert(decl.name);
        }
    }
    return out;
}

void ProjectWatcher::scan(bool baseline)
{
    const auto now = Clock::now();
    const auto debounce = std::chrono::milliseconds(static_cast<long long>(cfg_.debounce_seconds * 1000.0));
    std::set<std::string> present;
    std::vector<std::string> touched;

    std::error_code ec;
    fs::recursive_directory_iterator it(cfg_.project_root, fs::directory_options::skip_permission_denied, ec);
    if (ec) {
        throw IoError("cannot read project root: " + ec.message());
    }
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            throw IoError("cannot read project root: " + ec.message());
        }
        std::error_code fec;
        if (!it->is_regular_file(fec) || !is_subject_source_path(it->path().string())) {
            continue;
        }
        const auto rel = it->path().lexically_relative(cfg_.project_root).generic_string();
        present.insert(rel);
        const auto mtime = it->last_write_time(fec);
        const auto size = it->file_size(fec);
        if (fec) {
            continue;  // vanished between listing and stat
        }
        auto found = files_.find(rel);
        if (found != files_.end() && found->second.mtime == mtime && found->second.size == size) {
            continue;
        }
        std::string source;
        try {
            source = read_file(it->path().string());
        } catch (const IoError&) {
            continue;
        }
        auto& st = files_[rel];
        const bool is_new = found == files_.end();
        st.mtime = mtime;
        st.size = size;
        if (!is_new && st.source == source) {
            continue;
        }
        st.source = std::move(source);
        const auto d = detect_significant_change(st.current, st.source);
        st.current = d.fingerprint;
        if (d.iface) {
            st.iface = d.iface;
        }
        if (baseline) {
            st.baseline = st.current;
        } else {
            // Any edit restarts the quiet period of a pending file.
            st.due = now + debounce;
        }
        touched.push_back(rel);
    }
    for (auto f = files_.begin(); f != files_.end();) {
        f = present.count(f->first) ? std::next(f) : files_.erase(f);
    }

    // Missing types depend on the whole workspace, so recompute for edited files.
    if (!touched.empty()) {
        const auto ws = workspace_types();
        for (const auto& rel : touched) {
            auto& st = files_[rel];
            try {
                std::set<std::string> missing;
                for (const auto& t : find_missing_types(st.source, ws)) {
                    missing.insert(t.qualified());
                }
                st.missing_current = std::move(missing);
            } catch (const UnparsableSource&) {
                continue;  // wait for a parsable state
            }
            if (baseline) {
                st.missing_baseline = st.missing_current;
            }
        }
    }
}

void ProjectWatcher::poll_loop()
{
    const auto interval = std::chrono::milliseconds(cfg_.poll_interval_ms);
    while (true) {
        {
            std::unique_lock lock(mutex_);
            if (cv_.wait_for(lock, interval, [this] { return stopping_.load(); })) {
                break;
            }
        }
        try {
            std::error_code ec;
            if (!fs::is_directory(cfg_.project_root, ec)) {
                throw IoError("project root became unreadable: " + cfg_.project_root.string());
            }
            scan(false);
        } catch (const Error& e) {
            fail(e);
            break;
        }
        const auto now = Clock::now();
        for (auto& [rel, st] : files_) {
            if (!st.due || *st.due > now) {
                continue;
            }
            st.due.reset();
            Job job;
            job.path = rel;
            std::vector<std::string> added;
            std::set_difference(st.missing_current.begin(), st.missing_current.end(), st.missing_baseline.begin(),
                                st.missing_baseline.end(), std::back_inserter(added));
            if (st.current != st.baseline && st.iface) {
                job.trigger = Trigger::InterfaceChange;
                job.query = query_from_interface(*st.iface);
            } else if (!added.empty()) {
                const auto type = TypeName::parse_dotted(added.front());
                job.trigger = Trigger::MissingType;
                job.query.class_name = type.simple;
                for (const auto& [name, arity] : members_used_on(st.source, type)) {
                    MethodPattern p;
                    p.name = name;
                    p.params.assign(arity, "*");
                    job.query.methods.push_back(std::move(p));
                }
            } else {
                continue;
            }
            st.baseline = st.current;
            st.missing_baseline = st.missing_current;
            {
                std::lock_guard lock(mutex_);
                queue_.push_back(std::move(job));
            }
            cv_.notify_all();
        }
    }
    std::lock_guard lock(mutex_);
    stopping_ = true;
    cv_.notify_all();
}

void ProjectWatcher::work_loop()
{
    while (true) {
        Job job;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) {
                return;
            }
            job = std::move(queue_.front());
            queue_.pop_front();
        }
        Recommendation r;
        r.trigger = job.trigger;
        r.cud_path = job.path;
        r.query = job.query;
        SearchConstraints c;
        c.max_results = cfg_.max_hits;
        c.exclude_kinds = {ComponentKind::Test};
        r.hits = search_mql(ix_, job.query, c);
        if (!r.hits.empty()) {
            std::vector<InterfaceSpec> ifaces;
            for (const auto& h : r.hits) {
                ifaces.push_back(ix_.find(h.id)->iface);
            }
            r.group_picture = group_picture(ifaces, cfg_.group_threshold, TypeName{job.query.class_name});
        }
        r.created_at = now_iso_utc();
        deliver(r);
    }
}

void ProjectWatcher::deliver(const Recommendation& r)
{
    if (cfg_.sink_path) {
        std::ofstream out(*cfg_.sink_path, std::ios::app);
        out << Json(r).dump() << "\n";
    }
    if (cfg_.sink) {
        cfg_.sink(r);
    }
    ++emitted_;
}

void ProjectWatcher::fail(const Error& e)
{
    if (cfg_.sink_path) {
        std::ofstream out(*cfg_.sink_path, std::ios::app);
        out << error_json(e).dump() << "\n";
    }
    if (cfg_.on_error) {
        cfg_.on_error(e);
    }
}

}  // namespace tds
