// tdsearch: command-line front end for indexing, search, test-driven
// harvesting, metrics, group pictures, project watching and the HTTP service.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "tdsearch/analysis/group_picture.hpp"
#include "tdsearch/analysis/metrics.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"
#include "tdsearch/service/service.hpp"
#include "tdsearch/workspace/workspace.hpp"

using namespace tds;
namespace fs = std::filesystem;

namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void print_json(const Json& j) { std::cout << j.dump(2) << "\n"; }

std::string default_index()
{
    const char* env = std::getenv("TDSEARCH_INDEX");
    return env ? env : "";
}

fs::path require_index(const std::string& dir)
{
    if (dir.empty()) {
        throw InvalidArgument("no index given: pass --index or set TDSEARCH_INDEX");
    }
    return dir;
}

std::shared_ptr<ExecutionBackend> make_backend(const std::string& spec)
{
    if (spec == "process") {
        return std::make_shared<ProcessBackend>();
    }
    if (spec.rfind("scripted:", 0) == 0 && spec.size() > 9) {
        return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(spec.substr(9)));
    }
    throw InvalidArgument("--backend must be 'process' or 'scripted:<transcript file>'");
}

const ComponentRecord& record(const CorpusIndex& ix, const ComponentId& id) { return *ix.find(id); }

void report_error(const Error& e, const std::string& mql)
{
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    if (const auto* syn = dynamic_cast<const MqlSyntaxError*>(&e)) {
        std::cerr << "  " << mql << "\n  " << std::string(syn->position(), ' ') << "^\n";
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Component search and test-driven reuse over a C++ corpus"};
    app.require_subcommand(1);
    app.fallthrough();
    bool json = false;
    app.add_flag("--json", json, "Emit library result objects as JSON on stdout");

    // index build
    auto* index_cmd = app.add_subcommand("index", "Corpus index operations");
    index_cmd->require_subcommand(1);
    auto* build_cmd = index_cmd->add_subcommand("build", "Extract a corpus and persist its index");
    std::string corpus_dir;
    std::string index_dir = default_index();
    build_cmd->add_option("--corpus", corpus_dir, "Corpus root directory")->required()->check(CLI::ExistingDirectory);
    build_cmd->add_option("--index", index_dir, "Index output directory (default: $TDSEARCH_INDEX)");

    // search
    auto* search_cmd = app.add_subcommand("search", "Keyword or MQL search");
    std::string mql;
    std::vector<std::string> terms;
    bool dedupe = false;
    std::vector<std::string> exclude_kinds;
    int max_results = 20;
    std::string path_prefix;
    search_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    auto* mql_opt = search_cmd->add_option("--mql", mql, "MQL query");
    auto* terms_opt = search_cmd->add_option("--terms", terms, "Keyword terms");
    mql_opt->excludes(terms_opt);
    search_cmd->add_flag("--dedupe", dedupe, "Collapse identical sources");
    search_cmd->add_option("--exclude-kind", exclude_kinds, "Drop CLASS, INTERFACE or TEST components");
    search_cmd->add_option("--max", max_results, "Maximum number of hits");
    search_cmd->add_option("--path-prefix", path_prefix, "Only components under this corpus path");

    // harvest
    auto* harvest_cmd = app.add_subcommand("harvest", "Test-driven search: find components that pass a test");
    std::string test_file;
    std::string backend_spec = "process";
    std::string record_file;
    HarvestConfig hcfg;
    std::string work_root;
    harvest_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    harvest_cmd->add_option("--test", test_file, "Test source file")->required()->check(CLI::ExistingFile);
    harvest_cmd->add_option("--backend", backend_spec, "process | scripted:<transcript.json>");
    harvest_cmd->add_option("--max-candidates", hcfg.max_candidates, "Candidates taken from the search");
    harvest_cmd->add_option("--timeout", hcfg.per_candidate_timeout, "Seconds per candidate (build and run)");
    harvest_cmd->add_option("--parallelism", hcfg.parallelism, "Candidates tested concurrently");
    harvest_cmd->add_flag("--keep-work-dirs", hcfg.keep_work_dirs, "Keep per-candidate work directories");
    harvest_cmd->add_option("--work-root", work_root, "Parent directory for work directories");
    harvest_cmd->add_option("--record", record_file, "Write the execution transcript to this file");

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Size and complexity metrics of a source file");
    std::string metrics_file;
    metrics_cmd->add_option("file", metrics_file, "Source file")->required()->check(CLI::ExistingFile);

    // group-picture
    auto* group_cmd = app.add_subcommand("group-picture", "Consensus interface over search results or ids");
    std::vector<std::string> ids;
    double threshold = 0.5;
    std::string group_name;
    group_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    auto* gmql = group_cmd->add_option("--mql", mql, "MQL query selecting the candidates");
    auto* gids = group_cmd->add_option("--ids", ids, "Component ids");
    gmql->excludes(gids);
    group_cmd->add_option("--threshold", threshold, "Minimum support in (0, 1]");
    group_cmd->add_option("--max", max_results, "Maximum number of search hits used");
    group_cmd->add_option("--name", group_name, "Class name of the skeleton");

    // watch
    auto* watch_cmd = app.add_subcommand("watch", "Watch a project and recommend components on interface changes");
    AgentConfig acfg;
    std::string project_dir;
    std::string sink_file;
    double duration = 0;
    watch_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    watch_cmd->add_option("--project", project_dir, "Project root")->required();
    watch_cmd->add_option("--debounce", acfg.debounce_seconds, "Quiet period in seconds");
    watch_cmd->add_option("--poll-ms", acfg.poll_interval_ms, "Poll interval in milliseconds");
    watch_cmd->add_option("--sink", sink_file, "Append recommendations to this JSONL file");
    watch_cmd->add_option("--threshold", acfg.group_threshold, "Group picture threshold");
    watch_cmd->add_option("--duration", duration, "Stop after this many seconds (default: until interrupted)");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP/JSON service");
    std::string host = "127.0.0.1";
    int port = 8080;
    ServiceOptions sopts;
    serve_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--backend", backend_spec, "process | scripted:<transcript.json>");
    serve_cmd->add_option("--parallelism", sopts.global_parallelism, "Concurrent executions across all jobs");

    // resolve
    auto* resolve_cmd = app.add_subcommand("resolve", "Resolve the missing types of a source file against the index");
    std::string resolve_file;
    std::string workspace_dir;
    int depth_cap = kDefaultDepthCap;
    resolve_cmd->add_option("--index", index_dir, "Index directory (default: $TDSEARCH_INDEX)");
    resolve_cmd->add_option("file", resolve_file, "Source file")->required()->check(CLI::ExistingFile);
    resolve_cmd->add_option("--workspace", workspace_dir, "Project directory whose types count as present");
    resolve_cmd->add_option("--depth-cap", depth_cap, "Maximum resolution depth");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    try {
        if (build_cmd->parsed()) {
            const auto ix = build_index(corpus_dir);
            persist(ix, require_index(index_dir));
            if (json) {
                print_json(ix.manifest);
            } else {
                std::cout << "indexed " << ix.manifest.component_count << " components into " << index_dir << "\n";
                for (const auto& s : ix.manifest.skipped) {
                    std::cerr << "skipped " << s.path << ": " << s.message << "\n";
                }
            }
            return 0;
        }

        if (search_cmd->parsed()) {
            if (mql.empty() == terms.empty()) {
                throw InvalidArgument("give exactly one of --mql and --terms");
            }
            SearchConstraints c;
            c.dedupe = dedupe;
            c.max_results = max_results;
            for (const auto& k : exclude_kinds) {
                c.exclude_kinds.insert(component_kind_from_string(k));
            }
            if (!path_prefix.empty()) {
                c.path_prefix = path_prefix;
            }
            std::optional<MqlQuery> q;
            if (!mql.empty()) {
                try {
                    q = parse_mql(mql);
                } catch (const MqlSyntaxError& e) {
                    report_error(e, mql);
                    return kDomainError;
                }
            }
            if (max_results < 1) {
                throw InvalidArgument("--max must be at least 1");
            }
            const auto ix = load(require_index(index_dir));
            const auto hits = q ? search_mql(ix, *q, c) : search_keyword(ix, terms, c);
            if (json) {
                print_json(hits);
            } else {
                for (const auto& h : hits) {
                    const auto& r = record(ix, h.id);
                    std::printf("%8.4f  %s  %-20s %s\n", h.score, h.id.value.c_str(),
                                r.iface.class_name.qualified().c_str(), r.path.c_str());
                }
            }
            return 0;
        }

        if (harvest_cmd->parsed()) {
            if (!work_root.empty()) {
                hcfg.work_root = work_root;
            }
            hcfg.validate();
            auto backend = make_backend(backend_spec);
            const auto ix = load(require_index(index_dir));
            const auto test = read_file(test_file);
            std::unique_ptr<RecordingBackend> recorder;
            ExecutionBackend* active = backend.get();
            if (!record_file.empty()) {
                recorder = std::make_unique<RecordingBackend>(*backend);
                active = recorder.get();
            }
            HarvestObserver obs;
            if (!json) {
                obs.on_progress = [](int tested, int total) {
                    std::fprintf(stderr, "\rtested %d/%d", tested, total);
                    if (tested == total) {
                        std::fprintf(stderr, "\n");
                    }
                };
            }
            const auto result = run_harvest(test, ix, hcfg, *active, obs);
            if (recorder) {
                write_file_atomic(record_file, recorder->transcript_json());
            }
            if (json) {
                print_json(result);
            } else {
                std::cout << "query: " << print_mql(result.query) << "\n";
                for (const auto& o : result.outcomes) {
                    std::printf("%-13s %s  %s  %lldms\n", std::string(to_string(o.verdict)).c_str(),
                                o.id.value.c_str(), record(ix, o.id).path.c_str(),
                                static_cast<long long>(o.duration_ms));
                }
                std::cout << "passing: " << result.passing.size() << "/" << result.outcomes.size() << "\n";
            }
            return 0;
        }

        if (metrics_cmd->parsed()) {
            const auto m = compute_metrics(read_file(metrics_file));
            if (json) {
                print_json(m);
            } else {
                std::printf("loc %d\ncyclomatic %d\nhalstead n1=%d n2=%d N1=%d N2=%d volume=%.2f difficulty=%.2f "
                            "effort=%.2f\n",
                            m.loc, m.cyclomatic, m.halstead.n1, m.halstead.n2, m.halstead.N1, m.halstead.N2,
                            m.halstead.volume, m.halstead.difficulty, m.halstead.effort);
            }
            return 0;
        }

        if (group_cmd->parsed()) {
            if (mql.empty() == ids.empty()) {
                throw InvalidArgument("give exactly one of --mql and --ids");
            }
            if (!(threshold > 0.0 && threshold <= 1.0)) {
                throw InvalidArgument("--threshold must be in (0, 1]");
            }
            const auto ix = load(require_index(index_dir));
            std::vector<InterfaceSpec> ifaces;
            TypeName name;
            if (!mql.empty()) {
                MqlQuery q;
                try {
                    q = parse_mql(mql);
                } catch (const MqlSyntaxError& e) {
                    report_error(e, mql);
                    return kDomainError;
                }
                SearchConstraints c;
                c.max_results = max_results;
                for (const auto& h : search_mql(ix, q, c)) {
                    ifaces.push_back(record(ix, h.id).iface);
                }
                name = TypeName{q.class_name};
            } else {
                for (const auto& id : ids) {
                    const auto* r = ix.find(ComponentId{id});
                    if (!r) {
                        throw InvalidArgument("unknown component " + id);
                    }
                    ifaces.push_back(r->iface);
                }
                name = TypeName{ifaces.front().class_name.simple};
            }
            if (ifaces.empty()) {
                throw InvalidArgument("no candidates to build a group picture from");
            }
            if (!group_name.empty()) {
                name = TypeName{group_name};
            }
            const auto gp = group_picture(ifaces, threshold, name);
            if (json) {
                print_json(gp);
            } else {
                std::cout << render_skeleton(gp);
            }
            return 0;
        }

        if (watch_cmd->parsed()) {
            const auto ix = load(require_index(index_dir));
            acfg.project_root = project_dir;
            if (!sink_file.empty()) {
                acfg.sink_path = sink_file;
            }
            std::mutex out_mutex;
            acfg.sink = [&](const Recommendation& r) {
                std::lock_guard lock(out_mutex);
                if (json) {
                    std::cout << Json(r).dump() << std::endl;
                } else {
                    std::cout << r.created_at << " " << to_string(r.trigger) << " " << r.cud_path << ": "
                              << print_mql(r.query) << " (" << r.hits.size() << " hits)" << std::endl;
                }
            };
            std::string failure;
            acfg.on_error = [&](const Error& e) { failure = e.code() + ": " + e.what(); };
            ProjectWatcher watcher(acfg, ix);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            watcher.start();
            const auto start = std::chrono::steady_clock::now();
            while (!g_interrupted && watcher.running()) {
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                if (duration > 0 && std::chrono::steady_clock::now() - start >
                                        std::chrono::milliseconds(static_cast<long long>(duration * 1000))) {
                    break;
                }
                if (!failure.empty()) {
                    break;
                }
            }
            watcher.stop();
            if (!failure.empty()) {
                std::cerr << "error: " << failure << "\n";
                return kDomainError;
            }
            return 0;
        }

        if (serve_cmd->parsed()) {
            auto backend = make_backend(backend_spec);
            const auto dir = require_index(index_dir);
            sopts.index_dir = dir;
            Service svc(load(dir), backend, sopts);
            std::cerr << "serving on http://" << host << ":" << port << "\n";
            if (!svc.listen(host, port)) {
                std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
                return kDomainError;
            }
            return 0;
        }

        if (resolve_cmd->parsed()) {
            const auto ix = load(require_index(index_dir));
            const auto source = read_file(resolve_file);
            const auto recs = extract_components(source, fs::path(resolve_file).filename().string());
            std::set<TypeName> ws;
            if (!workspace_dir.empty()) {
                for (const auto& e : fs::recursive_directory_iterator(workspace_dir)) {
                    if (!e.is_regular_file() || !is_subject_source_path(e.path().string())) {
                        continue;
                    }
                    for (const auto& d : parse_translation_unit(read_file(e.path().string())).types) {
                        ws.insert(d.name);
                    }
                }
            }
            const auto plan = resolve_dependencies(recs.front(), ix, ws, depth_cap);
            if (json) {
                print_json(plan);
            } else {
                for (const auto& s : plan.steps) {
                    std::cout << std::string(static_cast<std::size_t>(s.depth) * 2, ' ') << s.missing_type.qualified()
                              << " -> ";
                    if (!s.heuristic) {
                        std::cout << "UNRESOLVED\n";
                    } else if (s.resolved_by) {
                        std::cout << s.resolved_by->value << " (" << record(ix, *s.resolved_by).path << ", "
                                  << to_string(*s.heuristic) << ")\n";
                    } else {
                        std::cout << to_string(*s.heuristic) << "\n";
                    }
                }
            }
            return 0;
        }
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Error& e) {
        report_error(e, mql);
        return kDomainError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    }
    return kUsageError;
}
