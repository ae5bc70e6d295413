// Acceptance checks: one PASS/FAIL line per primary criterion. Exit status is
// the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "../oracles/metrics_snippets.hpp"
#include "tdsearch/analysis/group_picture.hpp"
#include "tdsearch/analysis/metrics.hpp"
#include "tdsearch/core/canonical.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"
#include "tdsearch/mql/mql.hpp"
#include "tdsearch/workspace/workspace.hpp"

using namespace tds;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

fs::path fixture(const std::string& rel) { return fs::path(TDS_FIXTURE_DIR) / rel; }

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what)
    {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

struct ScratchDir {
    fs::path path;
    explicit ScratchDir(const std::string& tag)
    {
        path = fs::temp_directory_path() / ("tds-accept-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~ScratchDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::set<std::string> paths_of(const CorpusIndex& ix, const std::vector<ComponentId>& ids)
{
    std::set<std::string> out;
    for (const auto& id : ids) {
        out.insert(ix.find(id)->path);
    }
    return out;
}

std::map<std::string, std::string> snapshot(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        out[e.path().lexically_relative(root).string()] = e.is_regular_file() ? read_file(e.path().string()) : "<dir>";
    }
    return out;
}

void write(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

// ---------------------------------------------------------------------------

Check precision()
{
    Check c;
    const auto ix = build_index(fixture("matrix"));
    const auto test = read_file(fixture("matrix_test.cpp").string());
    const std::set<std::string> correct = {"linalg/Matrix.hpp", "contrib/Matrix2D.hpp"};
    std::ostringstream note;

    ProcessBackend real;
    if (real.available()) {
        const auto t0 = Clock::now();
        HarvestConfig cfg;
        const auto r = run_harvest(test, ix, cfg, real);
        const double took = seconds_since(t0);

        // Brute-force oracle: every signature-matching component, executed outside the pipeline.
        const auto spec = infer_interface_from_test(test);
        const auto query = query_from_interface(spec.inferred_interface);
        std::set<std::string> oracle;
        ScratchDir scratch("oracle");
        int k = 0;
        for (const auto& [id, rec] : ix.components) {
            if (!match_interface(query, rec.iface).matched) {
                continue;
            }
            ExecutionRequest req;
            req.work_dir = scratch.path / std::to_string(k++);
            std::string adapted;
            try {
                adapted = adapt_candidate(rec, spec.inferred_interface);
            } catch (const AdaptError&) {
                continue;
            }
            req.sources = {{"candidate.hpp", adapted}, {"harness.cpp", generate_harness(spec)}};
            req.command = CommandSpec::default_cpp();
            if (classify(execute(req, real)) == Verdict::Pass) {
                oracle.insert(rec.path);
            }
        }
        const auto passing = paths_of(ix, r.passing);
        c.require(passing == oracle, "pipeline passing set differs from the brute-force oracle");
        c.require(passing == correct, "real toolchain did not return exactly the 2 correct variants");
        c.require(took < 120.0, "real toolchain run exceeded 2 minutes");
        // Re-execute each passing id standalone: it must pass again.
        for (const auto& id : r.passing) {
            ExecutionRequest req;
            req.work_dir = scratch.path / ("again-" + id.value);
            req.sources = {{"candidate.hpp", adapt_candidate(*ix.find(id), spec.inferred_interface)},
                           {"harness.cpp", generate_harness(spec)}};
            req.command = CommandSpec::default_cpp();
            c.require(classify(execute(req, real)) == Verdict::Pass, "passing id " + id.value + " failed on re-run");
        }
        char buf[96];
        std::snprintf(buf, sizeof buf, "real toolchain %zu/%zu passing in %.1fs, oracle equal", r.passing.size(),
                      r.outcomes.size(), took);
        note << buf;
    } else {
        note << "real toolchain absent, checked scripted path only";
    }

    auto scripted = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    const auto t0 = Clock::now();
    const auto r = run_harvest(test, ix, HarvestConfig{}, scripted);
    const double took = seconds_since(t0);
    c.require(paths_of(ix, r.passing) == correct, "scripted run did not return exactly the 2 correct variants");
    c.require(took < 5.0, "scripted run exceeded 5 s");
    char buf[64];
    std::snprintf(buf, sizeof buf, "; scripted %.2fs", took);
    note << buf;
    if (c.ok) {
        c.detail = note.str();
    }
    return c;
}

Check polynomial_group_picture()
{
    Check c;
    const auto ix = build_index(fixture("polynomial"));
    std::vector<InterfaceSpec> ifaces;
    for (const auto& [id, rec] : ix.components) {
        ifaces.push_back(rec.iface);
    }
    c.require(ifaces.size() == 4, "fixture must hold 4 variants");
    const auto gp = group_picture(ifaces, 0.5, TypeName{"Polynomial"});

    // Hand-counted over the fixture: add 4/4, toString 3/4, getDegree 2/4, differentiate 1/4.
    const std::map<std::string, double> expected = {{"add", 1.0}, {"toString", 0.75}, {"getDegree", 0.5}};
    std::map<std::string, double> got;
    for (const auto& m : gp.members) {
        got[m.display.name] = m.support;
    }
    c.require(got == expected, "member set or supports differ from {add 4/4, toString 3/4, getDegree 2/4}");
    std::set<std::string> keys;
    for (const auto& m : gp.members) {
        keys.insert(m.signature.key());
    }
    const auto wanted = [] {
        std::set<std::string> s;
        for (const char* sig : {"add(Polynomial):Polynomial", "toString():String", "getDegree():int"}) {
            const auto q = parse_mql(std::string("P(") + sig + ")");
            MethodSignature m;
            m.name = q.methods[0].name;
            for (const auto& p : q.methods[0].params) {
                m.params.push_back(TypeRef::named(TypeName{p}));
            }
            m.returns = TypeRef::named(TypeName{*q.methods[0].returns});
            s.insert(canonicalize_signature(m).key());
        }
        return s;
    }();
    c.require(keys == wanted, "canonical signatures differ from the expected listing");

    const auto skeleton = render_skeleton(gp);
    const auto back = extract_components(skeleton, "Polynomial.hpp").at(0).iface;
    std::set<std::string> round;
    for (const auto& m : back.methods) {
        round.insert(canonicalize_signature(m).key());
    }
    c.require(round == keys, "render -> extract round trip changed the member set");
    return c;
}

Check mql_round_trip()
{
    Check c;
    std::ifstream valid(fixture("mql/valid.txt"));
    std::string line;
    int n = 0;
    bool star = false;
    bool ellipsis = false;
    bool filter = false;
    bool any_return = false;
    while (std::getline(valid, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        ++n;
        try {
            const auto q1 = parse_mql(line);
            const auto printed = print_mql(q1);
            const auto q2 = parse_mql(printed);
            c.require(q1 == q2, "parse(print(parse(q))) != parse(q) for: " + line);
            c.require(print_mql(q2) == printed, "print is not a fixpoint for: " + line);
            star = star || line.find('*') != std::string::npos;
            ellipsis = ellipsis || std::any_of(q1.methods.begin(), q1.methods.end(),
                                               [](const MethodPattern& m) { return m.ellipsis; });
            filter = filter || !q1.filters.empty();
            any_return = any_return || std::any_of(q1.methods.begin(), q1.methods.end(),
                                                   [](const MethodPattern& m) { return !m.returns; });
        } catch (const MqlSyntaxError& e) {
            c.require(false, "valid fixture rejected: " + line + " (" + e.what() + ")");
        }
    }
    c.require(n >= 20, "fewer than 20 valid queries");
    c.require(star && ellipsis && filter && any_return, "valid fixtures miss wildcards, ELLIPSIS, filters or ANY");

    std::ifstream bad(fixture("mql/malformed.txt"));
    int m = 0;
    while (std::getline(bad, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        const auto expected = std::stoul(line.substr(0, tab));
        const auto query = tab == std::string::npos ? std::string() : line.substr(tab + 1);
        ++m;
        try {
            parse_mql(query);
            c.require(false, "malformed fixture accepted: " + query);
        } catch (const MqlSyntaxError& e) {
            c.require(e.position() == expected, "wrong position for: " + query);
        }
    }
    if (c.ok) {
        c.detail = std::to_string(n) + " valid, " + std::to_string(m) + " malformed";
    }
    return c;
}

Check metrics_oracle()
{
    Check c;
    for (const auto& k : oracle::kCases) {
        const auto r = compute_metrics(k.source);
        const auto& h = r.halstead;
        const std::string name = k.name;
        c.require(r.loc == k.loc, name + ": loc");
        c.require(r.cyclomatic == k.cyclomatic, name + ": cyclomatic");
        c.require(h.n1 == k.n1 && h.n2 == k.n2 && h.N1 == k.N1 && h.N2 == k.N2, name + ": n1/n2/N1/N2");
        const double n = k.n1 + k.n2;
        const double N = k.N1 + k.N2;
        const double V = n > 0 ? N * std::log2(n) : 0.0;
        const double D = k.n2 > 0 ? (k.n1 / 2.0) * (static_cast<double>(k.N2) / k.n2) : 0.0;
        c.require(std::fabs(h.volume - V) <= 1e-9, name + ": volume");
        c.require(std::fabs(h.difficulty - D) <= 1e-9, name + ": difficulty");
        c.require(std::fabs(h.effort - D * V) <= 1e-9, name + ": effort");
    }
    if (c.ok) {
        c.detail = std::to_string(std::size(oracle::kCases)) + " snippets";
    }
    return c;
}

Check index_determinism()
{
    Check c;
    ScratchDir dir("index");
    for (const char* corpus : {"toy", "matrix", "polynomial", "kinds"}) {
        const std::string name = corpus;
        const auto a = build_index(fixture(corpus));
        const auto b = build_index(fixture(corpus));
        persist(a, dir.path / (name + "-a"));
        persist(b, dir.path / (name + "-b"));
        c.require(snapshot(dir.path / (name + "-a")) == snapshot(dir.path / (name + "-b")),
                  name + ": two builds are not byte-identical");
        c.require(load(dir.path / (name + "-a")) == a, name + ": load(persist(ix)) != ix");
        for (const auto& [id, rec] : a.components) {
            if (rec.iface.kind == ComponentKind::Test) {
                continue;
            }
            SearchConstraints sc;
            sc.max_results = 1000;
            const auto hits = search_mql(a, query_from_interface(rec.iface), sc);
            const bool found = std::any_of(hits.begin(), hits.end(), [&](const SearchHit& h) {
                return h.id == id && h.interface_score == 1.0;
            });
            c.require(found, name + ": own interface does not find " + id.value + " with interfaceScore 1");
        }
    }
    return c;
}

Check agent()
{
    Check c;
    ScratchDir project("agent-project");
    ScratchDir outside("agent-sink");
    const auto ix = build_index(fixture("toy"));
    const std::string base = read_file(fixture("toy/Stack.hpp").string());
    write(project.path / "Stack.hpp", base);
    write(project.path / "Other.hpp", "class Other {\npublic:\n    int size() const { return 0; }\n};\n");

    std::mutex m;
    std::vector<Recommendation> recs;
    AgentConfig cfg;
    cfg.project_root = project.path;
    cfg.debounce_seconds = 2.0;
    cfg.poll_interval_ms = 100;
    cfg.sink_path = outside.path / "recs.jsonl";
    cfg.sink = [&](const Recommendation& r) {
        std::lock_guard lock(m);
        recs.push_back(r);
    };
    ProjectWatcher w(cfg, ix);
    w.start();

    // Comment-only and body-only edits to the second file.
    write(project.path / "Other.hpp", "// size helper\nclass Other {\npublic:\n    int size() const { return 0; }\n};\n");
    std::this_thread::sleep_for(std::chrono::milliseconds(300));
    write(project.path / "Other.hpp", "// size helper\nclass Other {\npublic:\n    int size() const { return 1; }\n};\n");

    // Ten interface edits within one second.
    std::string src = base;
    const auto t0 = Clock::now();
    for (int i = 0; i < 10; ++i) {
        const auto at = src.find("private:");
        src.insert(at, "    int extra" + std::to_string(i) + "() const { return " + std::to_string(i) + "; }\n");
        write(project.path / "Stack.hpp", src);
        std::this_thread::sleep_for(std::chrono::milliseconds(90));
    }
    const double burst = seconds_since(t0);
    const auto after_edits = snapshot(project.path);
    std::this_thread::sleep_for(std::chrono::milliseconds(3500));
    w.stop();

    c.require(burst < 1.0, "edit burst took longer than 1 s");
    std::lock_guard lock(m);
    c.require(recs.size() == 1, "expected exactly 1 recommendation, got " + std::to_string(recs.size()));
    c.require(recs.empty() || recs[0].cud_path == "Stack.hpp", "recommendation is not for the edited file");
    c.require(snapshot(project.path) == after_edits, "the agent changed files under the project root");
    return c;
}

Check dependency_resolution()
{
    Check c;
    const auto ix = build_index(fixture("deps/corpus"));
    auto root_of = [](const std::string& file) {
        return extract_components(read_file(fixture("deps/project/" + file).string()), file).at(0);
    };

    // Two-level chain: Invoice -> Customer -> Address; TaxRate lives in the project.
    const auto invoice = root_of("Invoice.hpp");
    const auto plan = resolve_dependencies(invoice, ix, {TypeName{"Invoice"}, TypeName{"TaxRate"}});
    c.require(plan.depth_reached == 2, "chain did not reach depth 2");
    std::map<std::string, const ComponentRecord*> resolved;
    for (const auto& s : plan.steps) {
        c.require(s.resolved(), s.missing_type.qualified() + " left unresolved");
        if (s.resolved_by) {
            resolved[s.missing_type.simple] = ix.find(*s.resolved_by);
        }
    }
    // Every member a source invokes on a resolved type exists on the chosen component.
    auto satisfied = [&](const std::string& source, const std::string& type) {
        const auto* rec = resolved.count(type) ? resolved[type] : nullptr;
        if (!rec) {
            return false;
        }
        for (const auto& [name, arity] : members_used_on(source, TypeName{type})) {
            const bool has = std::any_of(rec->iface.methods.begin(), rec->iface.methods.end(),
                                         [&](const MethodSignature& m) {
                                             return m.name == name && m.params.size() == arity;
                                         });
            if (!has) {
                return false;
            }
        }
        return true;
    };
    c.require(satisfied(invoice.source, "Customer"), "Customer members used by Invoice not satisfied");
    c.require(resolved.count("Customer") && satisfied(resolved["Customer"]->source, "Address"),
              "Address members used by Customer not satisfied");

    // Cycle Employee <-> Department plus an absent Ledger.
    const auto payroll = root_of("Payroll.hpp");
    const auto cyc = resolve_dependencies(payroll, ix, {});
    std::set<std::string> seen;
    bool ledger_unresolved = false;
    for (const auto& s : cyc.steps) {
        if (s.resolved_by) {
            c.require(seen.insert(s.resolved_by->value).second, "component appears twice in the cyclic plan");
        }
        if (s.missing_type.simple == "Ledger") {
            ledger_unresolved = !s.resolved();
        }
    }
    c.require(seen.size() == 2, "cycle members not both resolved");
    c.require(ledger_unresolved, "absent type not recorded as UNRESOLVED");
    return c;
}

Check order_independence()
{
    Check c;
    const auto ix = build_index(fixture("matrix"));
    const auto test = read_file(fixture("matrix_test.cpp").string());
    auto backend = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    HarvestConfig one;
    one.parallelism = 1;
    HarvestConfig eight;
    eight.parallelism = 8;
    const auto a = run_harvest(test, ix, one, backend);
    for (int round = 0; round < 5; ++round) {
        const auto b = run_harvest(test, ix, eight, backend);
        c.require(a.outcomes == b.outcomes, "outcomes differ between parallelism 1 and 8");
        c.require(a.passing == b.passing, "passing lists differ between parallelism 1 and 8");
    }
    return c;
}

}  // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        {"precision: harvest passing set equals the brute-force oracle (2 correct Matrix variants)", precision},
        {"group picture: Polynomial skeleton {add, toString, getDegree} at threshold 0.5", polynomial_group_picture},
        {"mql: parse/print/parse fixpoint and malformed positions", mql_round_trip},
        {"metrics: hand-classified oracle table", metrics_oracle},
        {"index: deterministic builds, persist/load round trip, self retrieval", index_determinism},
        {"agent: debounced burst, silent body/comment edits, non-intrusive", agent},
        {"dependencies: 2-level chain, cycle guard, UNRESOLVED", dependency_resolution},
        {"harvest: parallelism 1 and 8 give identical outcomes", order_independence},
    };
    // Manifests carry a timestamp; fix it so byte-identical builds are meaningful.
    ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1);
    int failures = 0;
    for (const auto& [name, run] : criteria) {
        Check c;
        try {
            c = run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        failures += c.ok ? 0 : 1;
        std::printf("%s %s%s%s\n", c.ok ? "PASS" : "FAIL", name.c_str(), c.detail.empty() ? "" : " -- ",
                    c.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
