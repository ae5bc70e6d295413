#include "tdsearch/harvester/harvester.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <mutex>
#include <set>
#include <thread>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/extractor/lexer.hpp"
#include "tdsearch/extractor/scan.hpp"

namespace tds {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kLogCap = 8 * 1024;

struct Edit {
    std::size_t begin;
    std::size_t end;
    std::string text;
};

std::string apply_edits(std::string_view source, std::vector<Edit> edits)
{
    std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
    std::string out;
    std::size_t at = 0;
    for (const auto& e : edits) {
        if (e.begin < at) {
            continue;  // overlapping edit; the earlier one wins
        }
        out.append(source.substr(at, e.begin - at));
        out += e.text;
        at = e.end;
    }
    out.append(source.substr(at));
    return out;
}

std::string simple_type_pattern(const TypeRef& t)
{
    if (t.kind == TypeKind::Unknown) {
        return "*";
    }
    if (t.kind == TypeKind::Void) {
        return "void";
    }
    return t.name.simple;
}

bool is_numeric(const std::string& canon)
{
    static const std::set<std::string> kNumeric = {
        "int",          "double",         "float",         "long",      "short",    "char",     "bool",
        "unsigned",     "unsigned_int",   "long_long",     "long_double", "size_t", "int8_t",   "int16_t",
        "int32_t",      "int64_t",        "uint8_t",       "uint16_t",  "uint32_t", "uint64_t", "unsigned_long",
        "unsigned_char", "signed_char",   "unsigned_short", "unsigned_long_long", "ptrdiff_t"};
    return kNumeric.count(canon) != 0;
}

bool constructor_param_compatible(const TypeRef& wanted, const TypeRef& have, const std::string& self_have,
                                  const std::string& self_wanted)
{
    const auto w = canonical_type(wanted);
    const auto h = canonical_type(have);
    return w == "*" || h == "*" || w == h || (is_numeric(w) && is_numeric(h)) || (h == self_have && w == self_wanted);
}

std::string truncate_log(const std::string& out, const std::string& err)
{
    std::string log = out;
    if (!err.empty()) {
        if (!log.empty() && log.back() != '\n') {
            log += '\n';
        }
        log += err;
    }
    if (log.size() > kLogCap) {
        log.resize(kLogCap);
        log += "\n[truncated]\n";
    }
    return log;
}

bool starts_with_test(const std::string& name) { return to_lower(name).starts_with("test"); }

}  // namespace

void HarvestConfig::validate() const
{
    if (max_candidates < 1 || per_candidate_timeout <= 0.0 || parallelism < 1) {
        throw InvalidArgument("maxCandidates, perCandidateTimeout and parallelism must be positive");
    }
    if (command.run.empty()) {
        throw InvalidArgument("run command must not be empty");
    }
}

std::string_view to_string(Verdict v)
{
    switch (v) {
    case Verdict::Pass:
        return "PASS";
    case Verdict::Fail:
        return "FAIL";
    case Verdict::CompileError:
        return "COMPILE_ERROR";
    case Verdict::RuntimeError:
        return "RUNTIME_ERROR";
    case Verdict::Timeout:
        return "TIMEOUT";
    case Verdict::AdaptError:
        return "ADAPT_ERROR";
    }
    return "RUNTIME_ERROR";
}

Verdict verdict_from_string(std::string_view s)
{
    for (auto v : {Verdict::Pass, Verdict::Fail, Verdict::CompileError, Verdict::RuntimeError, Verdict::Timeout,
                   Verdict::AdaptError}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw InvalidArgument("unknown verdict '" + std::string(s) + "'");
}

MqlQuery query_from_interface(const InterfaceSpec& iface)
{
    MqlQuery q;
    q.class_name = iface.class_name.simple;
    for (const auto& m : iface.methods) {
        if (m.is_constructor) {
            continue;
        }
        MethodPattern p;
        p.name = m.name;
        for (const auto& t : m.params) {
            p.params.push_back(simple_type_pattern(t));
        }
        if (!m.returns.is_unknown()) {
            p.returns = simple_type_pattern(m.returns);
        }
        q.methods.push_back(std::move(p));
    }
    return q;
}

std::string adapt_candidate(const ComponentRecord& candidate, const InterfaceSpec& iface)
{
    const std::string& from = candidate.iface.class_name.simple;
    const std::string& to = iface.class_name.simple;

    auto lexed = lex(candidate.source);
    if (lexed.issue) {
        throw AdaptError(std::string("candidate does not tokenize: ") + lexed.issue->what());
    }
    const auto& toks = lexed.tokens;

    if (from != to) {
        for (const auto& t : toks) {
            if (t.is_ident() && t.text == to) {
                throw AdaptError("renaming " + from + " to " + to + " collides with the existing identifier '" + to +
                                 "' at " + std::to_string(t.line) + ":" + std::to_string(t.column));
            }
        }
    }

    const std::string self_have = to_lower(from);
    const std::string self_wanted = to_lower(to);
    std::vector<const MethodSignature*> ctors;
    for (const auto& m : candidate.iface.methods) {
        if (m.is_constructor) {
            ctors.push_back(&m);
        }
    }
    for (const auto& want : iface.methods) {
        if (!want.is_constructor) {
            continue;
        }
        const bool ok =
            (ctors.empty() && want.params.empty()) ||
            std::any_of(ctors.begin(), ctors.end(), [&](const MethodSignature* have) {
                if (have->params.size() != want.params.size()) {
                    return false;
                }
                for (std::size_t k = 0; k < want.params.size(); ++k) {
                    if (!constructor_param_compatible(want.params[k], have->params[k], self_have, self_wanted)) {
                        return false;
                    }
                }
                return true;
            });
        if (!ok) {
            throw AdaptError("candidate has no constructor compatible with " + want.spelling());
        }
    }

    std::vector<Edit> edits;
    std::set<std::string> namespaces;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (!toks[i].is("namespace") || (i > 0 && toks[i - 1].is("using"))) {
            continue;
        }
        std::size_t j = i + 1;
        std::vector<std::string> names;
        while (j < toks.size() && (toks[j].is_ident() || toks[j].is("::"))) {
            if (toks[j].is_ident() && toks[j].text != "inline") {
                names.push_back(toks[j].text);
            }
            ++j;
        }
        if (j >= toks.size() || !toks[j].is("{")) {
            continue;
        }
        const auto close = find_matching(toks, j);
        if (close == std::string::npos) {
            throw AdaptError("unbalanced namespace block");
        }
        const std::size_t begin = (i > 0 && toks[i - 1].is("inline")) ? toks[i - 1].offset : toks[i].offset;
        edits.push_back({begin, toks[j].end(), ""});
        edits.push_back({toks[close].offset, toks[close].end(), ""});
        namespaces.insert(names.begin(), names.end());
    }
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
        if (toks[i].is("using") && toks[i + 1].is("namespace")) {
            std::size_t j = i + 2;
            bool stripped = false;
            while (j < toks.size() && !toks[j].is(";")) {
                stripped = stripped || (toks[j].is_ident() && namespaces.count(toks[j].text));
                ++j;
            }
            if (stripped && j < toks.size()) {
                edits.push_back({toks[i].offset, toks[j].end(), ""});
            }
        }
    }
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if (!t.is_ident()) {
            continue;
        }
        if (namespaces.count(t.text) && i + 1 < toks.size() && toks[i + 1].is("::")) {
            edits.push_back({t.offset, toks[i + 1].end(), ""});
        } else if (t.text == from && from != to) {
            edits.push_back({t.offset, t.end(), to});
        }
    }
    return apply_edits(candidate.source, std::move(edits));
}

std::string generate_harness(const TestCaseSpec& test)
{
    const std::string& source = test.source;
    const auto tu = parse_translation_unit(source);
    const auto toks = code_tokens(source);
    auto scan = scan_code(toks);
    std::sort(scan.assertions.begin(), scan.assertions.end(),
              [](const Assertion& a, const Assertion& b) { return a.span.begin < b.span.begin; });

    auto text_of = [&](const TokenRange& r) {
        return source.substr(toks[r.begin].offset, toks[r.end - 1].end() - toks[r.begin].offset);
    };

    std::vector<Edit> edits;
    int n = 0;
    for (const auto& a : scan.assertions) {
        ++n;
        std::string check;
        const auto num = std::to_string(n);
        switch (a.form) {
        case AssertionForm::Assert:
        case AssertionForm::AssertStatement:
        case AssertionForm::AssertTrue:
            check = "static_cast<bool>(" + (a.args.empty() ? std::string("false") : text_of(a.args[0])) + ")";
            break;
        case AssertionForm::AssertFalse:
            check = "!static_cast<bool>(" + (a.args.empty() ? std::string("true") : text_of(a.args[0])) + ")";
            break;
        case AssertionForm::AssertEquals:
            if (a.args.size() >= 3) {
                check = "harvest_rt::near(" + text_of(a.args[0]) + ", " + text_of(a.args[1]) + ", " +
                        text_of(a.args[2]) + ")";
            } else if (a.args.size() == 2) {
                check = "harvest_rt::equal(" + text_of(a.args[0]) + ", " + text_of(a.args[1]) + ")";
            } else {
                check = "false";
            }
            break;
        }
        const auto& first = toks[a.span.begin];
        const auto& last = toks[a.span.end - 1];
        edits.push_back({first.offset, last.end(), "harvest_rt::report(" + num + ", " + check + ")"});
    }

    std::string hoisted;
    for (const auto& t : lex(source).tokens) {
        if (t.kind != TokenKind::Preprocessor) {
            continue;
        }
        edits.push_back({t.offset, t.end(), ""});
        const bool quoted_include = t.text.find("include") != std::string::npos && t.text.find('"') != std::string::npos;
        if (!quoted_include) {
            hoisted += t.text + "\n";
        }
    }
    const std::string body = apply_edits(source, std::move(edits));

    std::string out;
    out += "// Generated test harness.\n";
    out += "#include <cmath>\n#include <cstdio>\n#include <exception>\n#include <stdexcept>\n";
    out += "#include <string>\n#include <vector>\n";
    out += hoisted;
    out += "#include \"candidate.hpp\"\n\n";
    out += "namespace harvest_rt {\n"
           "static int failures = 0;\n"
           "inline void report(int n, bool ok)\n"
           "{\n"
           "    std::printf(\"%s %d\\n\", ok ? \"ASSERT_OK\" : \"ASSERT_FAIL\", n);\n"
           "    std::fflush(stdout);\n"
           "    if (!ok) {\n"
           "        ++failures;\n"
           "    }\n"
           "}\n"
           "template <class A, class B>\n"
           "bool equal(const A& expected, const B& actual) { return expected == actual; }\n"
           "inline bool near(double expected, double actual, double eps) { return std::fabs(expected - actual) <= eps; }\n"
           "}  // namespace harvest_rt\n\n";

    std::vector<std::string> calls;
    if (tu.top_level_assertions) {
        out += "static void harvest_test_body()\n{\n" + body + "\n}\n";
        calls.push_back("harvest_test_body();");
    } else {
        out += body + "\n";
        std::vector<std::string> free_fns;
        for (const auto& f : tu.functions) {
            if (f.owner.empty() && f.param_count == 0 && f.returns_void && f.name != "main" &&
                std::find(free_fns.begin(), free_fns.end(), f.name) == free_fns.end()) {
                free_fns.push_back(f.name);
            }
        }
        if (std::any_of(free_fns.begin(), free_fns.end(), starts_with_test)) {
            std::erase_if(free_fns, [](const std::string& s) { return !starts_with_test(s); });
        }
        for (const auto& f : free_fns) {
            calls.push_back(f + "();");
        }
        for (const auto& decl : tu.types) {
            if (interface_of(decl).kind != ComponentKind::Test) {
                continue;
            }
            std::vector<std::string> methods;
            for (const auto& m : decl.members) {
                const auto& s = m.signature;
                if (m.is_public && !s.is_constructor && s.params.empty() && s.returns.kind == TypeKind::Void &&
                    std::find(methods.begin(), methods.end(), s.name) == methods.end()) {
                    methods.push_back(s.name);
                }
            }
            if (std::any_of(methods.begin(), methods.end(), starts_with_test)) {
                std::erase_if(methods, [](const std::string& s) { return !starts_with_test(s); });
            }
            const std::string cls = decl.name.qualifier.empty()
                                        ? decl.name.simple
                                        : render_cpp_type(TypeRef::named(decl.name));
            for (const auto& m : methods) {
                calls.push_back("{ " + cls + " fixture; fixture." + m + "(); }");
            }
        }
    }

    out += "\nint main()\n{\n    try {\n";
    for (const auto& c : calls) {
        out += "        " + c + "\n";
    }
    out += "    } catch (const std::exception& e) {\n"
           "        std::fprintf(stderr, \"uncaught exception: %s\\n\", e.what());\n"
           "        return 3;\n"
           "    } catch (...) {\n"
           "        std::fprintf(stderr, \"uncaught exception\\n\");\n"
           "        return 3;\n"
           "    }\n"
           "    return harvest_rt::failures == 0 ? 0 : 1;\n"
           "}\n";
    return out;
}

Verdict classify(const ExecutionResult& r)
{
    if (r.exit_status == ExitStatus::Timeout) {
        return Verdict::Timeout;
    }
    if (r.phase == Phase::Build && r.exit_status != ExitStatus::Ok) {
        return Verdict::CompileError;
    }
    int ok = 0;
    int fail = 0;
    std::size_t start = 0;
    const auto& out = r.stdout_text;
    while (start < out.size()) {
        auto end = out.find('\n', start);
        if (end == std::string::npos) {
            end = out.size();
        }
        std::string_view line(out.data() + start, end - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        auto numbered = [&](std::string_view prefix) {
            if (!line.starts_with(prefix) || line.size() == prefix.size()) {
                return false;
            }
            return std::all_of(line.begin() + static_cast<std::ptrdiff_t>(prefix.size()), line.end(),
                               [](char c) { return c >= '0' && c <= '9'; });
        };
        if (numbered("ASSERT_OK ")) {
            ++ok;
        } else if (numbered("ASSERT_FAIL ")) {
            ++fail;
        }
        start = end + 1;
    }
    if (fail > 0) {
        return Verdict::Fail;
    }
    if (r.exit_status == ExitStatus::Ok && ok > 0) {
        return Verdict::Pass;
    }
    return Verdict::RuntimeError;
}

CandidateOutcome test_candidate(const ComponentRecord& candidate, const TestCaseSpec& test, const HarvestConfig& cfg,
                                ExecutionBackend& backend, const fs::path& work_dir)
{
    CandidateOutcome outcome;
    outcome.id = candidate.id;
    std::string adapted;
    try {
        adapted = adapt_candidate(candidate, test.inferred_interface);
    } catch (const AdaptError& e) {
        outcome.verdict = Verdict::AdaptError;
        outcome.log = e.what();
        return outcome;
    }

    ExecutionRequest req;
    req.work_dir = work_dir;
    req.sources = {{"candidate.hpp", adapted}, {"harness.cpp", generate_harness(test)}};
    req.command = cfg.command;
    req.timeout_seconds = cfg.per_candidate_timeout;
    req.candidate = candidate.id;
    try {
        const auto r = execute(req, backend);
        outcome.verdict = r.exit_status == ExitStatus::ToolMissing
                              ? (r.phase == Phase::Build ? Verdict::CompileError : Verdict::RuntimeError)
                              : classify(r);
        outcome.duration_ms = r.duration_ms;
        outcome.log = truncate_log(r.stdout_text, r.stderr_text);
    } catch (const Error& e) {
        outcome.verdict = Verdict::RuntimeError;
        outcome.log = std::string("execution failed: ") + e.what();
    }
    if (!cfg.keep_work_dirs) {
        std::error_code ec;
        fs::remove_all(work_dir, ec);
    }
    return outcome;
}

HarvestResult run_harvest(std::string_view test_source, const CorpusIndex& ix, const HarvestConfig& cfg,
                          ExecutionBackend& backend, const HarvestObserver& observer)
{
    cfg.validate();
    auto stage = [&](HarvestStage s) {
        if (observer.on_stage) {
            observer.on_stage(s);
        }
    };

    stage(HarvestStage::Extracting);
    HarvestResult result;
    result.test_spec = infer_interface_from_test(test_source);
    if (!backend.available()) {
        throw BackendUnavailable("execution backend '" + backend.name() + "' is not available");
    }

    stage(HarvestStage::Searching);
    result.query = query_from_interface(result.test_spec.inferred_interface);
    SearchConstraints constraints;
    constraints.dedupe = true;
    constraints.exclude_kinds = {ComponentKind::Test, ComponentKind::Interface};
    constraints.max_results = cfg.max_candidates;
    const auto hits = search_mql(ix, result.query, constraints);

    stage(HarvestStage::Testing);
    const int total = static_cast<int>(hits.size());
    result.outcomes.resize(hits.size());
    if (observer.on_progress) {
        observer.on_progress(0, total);
    }

    fs::path session;
    if (!hits.empty()) {
        const fs::path root = cfg.work_root.empty() ? fs::temp_directory_path() : cfg.work_root;
        std::error_code ec;
        fs::create_directories(root, ec);
        std::string tmpl = (root / "tds-harvest-XXXXXX").string();
        if (!::mkdtemp(tmpl.data())) {
            throw IoError("cannot create harvest directory under " + root.string());
        }
        session = tmpl;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<int> tested{0};
    std::mutex progress_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < hits.size(); i = next++) {
            const auto& hit = hits[i];
            CandidateOutcome outcome;
            const auto* rec = ix.find(hit.id);
            if (!rec) {
                outcome.id = hit.id;
                outcome.verdict = Verdict::AdaptError;
                outcome.log = "component missing from index";
            } else if (hit.interface_score < 1.0) {
                outcome.id = hit.id;
                outcome.verdict = Verdict::AdaptError;
                outcome.log = "interface mismatch: interfaceScore " + std::to_string(hit.interface_score);
            } else {
                outcome = test_candidate(*rec, result.test_spec, cfg, backend,
                                         session / (std::to_string(i) + "-" + hit.id.value));
            }
            result.outcomes[i] = std::move(outcome);
            const int done = ++tested;
            if (observer.on_progress) {
                std::lock_guard lock(progress_mutex);
                observer.on_progress(done, total);
            }
        }
    };
    const int threads = std::min<int>(cfg.parallelism, std::max(total, 1));
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }
    if (!session.empty() && !cfg.keep_work_dirs) {
        std::error_code ec;
        fs::remove_all(session, ec);
    }

    for (const auto& o : result.outcomes) {
        if (o.verdict == Verdict::Pass) {
            result.passing.push_back(o.id);
        }
    }
    return result;
}

}  // namespace tds
