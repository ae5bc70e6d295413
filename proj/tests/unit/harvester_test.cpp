#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "tdsearch/core/error.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"
#include "test_support.hpp"

using namespace tds;
namespace fs = std::filesystem;

namespace {

std::string matrix_test() { return read_file(fixture("matrix_test.cpp").string()); }

std::string id_at(const CorpusIndex& ix, const std::string& path)
{
    for (const auto& [id, rec] : ix.components) {
        if (rec.path == path) {
            return id.value;
        }
    }
    return "";
}

ExecutionResult canned(ExitStatus s, std::string out, Phase phase = Phase::Run)
{
    ExecutionResult r;
    r.exit_status = s;
    r.stdout_text = std::move(out);
    r.phase = phase;
    return r;
}

bool have_compiler() { return ProcessBackend().available(); }

ComponentRecord record_from(const std::string& source, const std::string& path = "X.hpp")
{
    auto recs = extract_components(source, path);
    return recs.at(0);
}

std::vector<std::string> verdicts(const HarvestResult& r)
{
    std::vector<std::string> out;
    for (const auto& o : r.outcomes) {
        out.push_back(o.id.value + "=" + std::string(to_string(o.verdict)));
    }
    return out;
}

}  // namespace

// ---- query_from_interface -------------------------------------------------

TEST(QueryFromInterface, PolynomialListing)
{
    const auto spec = infer_interface_from_test(R"(
void testPoly() {
    Polynomial p;
    Polynomial q;
    Polynomial r = p.add(q);
    std::string s = r.toString();
    int d = r.getDegree();
    assert(d == 0);
}
)");
    EXPECT_EQ(print_mql(query_from_interface(spec.inferred_interface)),
              "Polynomial(add(Polynomial):Polynomial; toString():string; getDegree():int)");
}

TEST(QueryFromInterface, ClassNameOnlyAndUnknownReturn)
{
    InterfaceSpec iface;
    iface.class_name = TypeName{"Stack"};
    EXPECT_EQ(print_mql(query_from_interface(iface)), "Stack");

    MethodSignature add;
    add.name = "add";
    add.params = {TypeRef::unknown()};
    add.returns = TypeRef::unknown();
    iface.add_method(add);
    MethodSignature ctor;
    ctor.name = "Stack";
    ctor.is_constructor = true;
    ctor.returns = TypeRef::named(TypeName{"Stack"});
    iface.add_method(ctor);
    EXPECT_EQ(print_mql(query_from_interface(iface)), "Stack(add(*))");
}

// ---- adapt_candidate ---------------------------------------------------------

TEST(Adapt, RenamesEveryClassToken)
{
    const auto rec = record_from(read_file(fixture("matrix/contrib/Matrix2D.hpp").string()));
    const auto spec = infer_interface_from_test(matrix_test());
    const auto out = adapt_candidate(rec, spec.inferred_interface);
    EXPECT_EQ(out.find("Matrix2D"), std::string::npos);
    EXPECT_NE(out.find("class Matrix {"), std::string::npos);
    EXPECT_NE(out.find("Matrix add(const Matrix& rhs) const"), std::string::npos);
}

TEST(Adapt, IdentityRenameStripsNamespace)
{
    const auto src = read_file(fixture("matrix/linalg/Matrix.hpp").string());
    const auto rec = record_from(src);
    const auto spec = infer_interface_from_test(matrix_test());
    const auto out = adapt_candidate(rec, spec.inferred_interface);
    EXPECT_EQ(out.find("namespace linalg {"), std::string::npos);
    EXPECT_EQ(out.find("linalg::"), std::string::npos);
    EXPECT_NE(out.find("};\n\n  // namespace linalg"), std::string::npos) << "closing brace removed, comment kept";
    EXPECT_NE(out.find("Matrix add(const Matrix& o) const"), std::string::npos);
    // Everything outside the namespace wrapper is kept byte for byte.
    EXPECT_NE(out.find("/// Sparse matrix keyed by (row, col)."), std::string::npos);
}

TEST(Adapt, UsingNamespaceRemovedWithStrippedNamespace)
{
    const auto rec = record_from("namespace geo { class Pt { public: int x() const { return 1; } }; }\n"
                                 "using namespace geo;\n");
    InterfaceSpec iface;
    iface.class_name = TypeName{"Pt"};
    const auto out = adapt_candidate(rec, iface);
    EXPECT_EQ(out.find("using"), std::string::npos);
    EXPECT_EQ(out.find("namespace"), std::string::npos);
}

TEST(Adapt, InnerTypeCollisionIsAdaptError)
{
    const auto rec = record_from("class Grid {\npublic:\n    struct Matrix { int v; };\n    int rows() const { return 1; }\n};\n");
    InterfaceSpec iface;
    iface.class_name = TypeName{"Matrix"};
    try {
        adapt_candidate(rec, iface);
        FAIL() << "expected AdaptError";
    } catch (const AdaptError& e) {
        EXPECT_NE(std::string(e.what()).find("3:12"), std::string::npos) << e.what();
    }
}

TEST(Adapt, MissingConstructorIsAdaptError)
{
    const auto rec = record_from("class Matrix {\npublic:\n    explicit Matrix(int n) : n_(n) {}\n    int rows() const { return n_; }\nprivate:\n    int n_;\n};\n");
    const auto spec = infer_interface_from_test(matrix_test());  // uses Matrix(int, int)
    EXPECT_THROW(adapt_candidate(rec, spec.inferred_interface), AdaptError);
}

TEST(Adapt, ImplicitDefaultConstructorAccepted)
{
    const auto rec = record_from("struct Counter {\n    int n = 0;\n    void inc() { ++n; }\n    int value() const { return n; }\n};\n");
    const auto spec = infer_interface_from_test("void t() { Counter c; c.inc(); assert(c.value() == 1); }\n");
    EXPECT_NO_THROW(adapt_candidate(rec, spec.inferred_interface));
}

// ---- generate_harness --------------------------------------------------------

TEST(Harness, RewritesAssertionsInSourceOrder)
{
    const auto spec = infer_interface_from_test(matrix_test());
    const auto h = generate_harness(spec);
    EXPECT_NE(h.find("harvest_rt::report(1, harvest_rt::near(2.0, c.get(0, 0), 1e-9))"), std::string::npos) << h;
    EXPECT_NE(h.find("harvest_rt::report(4, harvest_rt::equal(2, c.rows()))"), std::string::npos) << h;
    EXPECT_EQ(h.find("assertEquals"), std::string::npos);
    EXPECT_NE(h.find("#include \"candidate.hpp\""), std::string::npos);
    EXPECT_NE(h.find("testAdd();"), std::string::npos);
}

TEST(Harness, QuotedIncludesDroppedAngleIncludesKept)
{
    const auto spec = infer_interface_from_test(
        "#include \"Stack.hpp\"\n#include <cassert>\nvoid testPush() { Stack s; s.push(1); assert(s.size() == 1); }\n");
    const auto h = generate_harness(spec);
    EXPECT_EQ(h.find("Stack.hpp"), std::string::npos);
    EXPECT_NE(h.find("#include <cassert>"), std::string::npos);
    EXPECT_NE(h.find("harvest_rt::report(1, static_cast<bool>(s.size() == 1))"), std::string::npos) << h;
}

TEST(Harness, TestClassMethodsGetFreshFixtures)
{
    const auto spec = infer_interface_from_test(R"(
class StackTest {
public:
    void testPush() { Stack s; s.push(1); assertTrue(s.size() == 1); }
    void testEmpty() { Stack s; assertFalse(s.size() == 1); }
private:
    void helper() {}
};
)");
    const auto h = generate_harness(spec);
    EXPECT_NE(h.find("{ StackTest fixture; fixture.testPush(); }"), std::string::npos) << h;
    EXPECT_NE(h.find("{ StackTest fixture; fixture.testEmpty(); }"), std::string::npos);
    EXPECT_EQ(h.find("fixture.helper()"), std::string::npos);
    EXPECT_NE(h.find("harvest_rt::report(2, !static_cast<bool>(s.size() == 1))"), std::string::npos);
}

// ---- classify ------------------------------------------------------------------

TEST(Classify, ProtocolRules)
{
    EXPECT_EQ(classify(canned(ExitStatus::Ok, "ASSERT_OK 1\nASSERT_OK 2\nASSERT_OK 3\n")), Verdict::Pass);
    EXPECT_EQ(classify(canned(ExitStatus::Nonzero, "ASSERT_OK 1\nASSERT_FAIL 2\n")), Verdict::Fail);
    EXPECT_EQ(classify(canned(ExitStatus::Nonzero, "")), Verdict::RuntimeError);
    EXPECT_EQ(classify(canned(ExitStatus::Ok, "")), Verdict::RuntimeError);
    EXPECT_EQ(classify(canned(ExitStatus::Nonzero, "ASSERT_OK 1\n")), Verdict::RuntimeError);
    EXPECT_EQ(classify(canned(ExitStatus::Timeout, "ASSERT_OK 1\n")), Verdict::Timeout);
    EXPECT_EQ(classify(canned(ExitStatus::Nonzero, "", Phase::Build)), Verdict::CompileError);
    EXPECT_EQ(classify(canned(ExitStatus::Ok, "ASSERT_OK one\n")), Verdict::RuntimeError);
    EXPECT_EQ(classify(canned(ExitStatus::Ok, "ASSERT_OK 1\r\n")), Verdict::Pass);
}

TEST(Verdicts, StringRoundTrip)
{
    for (auto v : {Verdict::Pass, Verdict::Fail, Verdict::CompileError, Verdict::RuntimeError, Verdict::Timeout,
                   Verdict::AdaptError}) {
        EXPECT_EQ(verdict_from_string(to_string(v)), v);
    }
    EXPECT_THROW(verdict_from_string("MAYBE"), InvalidArgument);
}

// ---- execution backend -------------------------------------------------------

TEST(Execution, SleepForeverTimesOut)
{
    if (!have_compiler()) {
        GTEST_SKIP() << "no C++ compiler on PATH";
    }
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.sources["harness.cpp"] =
        "#include <chrono>\n#include <thread>\nint main() { for (;;) std::this_thread::sleep_for(std::chrono::hours(1)); }\n";
    req.command = CommandSpec::default_cpp();
    req.timeout_seconds = 2.0;
    ProcessBackend backend;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = execute(req, backend);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(r.exit_status, ExitStatus::Timeout);
    EXPECT_EQ(classify(r), Verdict::Timeout);
    EXPECT_GE(ms, 1900);
    EXPECT_LT(ms, 4000);
}

TEST(Execution, TimeoutKillsWholeProcessTree)
{
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.command.run = {"sh", "-c", "sleep 30 & sleep 30"};
    req.timeout_seconds = 1.0;
    ProcessBackend backend("sh");
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = execute(req, backend);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(r.exit_status, ExitStatus::Timeout);
    EXPECT_LT(ms, 3000);  // the backgrounded sleep keeps the pipes open unless it is killed too
}

TEST(Execution, BrokenSourceIsCompileError)
{
    if (!have_compiler()) {
        GTEST_SKIP() << "no C++ compiler on PATH";
    }
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.sources["harness.cpp"] = "int main( {\n";
    req.command = CommandSpec::default_cpp();
    ProcessBackend backend;
    const auto r = execute(req, backend);
    EXPECT_EQ(r.phase, Phase::Build);
    EXPECT_EQ(r.exit_status, ExitStatus::Nonzero);
    EXPECT_EQ(classify(r), Verdict::CompileError);
    EXPECT_FALSE(r.stderr_text.empty());
}

TEST(Execution, MissingToolReported)
{
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.command.build = {"tds-no-such-compiler", "x.cpp"};
    req.command.run = {"./x"};
    ProcessBackend backend("tds-no-such-compiler");
    EXPECT_FALSE(backend.available());
    const auto r = execute(req, backend);
    EXPECT_EQ(r.exit_status, ExitStatus::ToolMissing);
}

TEST(Execution, EnvironmentAllowlistAndWorkDir)
{
    ::setenv("TDS_LEAK_CHECK", "secret", 1);
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.command.run = {"sh", "-c", "env; echo CWD=$(pwd)"};
    ProcessBackend backend("sh");
    const auto r = execute(req, backend);
    ::unsetenv("TDS_LEAK_CHECK");
    EXPECT_EQ(r.exit_status, ExitStatus::Ok);
    EXPECT_EQ(r.stdout_text.find("TDS_LEAK_CHECK"), std::string::npos);
    EXPECT_NE(r.stdout_text.find("CWD=" + fs::canonical(req.work_dir).string()), std::string::npos) << r.stdout_text;
    EXPECT_NE(r.stdout_text.find("HOME=" + req.work_dir.string()), std::string::npos);
}

TEST(Execution, OutputIsCapped)
{
    TempDir tmp;
    ExecutionRequest req;
    req.work_dir = tmp.path / "w";
    req.command.run = {"sh", "-c", "i=0; while [ $i -lt 3000 ]; do echo 0123456789012345678901234567890123456789; i=$((i+1)); done"};
    ProcessBackend backend("sh");
    const auto r = execute(req, backend);
    EXPECT_EQ(r.exit_status, ExitStatus::Ok);
    EXPECT_EQ(r.stdout_text.size(), kOutputCap);
}

TEST(Execution, WorkDirMustBeFresh)
{
    TempDir tmp;
    write_file_atomic((tmp.path / "leftover").string(), "x");
    ExecutionRequest req;
    req.work_dir = tmp.path;
    req.command.run = {"true"};
    ProcessBackend backend("sh");
    EXPECT_THROW(execute(req, backend), InvalidArgument);
}

TEST(Execution, ScriptedVerdictComesFromTranscript)
{
    auto backend = ScriptedBackend::from_json_text(R"({
        "a": {"exitStatus": "OK", "stdout": "ASSERT_OK 1\n", "durationMs": 7},
        "b": {"exitStatus": "NONZERO", "stdout": "", "stderr": "boom", "phase": "BUILD"}
    })");
    ExecutionRequest req;
    req.work_dir = "/nonexistent/never-created";
    req.candidate = ComponentId{"a"};
    auto r = backend.execute(req);
    EXPECT_EQ(classify(r), Verdict::Pass);
    EXPECT_EQ(r.duration_ms, 7);
    req.candidate = ComponentId{"b"};
    EXPECT_EQ(classify(backend.execute(req)), Verdict::CompileError);
    req.candidate = ComponentId{"c"};
    EXPECT_EQ(classify(backend.execute(req)), Verdict::RuntimeError);
    EXPECT_THROW(ScriptedBackend::from_json_text("[1]"), InvalidArgument);
    EXPECT_THROW(ScriptedBackend::from_json_text(R"({"a": {"exitStatus": "MAYBE"}})"), InvalidArgument);
}

// ---- run_harvest ---------------------------------------------------------------

TEST(Harvest, RealToolchainMatchesBruteForceOracle)
{
    if (!have_compiler()) {
        GTEST_SKIP() << "no C++ compiler on PATH";
    }
    const auto ix = build_index(fixture("matrix"));
    const auto test = matrix_test();
    ProcessBackend backend;
    HarvestConfig cfg;
    cfg.parallelism = 2;
    const auto r = run_harvest(test, ix, cfg, backend);

    // Oracle: every signature-matching component, executed directly.
    const auto spec = infer_interface_from_test(test);
    const auto query = query_from_interface(spec.inferred_interface);
    std::set<std::string> oracle;
    TempDir tmp;
    int k = 0;
    for (const auto& [id, rec] : ix.components) {
        if (!match_interface(query, rec.iface).matched) {
            continue;
        }
        ExecutionRequest req;
        req.work_dir = tmp.path / std::to_string(k++);
        req.sources = {{"candidate.hpp", adapt_candidate(rec, spec.inferred_interface)},
                       {"harness.cpp", generate_harness(spec)}};
        req.command = CommandSpec::default_cpp();
        if (classify(execute(req, backend)) == Verdict::Pass) {
            oracle.insert(id.value);
        }
    }

    const std::set<std::string> passing = [&] {
        std::set<std::string> s;
        for (const auto& id : r.passing) {
            s.insert(id.value);
        }
        return s;
    }();
    EXPECT_EQ(passing, oracle);
    EXPECT_EQ(passing, (std::set<std::string>{id_at(ix, "linalg/Matrix.hpp"), id_at(ix, "contrib/Matrix2D.hpp")}));
    EXPECT_EQ(r.outcomes.size(), 6u);

    std::map<std::string, Verdict> by_path;
    for (const auto& o : r.outcomes) {
        by_path[ix.find(o.id)->path] = o.verdict;
    }
    EXPECT_EQ(by_path["contrib/TransposedMatrix.hpp"], Verdict::Fail);
    EXPECT_EQ(by_path["contrib/CheckedMatrix.hpp"], Verdict::RuntimeError);
    EXPECT_EQ(by_path["contrib/DraftMatrix.hpp"], Verdict::CompileError);
    EXPECT_EQ(by_path["contrib/PlusMatrix.hpp"], Verdict::AdaptError);
}

TEST(Harvest, ScriptedAllNonzeroPassesNothing)
{
    const auto ix = build_index(fixture("matrix"));
    ScriptedBackend backend({{"*", canned(ExitStatus::Nonzero, "")}});
    const auto r = run_harvest(matrix_test(), ix, HarvestConfig{}, backend);
    EXPECT_TRUE(r.passing.empty());
    EXPECT_EQ(r.outcomes.size(), 6u);
}

TEST(Harvest, FrozenTranscriptReproducesRealRun)
{
    const auto ix = build_index(fixture("matrix"));
    auto backend = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    const auto r = run_harvest(matrix_test(), ix, HarvestConfig{}, backend);
    std::vector<std::string> paths;
    for (const auto& id : r.passing) {
        paths.push_back(ix.find(id)->path);
    }
    std::sort(paths.begin(), paths.end());
    EXPECT_EQ(paths, (std::vector<std::string>{"contrib/Matrix2D.hpp", "linalg/Matrix.hpp"}));
}

TEST(Harvest, ParallelismDoesNotChangeOutcomes)
{
    const auto ix = build_index(fixture("matrix"));
    auto backend = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    HarvestConfig one;
    one.parallelism = 1;
    HarvestConfig eight;
    eight.parallelism = 8;
    const auto a = run_harvest(matrix_test(), ix, one, backend);
    const auto b = run_harvest(matrix_test(), ix, eight, backend);
    EXPECT_EQ(verdicts(a), verdicts(b));
    EXPECT_EQ(a, b);
}

TEST(Harvest, EveryCandidateAppearsOnceAndProgressIsMonotonic)
{
    const auto ix = build_index(fixture("matrix"));
    ScriptedBackend backend({{"*", canned(ExitStatus::Ok, "ASSERT_OK 1\n")}});
    std::vector<HarvestStage> stages;
    std::vector<int> progress;
    HarvestObserver obs;
    obs.on_stage = [&](HarvestStage s) { stages.push_back(s); };
    obs.on_progress = [&](int tested, int total) {
        EXPECT_EQ(total, 6);
        progress.push_back(tested);
    };
    HarvestConfig cfg;
    cfg.parallelism = 3;
    const auto r = run_harvest(matrix_test(), ix, cfg, backend, obs);
    std::set<std::string> ids;
    for (const auto& o : r.outcomes) {
        EXPECT_TRUE(ids.insert(o.id.value).second);
    }
    EXPECT_EQ(ids.size(), 6u);
    EXPECT_EQ(stages, (std::vector<HarvestStage>{HarvestStage::Extracting, HarvestStage::Searching,
                                                 HarvestStage::Testing}));
    EXPECT_EQ(progress, (std::vector<int>{0, 1, 2, 3, 4, 5, 6}));
    // The interface-mismatched candidate never reaches the backend.
    EXPECT_EQ(r.passing.size(), 5u);
}

TEST(Harvest, MaxCandidatesBoundsTheSearch)
{
    const auto ix = build_index(fixture("matrix"));
    ScriptedBackend backend({{"*", canned(ExitStatus::Nonzero, "")}});
    HarvestConfig cfg;
    cfg.max_candidates = 2;
    EXPECT_EQ(run_harvest(matrix_test(), ix, cfg, backend).outcomes.size(), 2u);
}

TEST(Harvest, WorkDirsRemovedUnlessKept)
{
    const auto ix = build_index(fixture("matrix"));
    ScriptedBackend backend({{"*", canned(ExitStatus::Nonzero, "")}});
    TempDir root;
    HarvestConfig cfg;
    cfg.work_root = root.path;
    run_harvest(matrix_test(), ix, cfg, backend);
    EXPECT_TRUE(fs::is_empty(root.path));
}

TEST(Harvest, ErrorsPropagate)
{
    const auto ix = build_index(fixture("matrix"));
    ScriptedBackend scripted({});
    EXPECT_THROW(run_harvest("void t() { int x = 1; assert(x == 1); }", ix, HarvestConfig{}, scripted),
                 NoClassUnderTest);
    EXPECT_THROW(run_harvest("void t() { A a; B b; assert(a.f() == b.g()); }", ix, HarvestConfig{}, scripted),
                 AmbiguousCut);
    ProcessBackend missing("tds-no-such-compiler");
    EXPECT_THROW(run_harvest(matrix_test(), ix, HarvestConfig{}, missing), BackendUnavailable);
    HarvestConfig bad;
    bad.parallelism = 0;
    EXPECT_THROW(run_harvest(matrix_test(), ix, bad, scripted), InvalidArgument);
}

TEST(Harvest, ResultJsonRoundTrip)
{
    const auto ix = build_index(fixture("matrix"));
    auto backend = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    const auto r = run_harvest(matrix_test(), ix, HarvestConfig{}, backend);
    const Json j = r;
    EXPECT_EQ(j.at("outcomes").size(), 6u);
    EXPECT_TRUE(j.at("outcomes")[0].contains("durationMs"));
    EXPECT_EQ(j.get<HarvestResult>(), r);
}
