#include <chrono>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "tdsearch/core/error.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"
#include "tdsearch/service/service.hpp"
#include "test_support.hpp"

using namespace tds;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

std::shared_ptr<ExecutionBackend> transcript_backend()
{
    return std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(fixture("transcripts/matrix.json").string()));
}

JobRecord wait_terminal(Service& svc, const std::string& id)
{
    for (int i = 0; i < 400; ++i) {
        const auto r = svc.handle("GET", "/api/v1/harvest/" + id, "");
        auto rec = r.body.get<JobRecord>();
        if (is_terminal(rec.state)) {
            return rec;
        }
        std::this_thread::sleep_for(25ms);
    }
    throw std::runtime_error("job did not finish");
}

struct SlowBackend : ExecutionBackend {
    ExecutionResult execute(const ExecutionRequest&) override
    {
        std::this_thread::sleep_for(150ms);
        ExecutionResult r;
        r.stdout_text = "ASSERT_OK 1\n";
        return r;
    }
    bool available() const override { return true; }
    std::string name() const override { return "slow"; }
};

}  // namespace

TEST(Service, Health)
{
    Service svc(build_index(fixture("toy")), transcript_backend(), {});
    const auto r = svc.handle("GET", "/api/v1/health", "");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body["status"], "ok");
    EXPECT_EQ(r.body["indexVersion"], kIndexFormatVersion);
}

TEST(Service, SearchIsAFacadeOverTheLibrary)
{
    const auto ix = build_index(fixture("matrix"));
    Service svc(ix, transcript_backend(), {});
    const auto r = svc.handle("POST", "/api/v1/search", R"j({"mql": "Matrix(add(Matrix):Matrix)"})j");
    ASSERT_EQ(r.status, 200);
    const auto lib = search_mql(ix, parse_mql("Matrix(add(Matrix):Matrix)"), SearchConstraints{});
    ASSERT_EQ(r.body["hits"].size(), lib.size());
    for (std::size_t i = 0; i < lib.size(); ++i) {
        const auto& h = r.body["hits"][i];
        EXPECT_EQ(h["id"], lib[i].id.value);
        EXPECT_EQ(h["score"].get<double>(), lib[i].score);
        EXPECT_TRUE(h["metrics"].contains("cyclomatic"));
    }
}

TEST(Service, SearchErrors)
{
    Service svc(build_index(fixture("toy")), transcript_backend(), {});
    auto r = svc.handle("POST", "/api/v1/search", R"({"mql": "Matrix(add("})");
    EXPECT_EQ(r.status, 400);
    EXPECT_EQ(r.body["error"]["code"], "SyntaxError");
    EXPECT_EQ(r.body["error"]["position"], 11);
    EXPECT_EQ(svc.handle("POST", "/api/v1/search", R"({"mql": "Stack", "terms": ["stack"]})").status, 422);
    EXPECT_EQ(svc.handle("POST", "/api/v1/search", R"({})").status, 422);
    EXPECT_EQ(svc.handle("POST", "/api/v1/search", "{not json").status, 400);
    EXPECT_EQ(svc.handle("POST", "/api/v1/search", R"({"terms": ["stack"], "constraints": {"maxResults": 0}})").status,
              422);
    EXPECT_EQ(svc.handle("GET", "/api/v1/nope", "").status, 404);
}

TEST(Service, KeywordSearchExcludesInterfaces)
{
    Service svc(build_index(fixture("kinds")), transcript_backend(), {});
    const auto all = svc.handle("POST", "/api/v1/search", R"({"terms": ["shape"]})");
    ASSERT_EQ(all.status, 200);
    ASSERT_FALSE(all.body["hits"].empty());
    EXPECT_EQ(all.body["hits"][0]["kind"], "INTERFACE");
    const auto r =
        svc.handle("POST", "/api/v1/search", R"({"terms": ["shape"], "constraints": {"excludeKinds": ["interface"]}})");
    ASSERT_EQ(r.status, 200);
    for (const auto& h : r.body["hits"]) {
        EXPECT_NE(h["kind"], "INTERFACE");
    }
}

TEST(Service, HarvestJobMatchesLibraryRun)
{
    const auto ix = build_index(fixture("matrix"));
    Service svc(ix, transcript_backend(), {});
    const auto test = read_file(fixture("matrix_test.cpp").string());
    const auto submit = svc.handle("POST", "/api/v1/harvest", Json{{"testSource", test}}.dump());
    ASSERT_EQ(submit.status, 202);
    const auto rec = wait_terminal(svc, submit.body["jobId"]);
    ASSERT_EQ(rec.state, JobState::Done) << rec.error.value_or("");
    ASSERT_TRUE(rec.result);
    auto direct_backend = ScriptedBackend::from_file(fixture("transcripts/matrix.json").string());
    const auto direct = run_harvest(test, ix, HarvestConfig{}, direct_backend);
    EXPECT_EQ(rec.result->passing, direct.passing);
    EXPECT_EQ(rec.result->outcomes, direct.outcomes);
    EXPECT_EQ(rec.tested, 6);
    EXPECT_EQ(rec.total, 6);
    EXPECT_TRUE(rec.finished_at);
}

TEST(Service, HarvestFailuresAreJobStates)
{
    Service svc(build_index(fixture("matrix")), transcript_backend(), {});
    const auto submit =
        svc.handle("POST", "/api/v1/harvest", R"({"testSource": "void t() { int x = 1; assert(x == 1); }"})");
    ASSERT_EQ(submit.status, 202);
    const auto rec = wait_terminal(svc, submit.body["jobId"]);
    EXPECT_EQ(rec.state, JobState::Failed);
    EXPECT_NE(rec.error->find("NoClassUnderTest"), std::string::npos);
    EXPECT_FALSE(rec.result);

    EXPECT_EQ(svc.handle("GET", "/api/v1/harvest/19700101T000000Z-0000", "").status, 404);
    EXPECT_EQ(svc.handle("POST", "/api/v1/harvest", R"({"testSource": ""})").status, 422);
    EXPECT_EQ(svc.handle("POST", "/api/v1/harvest", R"({"testSource": "x", "config": {"parallelism": 0}})").status,
              422);
}

TEST(Service, ProgressAdvancesMonotonically)
{
    ServiceOptions opts;
    opts.global_parallelism = 1;
    Service svc(build_index(fixture("matrix")), std::make_shared<SlowBackend>(), opts);
    const auto submit = svc.handle("POST", "/api/v1/harvest",
                                   Json{{"testSource", read_file(fixture("matrix_test.cpp").string())}}.dump());
    const std::string id = submit.body["jobId"];
    int last_tested = -1;
    int last_state = 0;
    std::set<std::string> seen_states;
    for (int i = 0; i < 400; ++i) {
        const auto rec = svc.handle("GET", "/api/v1/harvest/" + id, "").body.get<JobRecord>();
        EXPECT_GE(rec.tested, last_tested);
        EXPECT_GE(static_cast<int>(rec.state), last_state);
        last_tested = rec.tested;
        last_state = static_cast<int>(rec.state);
        seen_states.insert(std::string(to_string(rec.state)));
        if (is_terminal(rec.state)) {
            break;
        }
        std::this_thread::sleep_for(20ms);
    }
    EXPECT_EQ(last_state, static_cast<int>(JobState::Done));
    EXPECT_TRUE(seen_states.count("TESTING"));
}

TEST(Service, ComponentsAndGroupPicture)
{
    const auto ix = build_index(fixture("polynomial"));
    Service svc(ix, transcript_backend(), {});
    const auto& first = ix.components.begin()->second;
    const auto c = svc.handle("GET", "/api/v1/components/" + first.id.value, "");
    ASSERT_EQ(c.status, 200);
    EXPECT_EQ(c.body["record"]["source"], first.source);
    EXPECT_EQ(c.body["metrics"]["loc"], first.metrics.loc);
    EXPECT_EQ(svc.handle("GET", "/api/v1/components/nope", "").status, 404);

    const auto g = svc.handle("POST", "/api/v1/group-picture", R"({"mql": "Polynomial", "threshold": 0.5})");
    ASSERT_EQ(g.status, 200);
    EXPECT_EQ(g.body["skeleton"],
              "class Polynomial {\npublic:\n    Polynomial add(Polynomial) { }\n    std::string toString() { }\n"
              "    int getDegree() { }\n};\n");

    const auto one = svc.handle("POST", "/api/v1/group-picture",
                                Json{{"ids", {first.id.value}}, {"threshold", 1.0}}.dump());
    ASSERT_EQ(one.status, 200);
    std::size_t non_ctor = 0;
    for (const auto& m : first.iface.methods) {
        non_ctor += m.is_constructor ? 0 : 1;
    }
    EXPECT_EQ(one.body["groupPicture"]["members"].size(), non_ctor);

    EXPECT_EQ(svc.handle("POST", "/api/v1/group-picture", R"({"ids": ["nope"]})").status, 404);
    EXPECT_EQ(svc.handle("POST", "/api/v1/group-picture", R"({"ids": []})").status, 422);
    EXPECT_EQ(svc.handle("POST", "/api/v1/group-picture", R"({"mql": "Zebra"})").status, 422);
}

TEST(Service, JobsSurviveRestart)
{
    TempDir dir;
    const auto ix = build_index(fixture("matrix"));
    std::string done_id;
    {
        ServiceOptions opts;
        opts.index_dir = dir.path;
        Service svc(ix, transcript_backend(), opts);
        done_id = svc.handle("POST", "/api/v1/harvest",
                             Json{{"testSource", read_file(fixture("matrix_test.cpp").string())}}.dump())
                      .body["jobId"];
        wait_terminal(svc, done_id);
    }
    // Simulate a crash in the middle of a job.
    JobRecord inflight;
    inflight.job_id = "20260101T000000Z-inflight";
    inflight.state = JobState::Testing;
    inflight.submitted_at = "2026-01-01T00:00:00Z";
    {
        std::ofstream log(dir.path / "jobs.jsonl", std::ios::app);
        log << Json(inflight).dump() << "\n" << "{\"jobId\": \"torn";
    }
    ServiceOptions opts;
    opts.index_dir = dir.path;
    Service svc(ix, transcript_backend(), opts);
    const auto done = svc.handle("GET", "/api/v1/harvest/" + done_id, "").body.get<JobRecord>();
    EXPECT_EQ(done.state, JobState::Done);
    EXPECT_EQ(done.result->passing.size(), 2u);
    const auto failed = svc.handle("GET", "/api/v1/harvest/" + inflight.job_id, "").body.get<JobRecord>();
    EXPECT_EQ(failed.state, JobState::Failed);
    EXPECT_EQ(failed.error, std::string(JobStore::kRestartMessage));
}

TEST(JobStoreTest, RejectsBackwardTransitions)
{
    JobStore store;
    const auto r = store.create();
    store.update(r.job_id, [](JobRecord& j) { j.state = JobState::Searching; });
    EXPECT_THROW(store.update(r.job_id, [](JobRecord& j) { j.state = JobState::Extracting; }), InvalidArgument);
    EXPECT_THROW(store.update(r.job_id, [](JobRecord& j) { j.state = JobState::Done; }), InvalidArgument);
    store.update(r.job_id, [](JobRecord& j) { j.state = JobState::Failed; });
    EXPECT_THROW(store.update(r.job_id, [](JobRecord& j) { j.state = JobState::Testing; }), InvalidArgument);
}

TEST(Service, RealHttpRoundTrip)
{
    Service svc(build_index(fixture("toy")), transcript_backend(), {});
    const int port = svc.listen_background("127.0.0.1");
    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/api/v1/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    EXPECT_EQ(Json::parse(health->body)["status"], "ok");
    auto bad = client.Post("/api/v1/search", R"({"mql": "Stack("})", "application/json");
    ASSERT_TRUE(bad);
    EXPECT_EQ(bad->status, 400);
    EXPECT_EQ(client.Get("/api/v1/harvest/unknown")->status, 404);
    svc.stop();
}
