#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "tdsearch/extractor/test_inference.hpp"
#include "tdsearch/harvester/execution.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/mql/mql.hpp"

namespace tds {

struct HarvestConfig {
    int max_candidates = 25;
    double per_candidate_timeout = 10.0;  // seconds
    int parallelism = 4;
    bool keep_work_dirs = false;
    std::filesystem::path work_root;  // empty: system temp directory
    CommandSpec command = CommandSpec::default_cpp();

    /// Throws InvalidArgument unless every knob is positive.
    void validate() const;
};

enum class Verdict : std::uint8_t { Pass, Fail, CompileError, RuntimeError, Timeout, AdaptError };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

struct CandidateOutcome {
    ComponentId id;
    Verdict verdict = Verdict::AdaptError;
    std::int64_t duration_ms = 0;
    std::string log;

    bool operator==(const CandidateOutcome&) const = default;
};

struct HarvestResult {
    TestCaseSpec test_spec;
    MqlQuery query;
    std::vector<CandidateOutcome> outcomes;  // ranked search order
    std::vector<ComponentId> passing;

    bool operator==(const HarvestResult&) const = default;
};

enum class HarvestStage : std::uint8_t { Extracting, Searching, Testing };

/// Optional progress callbacks; may be invoked from worker threads.
struct HarvestObserver {
    std::function<void(HarvestStage)> on_stage;
    std::function<void(int tested, int total)> on_progress;
};

/// Class simple name plus one pattern per non-constructor method. Types are
/// reduced to simple names; UNKNOWN returns become ANY.
MqlQuery query_from_interface(const InterfaceSpec& iface);

/// Rename-only adaptation: the candidate's class identifier becomes
/// iface.className, namespaces and their qualifiers are stripped. Also checks
/// that every constructor the test uses exists. Throws AdaptError.
std::string adapt_candidate(const ComponentRecord& candidate, const InterfaceSpec& iface);

/// Self-contained program including "candidate.hpp" that runs the test and
/// reports each assertion as `ASSERT_OK <n>` / `ASSERT_FAIL <n>`; exits 0 iff
/// all assertions pass.
std::string generate_harness(const TestCaseSpec& test);

/// Verdict from an execution result per the ASSERT protocol.
Verdict classify(const ExecutionResult& r);

/// Adapts, generates the harness and executes one candidate.
CandidateOutcome test_candidate(const ComponentRecord& candidate, const TestCaseSpec& test, const HarvestConfig& cfg,
                                ExecutionBackend& backend, const std::filesystem::path& work_dir);

/// Infer interface, search, then test every candidate in a bounded pool.
/// Throws NoClassUnderTest, AmbiguousCut, NoAssertions, BackendUnavailable.
HarvestResult run_harvest(std::string_view test_source, const CorpusIndex& ix, const HarvestConfig& cfg,
                          ExecutionBackend& backend, const HarvestObserver& observer = {});

}  // namespace tds
