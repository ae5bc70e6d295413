#pragma once

#include <nlohmann/json.hpp>

#include "tdsearch/analysis/group_picture.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/core/types.hpp"
#include "tdsearch/extractor/test_inference.hpp"
#include "tdsearch/harvester/harvester.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/workspace/workspace.hpp"
#include "tdsearch/mql/mql.hpp"

namespace tds {

using Json = nlohmann::json;

void to_json(Json& j, const ComponentId& v);
void from_json(const Json& j, ComponentId& v);
void to_json(Json& j, const TypeName& v);
void from_json(const Json& j, TypeName& v);
void to_json(Json& j, const TypeRef& v);
void from_json(const Json& j, TypeRef& v);
void to_json(Json& j, const MethodSignature& v);
void from_json(const Json& j, MethodSignature& v);
void to_json(Json& j, const InterfaceSpec& v);
void from_json(const Json& j, InterfaceSpec& v);
void to_json(Json& j, const HalsteadMetrics& v);
void from_json(const Json& j, HalsteadMetrics& v);
void to_json(Json& j, const MetricsReport& v);
void from_json(const Json& j, MetricsReport& v);
void to_json(Json& j, const ComponentRecord& v);
void from_json(const Json& j, ComponentRecord& v);
void to_json(Json& j, const CanonicalSignature& v);
void from_json(const Json& j, CanonicalSignature& v);
void to_json(Json& j, const MethodPattern& v);
void from_json(const Json& j, MethodPattern& v);
void to_json(Json& j, const MqlQuery& v);
void from_json(const Json& j, MqlQuery& v);
void to_json(Json& j, const GroupMember& v);
void from_json(const Json& j, GroupMember& v);
void to_json(Json& j, const GroupPicture& v);
void from_json(const Json& j, GroupPicture& v);
void to_json(Json& j, const TestCaseSpec& v);
void from_json(const Json& j, TestCaseSpec& v);
void to_json(Json& j, const Verdict& v);
void from_json(const Json& j, Verdict& v);
void to_json(Json& j, const CandidateOutcome& v);
void from_json(const Json& j, CandidateOutcome& v);
void to_json(Json& j, const HarvestResult& v);
void from_json(const Json& j, HarvestResult& v);
void to_json(Json& j, const HarvestConfig& v);
/// Applies the keys present in `j` on top of `v`.
void merge_config(const Json& j, HarvestConfig& v);
void to_json(Json& j, const ExecutionResult& v);
void to_json(Json& j, const IndexManifest& v);
void to_json(Json& j, const SearchHit& v);
void to_json(Json& j, const ResolutionStep& v);
void to_json(Json& j, const ResolutionPlan& v);
void to_json(Json& j, const Recommendation& v);

/// `{code, message}` plus `position` for syntax errors.
Json error_json(const Error& e);

/// Reads a whole file; throws IoError.
std::string read_file(const std::string& path);

/// Writes `data` to `path` through a temporary file and rename; throws IoError.
void write_file_atomic(const std::string& path, const std::string& data);

}  // namespace tds
