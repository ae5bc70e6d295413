#include "tdsearch/io/json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "tdsearch/core/error.hpp"

namespace tds {

void to_json(Json& j, const ComponentId& v) { j = v.value; }
void from_json(const Json& j, ComponentId& v) { v.value = j.get<std::string>(); }

void to_json(Json& j, const TypeName& v) { j = v.qualified(); }
void from_json(const Json& j, TypeName& v) { v = TypeName::parse_dotted(j.get<std::string>()); }

void to_json(Json& j, const TypeRef& v) { j = v.spelling(); }
void from_json(const Json& j, TypeRef& v) { v = TypeRef::from_spelling(j.get<std::string>()); }

void to_json(Json& j, const MethodSignature& v)
{
    j = Json{{"name", v.name}, {"params", v.params}, {"returns", v.returns}, {"isConstructor", v.is_constructor}};
}

void from_json(const Json& j, MethodSignature& v)
{
    j.at("name").get_to(v.name);
    j.at("params").get_to(v.params);
    j.at("returns").get_to(v.returns);
    v.is_constructor = j.value("isConstructor", false);
}

void to_json(Json& j, const InterfaceSpec& v)
{
    j = Json{{"className", v.class_name}, {"methods", v.methods}, {"kind", std::string(to_string(v.kind))}};
}

void from_json(const Json& j, InterfaceSpec& v)
{
    j.at("className").get_to(v.class_name);
    j.at("methods").get_to(v.methods);
    v.kind = component_kind_from_string(j.at("kind").get<std::string>());
}

void to_json(Json& j, const HalsteadMetrics& v)
{
    j = Json{{"n1", v.n1},
             {"n2", v.n2},
             {"N1", v.N1},
             {"N2", v.N2},
             {"vocabulary", v.vocabulary},
             {"length", v.length},
             {"volume", v.volume},
             {"difficulty", v.difficulty},
             {"effort", v.effort}};
}

void from_json(const Json& j, HalsteadMetrics& v)
{
    j.at("n1").get_to(v.n1);
    j.at("n2").get_to(v.n2);
    j.at("N1").get_to(v.N1);
    j.at("N2").get_to(v.N2);
    j.at("vocabulary").get_to(v.vocabulary);
    j.at("length").get_to(v.length);
    j.at("volume").get_to(v.volume);
    j.at("difficulty").get_to(v.difficulty);
    j.at("effort").get_to(v.effort);
}

void to_json(Json& j, const MetricsReport& v)
{
    j = Json{{"loc", v.loc}, {"cyclomatic", v.cyclomatic}, {"halstead", v.halstead}};
}

void from_json(const Json& j, MetricsReport& v)
{
    j.at("loc").get_to(v.loc);
    j.at("cyclomatic").get_to(v.cyclomatic);
    j.at("halstead").get_to(v.halstead);
}

void to_json(Json& j, const ComponentRecord& v)
{
    j = Json{{"id", v.id},         {"interface", v.iface},      {"source", v.source},
             {"path", v.path},     {"metrics", v.metrics},      {"contentHash", v.content_hash}};
}

void from_json(const Json& j, ComponentRecord& v)
{
    j.at("id").get_to(v.id);
    j.at("interface").get_to(v.iface);
    j.at("source").get_to(v.source);
    j.at("path").get_to(v.path);
    j.at("metrics").get_to(v.metrics);
    j.at("contentHash").get_to(v.content_hash);
}

void to_json(Json& j, const CanonicalSignature& v)
{
    j = Json{{"name", v.name}, {"arity", v.arity}, {"paramSimple", v.param_simple}, {"returnSimple", v.return_simple}};
}

void from_json(const Json& j, CanonicalSignature& v)
{
    j.at("name").get_to(v.name);
    j.at("arity").get_to(v.arity);
    j.at("paramSimple").get_to(v.param_simple);
    j.at("returnSimple").get_to(v.return_simple);
}

void to_json(Json& j, const MethodPattern& v)
{
    j = Json{{"name", v.name}, {"params", v.params}, {"ellipsis", v.ellipsis}};
    j["returns"] = v.returns ? Json(*v.returns) : Json(nullptr);
}

void from_json(const Json& j, MethodPattern& v)
{
    j.at("name").get_to(v.name);
    j.at("params").get_to(v.params);
    v.ellipsis = j.value("ellipsis", false);
    const auto& r = j.at("returns");
    v.returns = r.is_null() ? std::nullopt : std::optional<std::string>(r.get<std::string>());
}

void to_json(Json& j, const MqlQuery& v)
{
    j = Json{{"className", v.class_name}, {"methods", v.methods}, {"filters", v.filters}, {"text", print_mql(v)}};
}

void from_json(const Json& j, MqlQuery& v)
{
    j.at("className").get_to(v.class_name);
    j.at("methods").get_to(v.methods);
    j.at("filters").get_to(v.filters);
}

void to_json(Json& j, const GroupMember& v)
{
    j = Json{{"signature", v.signature}, {"support", v.support}, {"displaySignature", v.display}};
}

void from_json(const Json& j, GroupMember& v)
{
    j.at("signature").get_to(v.signature);
    j.at("support").get_to(v.support);
    j.at("displaySignature").get_to(v.display);
}

void to_json(Json& j, const GroupPicture& v)
{
    j = Json{{"className", v.class_name}, {"members", v.members}, {"sampleSize", v.sample_size}};
}

void from_json(const Json& j, GroupPicture& v)
{
    j.at("className").get_to(v.class_name);
    j.at("members").get_to(v.members);
    j.at("sampleSize").get_to(v.sample_size);
}

void to_json(Json& j, const TestCaseSpec& v)
{
    j = Json{{"source", v.source},
             {"inferredInterface", v.inferred_interface},
             {"cutName", v.cut_name},
             {"assertions", v.assertions}};
}

void from_json(const Json& j, TestCaseSpec& v)
{
    j.at("source").get_to(v.source);
    j.at("inferredInterface").get_to(v.inferred_interface);
    j.at("cutName").get_to(v.cut_name);
    j.at("assertions").get_to(v.assertions);
}

void to_json(Json& j, const Verdict& v) { j = std::string(to_string(v)); }
void from_json(const Json& j, Verdict& v) { v = verdict_from_string(j.get<std::string>()); }

void to_json(Json& j, const CandidateOutcome& v)
{
    j = Json{{"id", v.id}, {"verdict", v.verdict}, {"durationMs", v.duration_ms}, {"log", v.log}};
}

void from_json(const Json& j, CandidateOutcome& v)
{
    j.at("id").get_to(v.id);
    j.at("verdict").get_to(v.verdict);
    j.at("durationMs").get_to(v.duration_ms);
    j.at("log").get_to(v.log);
}

void to_json(Json& j, const HarvestResult& v)
{
    j = Json{{"testSpec", v.test_spec}, {"query", v.query}, {"outcomes", v.outcomes}, {"passing", v.passing}};
}

void from_json(const Json& j, HarvestResult& v)
{
    j.at("testSpec").get_to(v.test_spec);
    j.at("query").get_to(v.query);
    j.at("outcomes").get_to(v.outcomes);
    j.at("passing").get_to(v.passing);
}

void to_json(Json& j, const HarvestConfig& v)
{
    j = Json{{"maxCandidates", v.max_candidates},
             {"perCandidateTimeout", v.per_candidate_timeout},
             {"parallelism", v.parallelism},
             {"keepWorkDirs", v.keep_work_dirs}};
}

void merge_config(const Json& j, HarvestConfig& v)
{
    if (!j.is_object()) {
        throw InvalidArgument("config must be an object");
    }
    try {
        if (j.contains("maxCandidates")) {
            j.at("maxCandidates").get_to(v.max_candidates);
        }
        if (j.contains("perCandidateTimeout")) {
            j.at("perCandidateTimeout").get_to(v.per_candidate_timeout);
        }
        if (j.contains("parallelism")) {
            j.at("parallelism").get_to(v.parallelism);
        }
        if (j.contains("keepWorkDirs")) {
            j.at("keepWorkDirs").get_to(v.keep_work_dirs);
        }
    } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("bad config value: ") + e.what());
    }
    v.validate();
}

void to_json(Json& j, const ExecutionResult& v)
{
    j = Json{{"exitStatus", std::string(to_string(v.exit_status))},
             {"phase", std::string(to_string(v.phase))},
             {"stdout", v.stdout_text},
             {"stderr", v.stderr_text},
             {"durationMs", v.duration_ms}};
}

void to_json(Json& j, const SearchHit& v)
{
    j = Json{{"id", v.id},
             {"score", v.score},
             {"lexicalScore", v.lexical_score},
             {"interfaceScore", v.interface_score},
             {"matchedTerms", v.matched_terms}};
}

void to_json(Json& j, const ResolutionStep& v)
{
    j = Json{{"missingType", v.missing_type}, {"depth", v.depth}};
    if (v.resolved_by) {
        j["resolvedBy"] = *v.resolved_by;
    } else {
        j["resolvedBy"] = v.resolved() ? Json(nullptr) : Json("UNRESOLVED");
    }
    j["heuristic"] = v.heuristic ? Json(std::string(to_string(*v.heuristic))) : Json(nullptr);
}

void to_json(Json& j, const ResolutionPlan& v)
{
    j = Json{{"root", v.root}, {"steps", v.steps}, {"depthReached", v.depth_reached}};
}

void to_json(Json& j, const Recommendation& v)
{
    j = Json{{"trigger", std::string(to_string(v.trigger))},
             {"cudPath", v.cud_path},
             {"query", v.query},
             {"hits", v.hits},
             {"groupPicture", v.group_picture ? Json(*v.group_picture) : Json(nullptr)},
             {"createdAt", v.created_at}};
}

Json error_json(const Error& e)
{
    Json err{{"code", e.code()}, {"message", e.what()}};
    if (const auto* syn = dynamic_cast<const MqlSyntaxError*>(&e)) {
        err["position"] = syn->position();
        err["expected"] = syn->expected();
    } else if (const auto* un = dynamic_cast<const UnparsableSource*>(&e)) {
        err["position"] = Json{{"line", un->position().line}, {"column", un->position().column}};
    }
    return Json{{"error", err}};
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) {
        throw IoError("error reading " + path);
    }
    return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& data)
{
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp);
        }
        out << data;
        out.flush();
        if (!out) {
            throw IoError("error writing " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("cannot rename " + tmp + " to " + path);
    }
}

}  // namespace tds
