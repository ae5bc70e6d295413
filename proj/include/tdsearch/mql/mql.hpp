#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdsearch/core/types.hpp"

namespace tds {

/// Grammar version recorded in index manifests.
inline constexpr int kMqlVersion = 1;

/// Method query: `name(T1,T2,...):R`. An absent return means ANY.
struct MethodPattern {
    std::string name;
    std::vector<std::string> params;
    bool ellipsis = false;  // trailing `...`
    std::optional<std::string> returns;

    bool operator==(const MethodPattern&) const = default;
};

struct MqlQuery {
    std::string class_name;
    std::vector<MethodPattern> methods;
    std::map<std::string, std::string> filters;  // keys: kind, lang, path

    bool operator==(const MqlQuery&) const = default;
};

/// query  := namePat [ "(" method { ";" method } ")" ] { filter }
/// method := namePat "(" [ typePat { "," typePat } [ "," "..." ] | "..." ] ")" [ ":" typePat ]
/// filter := key ":" word
/// Throws MqlSyntaxError with a 0-based offset and the expected-token set.
MqlQuery parse_mql(std::string_view text);

/// Canonical single-line form; parse_mql(print_mql(q)) == q.
std::string print_mql(const MqlQuery& q);

/// Case-insensitive glob with `*` wildcards.
bool glob_match(std::string_view pattern, std::string_view text);

struct MatchResult {
    bool matched = false;
    double score = 0.0;
    /// (query method index, candidate method index) pairs.
    std::vector<std::pair<std::size_t, std::size_t>> mapping;
};

/// Maximum injective assignment of query methods to candidate methods
/// (constructors are never assigned). With an empty method list the score is
/// 1 when the class name pattern matches and 0 otherwise.
MatchResult match_interface(const MqlQuery& q, const InterfaceSpec& iface);

/// Lowercased simple names of the candidate class and the queried class.
/// A candidate type naming its own class is compatible with a pattern
/// naming the queried class.
struct SelfType {
    std::string candidate;
    std::string query;
};

bool method_compatible(const MethodPattern& p, const MethodSignature& m, const SelfType& self = {});

}  // namespace tds
