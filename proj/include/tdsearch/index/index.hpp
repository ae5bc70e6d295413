#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tdsearch/core/types.hpp"
#include "tdsearch/mql/mql.hpp"

namespace tds {

inline constexpr int kIndexFormatVersion = 1;

enum class Field : std::uint8_t { Name, Methods, Text };

std::string_view to_string(Field f);
Field field_from_string(std::string_view s);

struct Posting {
    ComponentId id;
    Field field = Field::Text;
    int tf = 0;

    auto operator<=>(const Posting&) const = default;
};

/// A corpus file that could not be extracted.
struct SkipRecord {
    std::string path;
    std::string message;
    int line = 0;
    int column = 0;

    bool operator==(const SkipRecord&) const = default;
};

struct IndexManifest {
    int format_version = kIndexFormatVersion;
    std::string corpus_root;
    int component_count = 0;
    std::string hash_algorithm;
    std::string created_at;  // ISO-8601 UTC
    std::string subject_language;
    int mql_version = kMqlVersion;
    std::vector<SkipRecord> skipped;

    bool operator==(const IndexManifest&) const = default;
};

struct CorpusIndex {
    IndexManifest manifest;
    std::map<ComponentId, ComponentRecord> components;
    std::map<std::string, std::vector<Posting>> postings;
    std::map<std::string, std::vector<ComponentId>> signature_index;  // lowercased class simple name

    const ComponentRecord* find(const ComponentId& id) const;
    bool operator==(const CorpusIndex&) const = default;
};

/// Ranking constants. Field weights apply to lexical matches; the blend
/// combines interface and normalized lexical scores in search_mql.
struct ScoringConfig {
    double name_weight = 3.0;
    double methods_weight = 2.0;
    double text_weight = 1.0;
    double interface_blend = 0.6;
    double lexical_blend = 0.4;

    double weight(Field f) const;
};

struct SearchHit {
    ComponentId id;
    double score = 0.0;
    double lexical_score = 0.0;
    double interface_score = 0.0;
    std::vector<std::string> matched_terms;

    bool operator==(const SearchHit&) const = default;
};

struct SearchConstraints {
    bool dedupe = false;
    std::set<ComponentKind> exclude_kinds;
    int max_results = 20;
    std::optional<std::string> path_prefix;
};

/// Extracts every subject-language file under `corpus_root`. Unparsable
/// files become skip records. Throws IoError or EmptyCorpus.
CorpusIndex build_index(const std::filesystem::path& corpus_root);

std::vector<SearchHit> search_keyword(const CorpusIndex& ix, const std::vector<std::string>& terms,
                                      const SearchConstraints& c, const ScoringConfig& scoring = {});

std::vector<SearchHit> search_mql(const CorpusIndex& ix, const MqlQuery& q, const SearchConstraints& c,
                                  const ScoringConfig& scoring = {});

/// Writes manifest.json, components.jsonl, postings.json and signatures.json,
/// replacing `dir` atomically. Throws IoError.
void persist(const CorpusIndex& ix, const std::filesystem::path& dir);

/// Throws IoError or FormatVersionMismatch.
CorpusIndex load(const std::filesystem::path& dir);

}  // namespace tds
