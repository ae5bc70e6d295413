#include "tdsearch/index/index.hpp"

#include <algorithm>
#include <cmath>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/core/clock.hpp"
#include "tdsearch/core/error.hpp"
#include "tdsearch/core/hash.hpp"
#include "tdsearch/extractor/extractor.hpp"
#include "tdsearch/extractor/lexer.hpp"
#include "tdsearch/io/json.hpp"

namespace tds {

namespace fs = std::filesystem;

std::string_view to_string(Field f)
{
    switch (f) {
    case Field::Name:
        return "NAME";
    case Field::Methods:
        return "METHODS";
    case Field::Text:
        return "TEXT";
    }
    return "TEXT";
}

Field field_from_string(std::string_view s)
{
    if (s == "NAME") {
        return Field::Name;
    }
    if (s == "METHODS") {
        return Field::Methods;
    }
    if (s == "TEXT") {
        return Field::Text;
    }
    throw InvalidArgument("unknown field '" + std::string(s) + "'");
}

const ComponentRecord* CorpusIndex::find(const ComponentId& id) const
{
    const auto it = components.find(id);
    return it == components.end() ? nullptr : &it->second;
}

double ScoringConfig::weight(Field f) const
{
    switch (f) {
    case Field::Name:
        return name_weight;
    case Field::Methods:
        return methods_weight;
    case Field::Text:
        return text_weight;
    }
    return text_weight;
}

namespace {

void add_terms(std::map<std::string, int>& tf, std::string_view identifier)
{
    for (auto& t : tokenize_identifier(identifier)) {
        ++tf[t];
    }
}

void index_component(CorpusIndex& ix, const ComponentRecord& rec)
{
    std::map<std::string, int> name_tf;
    std::map<std::string, int> methods_tf;
    std::map<std::string, int> text_tf;
    add_terms(name_tf, rec.iface.class_name.simple);
    for (const auto& m : rec.iface.methods) {
        if (!m.is_constructor) {
            add_terms(methods_tf, m.name);
        }
    }
    for (const auto& tok : lex(rec.source).tokens) {
        if (tok.is_ident() && !is_cpp_keyword(tok.text)) {
            add_terms(text_tf, tok.text);
        }
    }
    for (const auto& [field, tf] : {std::pair{Field::Name, &name_tf}, std::pair{Field::Methods, &methods_tf},
                                    std::pair{Field::Text, &text_tf}}) {
        for (const auto& [term, n] : *tf) {
            ix.postings[term].push_back({rec.id, field, n});
        }
    }
    ix.signature_index[to_lower(rec.iface.class_name.simple)].push_back(rec.id);
}

struct Scored {
    double lexical = 0.0;
    std::set<std::string> terms;
};

std::map<ComponentId, Scored> lexical_scores(const CorpusIndex& ix, const std::vector<std::string>& terms,
                                             const ScoringConfig& scoring)
{
    std::map<ComponentId, Scored> out;
    const double n = static_cast<double>(ix.components.size());
    for (const auto& term : terms) {
        const auto it = ix.postings.find(term);
        if (it == ix.postings.end() || it->second.empty()) {
            continue;
        }
        std::map<ComponentId, double> best;
        for (const auto& p : it->second) {
            auto& w = best[p.id];
            w = std::max(w, scoring.weight(p.field));
        }
        const double idf = std::log(1.0 + n / static_cast<double>(best.size()));
        for (const auto& [id, w] : best) {
            auto& s = out[id];
            s.lexical += idf * w;
            s.terms.insert(term);
        }
    }
    return out;
}

std::vector<std::string> query_terms(const std::vector<std::string>& raw)
{
    std::vector<std::string> out;
    for (const auto& r : raw) {
        for (auto& t : tokenize_identifier(r)) {
            if (std::find(out.begin(), out.end(), t) == out.end()) {
                out.push_back(std::move(t));
            }
        }
    }
    return out;
}

std::vector<SearchHit> finish(const CorpusIndex& ix, std::vector<SearchHit> hits, const SearchConstraints& c)
{
    if (c.max_results < 1) {
        throw InvalidArgument("maxResults must be at least 1");
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.id < b.id;
    });
    std::vector<SearchHit> out;
    std::set<std::string> seen_hashes;
    for (auto& h : hits) {
        const auto* rec = ix.find(h.id);
        if (!rec || c.exclude_kinds.count(rec->iface.kind)) {
            continue;
        }
        if (c.path_prefix && !rec->path.starts_with(*c.path_prefix)) {
            continue;
        }
        if (c.dedupe && !seen_hashes.insert(rec->content_hash).second) {
            continue;
        }
        out.push_back(std::move(h));
        if (static_cast<int>(out.size()) == c.max_results) {
            break;
        }
    }
    return out;
}

bool passes_filters(const MqlQuery& q, const ComponentRecord& rec, const IndexManifest& m)
{
    for (const auto& [key, value] : q.filters) {
        if (key == "kind" && to_lower(value) != to_lower(to_string(rec.iface.kind))) {
            return false;
        }
        if (key == "lang" && to_lower(value) != to_lower(m.subject_language)) {
            return false;
        }
        if (key == "path" && !rec.path.starts_with(value)) {
            return false;
        }
    }
    return true;
}

}  // namespace

CorpusIndex build_index(const fs::path& corpus_root)
{
    std::error_code ec;
    if (!fs::is_directory(corpus_root, ec)) {
        throw IoError("corpus root is not a readable directory: " + corpus_root.string());
    }
    std::vector<std::string> files;
    fs::recursive_directory_iterator it(corpus_root, fs::directory_options::none, ec);
    if (ec) {
        throw IoError("cannot list " + corpus_root.string() + ": " + ec.message());
    }
    for (const auto& entry : it) {
        if (entry.is_regular_file() && is_subject_source_path(entry.path().string())) {
            files.push_back(fs::relative(entry.path(), corpus_root).generic_string());
        }
    }
    std::sort(files.begin(), files.end());

    CorpusIndex ix;
    ix.manifest.corpus_root = fs::weakly_canonical(corpus_root).generic_string();
    ix.manifest.hash_algorithm = std::string(kHashAlgorithm);
    ix.manifest.created_at = now_iso_utc();
    ix.manifest.subject_language = std::string(kSubjectLanguage);

    for (const auto& rel : files) {
        const std::string text = read_file((corpus_root / rel).string());
        std::vector<ComponentRecord> recs;
        try {
            recs = extract_components(text, rel);
        } catch (const UnparsableSource& e) {
            ix.manifest.skipped.push_back({rel, e.what(), e.position().line, e.position().column});
            continue;
        }
        for (auto& rec : recs) {
            const std::string base = rec.id.value;
            for (int k = 0; ix.components.count(rec.id); ++k) {
                rec.id.value = base + "-" + sha256_hex(rel + "#" + std::to_string(k)).substr(0, 8);
            }
            index_component(ix, rec);
            ix.components.emplace(rec.id, std::move(rec));
        }
    }
    if (ix.components.empty()) {
        throw EmptyCorpus("no components extracted under " + corpus_root.string());
    }
    for (auto& [term, list] : ix.postings) {
        std::sort(list.begin(), list.end());
    }
    for (auto& [name, ids] : ix.signature_index) {
        std::sort(ids.begin(), ids.end());
    }
    ix.manifest.component_count = static_cast<int>(ix.components.size());
    return ix;
}

std::vector<SearchHit> search_keyword(const CorpusIndex& ix, const std::vector<std::string>& terms,
                                      const SearchConstraints& c, const ScoringConfig& scoring)
{
    const auto tokens = query_terms(terms);
    if (tokens.empty()) {
        throw InvalidArgument("no search terms after tokenization");
    }
    std::vector<SearchHit> hits;
    for (auto& [id, s] : lexical_scores(ix, tokens, scoring)) {
        hits.push_back({id, s.lexical, s.lexical, 0.0, {s.terms.begin(), s.terms.end()}});
    }
    return finish(ix, std::move(hits), c);
}

std::vector<SearchHit> search_mql(const CorpusIndex& ix, const MqlQuery& q, const SearchConstraints& c,
                                  const ScoringConfig& scoring)
{
    std::set<ComponentId> pool;
    for (const auto& [name, ids] : ix.signature_index) {
        if (glob_match(q.class_name, name)) {
            pool.insert(ids.begin(), ids.end());
        }
    }
    std::vector<std::string> method_names;
    for (const auto& m : q.methods) {
        method_names.push_back(m.name);
    }
    const auto method_terms = query_terms(method_names);
    for (const auto& [id, s] : lexical_scores(ix, method_terms, scoring)) {
        pool.insert(id);
    }

    std::vector<std::string> all_terms = method_names;
    all_terms.insert(all_terms.begin(), q.class_name);
    const auto lexical = lexical_scores(ix, query_terms(all_terms), scoring);
    double max_lexical = 0.0;
    for (const auto& id : pool) {
        if (const auto it = lexical.find(id); it != lexical.end()) {
            max_lexical = std::max(max_lexical, it->second.lexical);
        }
    }

    std::vector<SearchHit> hits;
    for (const auto& id : pool) {
        const auto* rec = ix.find(id);
        if (!rec || !passes_filters(q, *rec, ix.manifest)) {
            continue;
        }
        SearchHit h;
        h.id = id;
        h.interface_score = match_interface(q, rec->iface).score;
        if (const auto it = lexical.find(id); it != lexical.end()) {
            h.lexical_score = it->second.lexical;
            h.matched_terms.assign(it->second.terms.begin(), it->second.terms.end());
        }
        const double norm = max_lexical > 0.0 ? h.lexical_score / max_lexical : 0.0;
        h.score = scoring.interface_blend * h.interface_score + scoring.lexical_blend * norm;
        hits.push_back(std::move(h));
    }
    return finish(ix, std::move(hits), c);
}

}  // namespace tds
