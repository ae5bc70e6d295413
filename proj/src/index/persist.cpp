#include <unistd.h>

#include "tdsearch/core/error.hpp"
#include "tdsearch/index/index.hpp"
#include "tdsearch/io/json.hpp"

namespace tds {

namespace fs = std::filesystem;

namespace {

const char* const kIndexFiles[] = {"manifest.json", "components.jsonl", "postings.json", "signatures.json"};

Json manifest_json(const IndexManifest& m)
{
    Json skipped = Json::array();
    for (const auto& s : m.skipped) {
        skipped.push_back({{"path", s.path}, {"message", s.message}, {"line", s.line}, {"column", s.column}});
    }
    return Json{{"formatVersion", m.format_version},     {"corpusRoot", m.corpus_root},
                {"componentCount", m.component_count},   {"hashAlgorithm", m.hash_algorithm},
                {"createdAt", m.created_at},             {"subjectLanguage", m.subject_language},
                {"mqlVersion", m.mql_version},           {"skipped", skipped}};
}

IndexManifest manifest_from_json(const Json& j)
{
    IndexManifest m;
    j.at("formatVersion").get_to(m.format_version);
    if (m.format_version != kIndexFormatVersion) {
        throw FormatVersionMismatch("index format version " + std::to_string(m.format_version) +
                                    " is not supported (expected " + std::to_string(kIndexFormatVersion) + ")");
    }
    j.at("corpusRoot").get_to(m.corpus_root);
    j.at("componentCount").get_to(m.component_count);
    j.at("hashAlgorithm").get_to(m.hash_algorithm);
    j.at("createdAt").get_to(m.created_at);
    j.at("subjectLanguage").get_to(m.subject_language);
    j.at("mqlVersion").get_to(m.mql_version);
    for (const auto& s : j.at("skipped")) {
        m.skipped.push_back({s.at("path").get<std::string>(), s.at("message").get<std::string>(),
                             s.at("line").get<int>(), s.at("column").get<int>()});
    }
    return m;
}

std::string dump_doc(const Json& j) { return j.dump(2) + "\n"; }

Json parse_file(const fs::path& p)
{
    try {
        return Json::parse(read_file(p.string()));
    } catch (const Json::exception& e) {
        throw IoError("malformed " + p.string() + ": " + e.what());
    }
}

void write_plain(const fs::path& p, const std::string& data)
{
    std::FILE* f = std::fopen(p.c_str(), "wb");
    if (!f) {
        throw IoError("cannot write " + p.string());
    }
    const bool ok = std::fwrite(data.data(), 1, data.size(), f) == data.size();
    if (std::fclose(f) != 0 || !ok) {
        throw IoError("error writing " + p.string());
    }
}

}  // namespace

void to_json(Json& j, const IndexManifest& v) { j = manifest_json(v); }

void persist(const CorpusIndex& ix, const fs::path& dir)
{
    std::error_code ec;
    const fs::path target = dir.has_filename() ? dir : dir.parent_path();
    const std::string stem = target.filename().string();
    const fs::path parent = target.parent_path().empty() ? fs::path(".") : target.parent_path();
    fs::create_directories(parent, ec);
    const fs::path tmp = parent / ("." + stem + ".tmp-" + std::to_string(::getpid()));
    const fs::path old = parent / ("." + stem + ".old-" + std::to_string(::getpid()));
    fs::remove_all(tmp, ec);
    if (!fs::create_directory(tmp, ec)) {
        throw IoError("cannot create " + tmp.string() + ": " + ec.message());
    }

    try {
        write_plain(tmp / "manifest.json", dump_doc(manifest_json(ix.manifest)));

        std::string lines;
        for (const auto& [id, rec] : ix.components) {
            lines += Json(rec).dump() + "\n";
        }
        write_plain(tmp / "components.jsonl", lines);

        Json postings = Json::object();
        for (const auto& [term, list] : ix.postings) {
            Json arr = Json::array();
            for (const auto& p : list) {
                arr.push_back(Json::array({p.id.value, std::string(to_string(p.field)), p.tf}));
            }
            postings[term] = std::move(arr);
        }
        write_plain(tmp / "postings.json", dump_doc(postings));
        write_plain(tmp / "signatures.json", dump_doc(Json(ix.signature_index)));

        // Non-index files (the service job log) survive a rebuild.
        if (fs::is_directory(target, ec)) {
            for (const auto& entry : fs::directory_iterator(target)) {
                const auto name = entry.path().filename().string();
                if (std::find(std::begin(kIndexFiles), std::end(kIndexFiles), name) == std::end(kIndexFiles)) {
                    fs::copy(entry.path(), tmp / name, fs::copy_options::recursive, ec);
                }
            }
        }
    } catch (...) {
        fs::remove_all(tmp, ec);
        throw;
    }

    if (fs::exists(target, ec)) {
        fs::remove_all(old, ec);
        fs::rename(target, old, ec);
        if (ec) {
            fs::remove_all(tmp, ec);
            throw IoError("cannot replace " + target.string() + ": " + ec.message());
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        throw IoError("cannot move index into " + target.string() + ": " + ec.message());
    }
    fs::remove_all(old, ec);
}

CorpusIndex load(const fs::path& dir)
{
    CorpusIndex ix;
    if (!fs::is_directory(dir)) {
        throw IoError("index directory not found: " + dir.string());
    }
    ix.manifest = manifest_from_json(parse_file(dir / "manifest.json"));

    const std::string lines = read_file((dir / "components.jsonl").string());
    std::size_t start = 0;
    while (start < lines.size()) {
        auto end = lines.find('\n', start);
        if (end == std::string::npos) {
            end = lines.size();
        }
        if (end > start) {
            try {
                auto rec = Json::parse(lines.substr(start, end - start)).get<ComponentRecord>();
                auto id = rec.id;
                ix.components.emplace(std::move(id), std::move(rec));
            } catch (const Json::exception& e) {
                throw IoError("malformed components.jsonl: " + std::string(e.what()));
            }
        }
        start = end + 1;
    }

    try {
        const Json postings = parse_file(dir / "postings.json");
        for (const auto& [term, arr] : postings.items()) {
            auto& list = ix.postings[term];
            for (const auto& p : arr) {
                list.push_back({ComponentId{p.at(0).get<std::string>()}, field_from_string(p.at(1).get<std::string>()),
                                p.at(2).get<int>()});
            }
        }
        ix.signature_index =
            parse_file(dir / "signatures.json").get<std::map<std::string, std::vector<ComponentId>>>();
    } catch (const Json::exception& e) {
        throw IoError("malformed index file: " + std::string(e.what()));
    }
    if (ix.manifest.component_count != static_cast<int>(ix.components.size())) {
        throw IoError("manifest componentCount does not match components.jsonl");
    }
    return ix;
}

}  // namespace tds
