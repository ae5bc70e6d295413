#include "tdsearch/analysis/group_picture.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/extractor/scan.hpp"

namespace tds {

namespace {

struct Tally {
    CanonicalSignature canonical;
    int support = 0;
    std::map<std::string, std::pair<int, MethodSignature>> spellings;
};

}  // namespace

GroupPicture group_picture(const std::vector<InterfaceSpec>& candidates, double threshold, const TypeName& name)
{
    GroupPicture gp;
    gp.class_name = name;
    gp.sample_size = static_cast<int>(candidates.size());
    if (candidates.empty()) {
        return gp;
    }

    std::map<std::string, Tally> tallies;
    for (const auto& c : candidates) {
        std::set<std::string> seen;
        for (const auto& m : c.methods) {
            if (m.is_constructor) {
                continue;
            }
            const auto canon = canonicalize_signature(m);
            const auto key = canon.key();
            auto& t = tallies[key];
            t.canonical = canon;
            if (seen.insert(key).second) {
                ++t.support;
            }
            auto& s = t.spellings[m.spelling()];
            ++s.first;
            s.second = m;
        }
    }

    const double n = static_cast<double>(candidates.size());
    for (auto& [key, t] : tallies) {
        const double support = t.support / n;
        if (support + 1e-12 < threshold) {
            continue;
        }
        // std::map iterates spellings in ascending order, so the first
        // maximum is the lexicographically least among the most frequent.
        const auto* best = &*t.spellings.begin();
        for (const auto& s : t.spellings) {
            if (s.second.first > best->second.first) {
                best = &s;
            }
        }
        gp.members.push_back({t.canonical, support, best->second.second});
    }
    std::sort(gp.members.begin(), gp.members.end(), [](const GroupMember& a, const GroupMember& b) {
        if (a.support != b.support) {
            return a.support > b.support;
        }
        if (a.signature.name != b.signature.name) {
            return a.signature.name < b.signature.name;
        }
        return a.signature.key() < b.signature.key();
    });
    return gp;
}

std::string render_skeleton(const GroupPicture& gp)
{
    std::string out = "class " + gp.class_name.simple + " {\n";
    if (!gp.members.empty()) {
        out += "public:\n";
    }
    for (const auto& m : gp.members) {
        const auto& sig = m.display;
        out += "    " + render_cpp_type(sig.returns) + " " + sig.name + "(";
        for (std::size_t i = 0; i < sig.params.size(); ++i) {
            out += (i ? ", " : "") + render_cpp_type(sig.params[i]);
        }
        out += ") { }\n";
    }
    out += "};\n";
    return out;
}

}  // namespace tds
