#include "tdsearch/core/canonical.hpp"

#include <algorithm>
#include <cctype>

#include "tdsearch/core/hash.hpp"

namespace tds {

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_lower(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string to_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string canonical_type(const TypeRef& t)
{
    switch (t.kind) {
    case TypeKind::Void:
        return "void";
    case TypeKind::Unknown:
        return "*";
    case TypeKind::Named:
        break;
    }
    // Canonical input may already be "*"; keep it a wildcard.
    return t.name.simple.empty() ? "*" : to_lower(t.name.simple);
}

CanonicalSignature canonicalize_signature(const MethodSignature& sig)
{
    CanonicalSignature c;
    c.name = to_lower(sig.name);
    c.arity = static_cast<int>(sig.params.size());
    c.param_simple.reserve(sig.params.size());
    for (const auto& p : sig.params) {
        c.param_simple.push_back(canonical_type(p));
    }
    c.return_simple = canonical_type(sig.returns);
    return c;
}

CanonicalSignature canonicalize_signature(const CanonicalSignature& sig)
{
    CanonicalSignature c;
    c.name = to_lower(sig.name);
    c.arity = static_cast<int>(sig.param_simple.size());
    for (const auto& p : sig.param_simple) {
        c.param_simple.push_back(to_lower(p));
    }
    c.return_simple = sig.return_simple.empty() ? "*" : to_lower(sig.return_simple);
    return c;
}

std::vector<std::string> tokenize_identifier(std::string_view name)
{
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(to_lower(current));
            current.clear();
        }
    };

    for (std::size_t i = 0; i < name.size(); ++i) {
        const char c = name[i];
        if (!is_alnum(c)) {
            flush();
            continue;
        }
        if (!current.empty()) {
            const char prev = current.back();
            const bool next_lower = i + 1 < name.size() && is_lower(name[i + 1]);
            if ((is_lower(prev) && is_upper(c)) || (is_digit(prev) != is_digit(c)) ||
                (is_upper(prev) && is_upper(c) && next_lower)) {
                flush();
            }
        }
        current.push_back(c);
    }
    flush();
    return tokens;
}

std::string interface_fingerprint(const InterfaceSpec& iface)
{
    std::vector<std::string> keys;
    keys.reserve(iface.methods.size());
    for (const auto& m : iface.methods) {
        keys.push_back(canonicalize_signature(m).key());
    }
    std::sort(keys.begin(), keys.end());

    std::string material = "class:" + to_lower(iface.class_name.simple) + "\n";
    for (const auto& k : keys) {
        material += k;
        material += "\n";
    }
    return sha256_hex(material);
}

}  // namespace tds
