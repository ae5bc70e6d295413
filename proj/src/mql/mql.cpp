#include "tdsearch/mql/mql.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <set>

#include "tdsearch/core/canonical.hpp"
#include "tdsearch/core/error.hpp"

namespace tds {

namespace {

const std::set<std::string, std::less<>> kFilterKeys = {"kind", "lang", "path"};

bool pattern_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '*'; }

bool word_char(char c)
{
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ';' && c != ',' && c != ':';
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    MqlQuery parse()
    {
        MqlQuery q;
        q.class_name = pattern("class name pattern");
        skip_ws();
        if (peek('(')) {
            ++pos_;
            q.methods.push_back(method());
            while (accept(';')) {
                q.methods.push_back(method());
            }
            expect(')', {";", ")"});
        }
        while (true) {
            skip_ws();
            if (at_end()) {
                break;
            }
            const std::size_t key_pos = pos_;
            std::string key;
            while (!at_end() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) {
                key += text_[pos_++];
            }
            if (key.empty()) {
                fail("unexpected character", {"filter key", "end of query"});
            }
            if (!kFilterKeys.count(key)) {
                pos_ = key_pos;
                fail("unknown filter key '" + key + "'", {"kind", "lang", "path"});
            }
            if (q.filters.count(key)) {
                pos_ = key_pos;
                fail("duplicate filter key '" + key + "'", {"filter key", "end of query"});
            }
            if (at_end() || text_[pos_] != ':') {
                fail("expected ':' after filter key", {":"});
            }
            ++pos_;
            std::string value;
            while (!at_end() && word_char(text_[pos_])) {
                value += text_[pos_++];
            }
            if (value.empty()) {
                fail("missing filter value", {"filter value"});
            }
            q.filters.emplace(std::move(key), std::move(value));
        }
        return q;
    }

private:
    MethodPattern method()
    {
        MethodPattern m;
        m.name = pattern("method name pattern");
        expect('(', {"("});
        skip_ws();
        if (!peek(')')) {
            if (accept_ellipsis()) {
                m.ellipsis = true;
            } else {
                m.params.push_back(pattern("type pattern"));
                while (accept(',')) {
                    if (accept_ellipsis()) {
                        m.ellipsis = true;
                        break;
                    }
                    m.params.push_back(pattern("type pattern"));
                }
            }
        }
        if (m.ellipsis) {
            expect(')', {")"});
        } else {
            expect(')', {",", ")"});
        }
        if (accept(':')) {
            m.returns = pattern("type pattern");
        }
        return m;
    }

    std::string pattern(const char* what)
    {
        skip_ws();
        const std::size_t start = pos_;
        while (!at_end() && pattern_char(text_[pos_])) {
            ++pos_;
        }
        if (start == pos_) {
            fail(std::string("expected ") + what, {what});
        }
        if (std::isdigit(static_cast<unsigned char>(text_[start]))) {
            pos_ = start;
            fail("pattern must not start with a digit", {what});
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    bool accept_ellipsis()
    {
        skip_ws();
        if (text_.substr(pos_, 3) == "...") {
            pos_ += 3;
            return true;
        }
        return false;
    }

    bool accept(char c)
    {
        skip_ws();
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c, std::vector<std::string> expected)
    {
        if (!accept(c)) {
            fail(at_end() ? "unexpected end of query" : "unexpected character", std::move(expected));
        }
    }

    [[noreturn]] void fail(const std::string& message, std::vector<std::string> expected)
    {
        std::string msg = message + " at offset " + std::to_string(pos_) + "; expected one of:";
        for (const auto& e : expected) {
            msg += " '" + e + "'";
        }
        throw MqlSyntaxError(msg, pos_, std::move(expected));
    }

    void skip_ws()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool peek(char c) const { return !at_end() && text_[pos_] == c; }
    bool at_end() const { return pos_ >= text_.size(); }

    std::string_view text_;
    std::size_t pos_ = 0;
};

bool type_compatible(std::string_view pattern, const TypeRef& t, const SelfType& self)
{
    const auto canon = canonical_type(t);
    if (pattern == "*" || canon == "*") {
        return true;
    }
    if (glob_match(pattern, canon)) {
        return true;
    }
    // The candidate's own class stands for the queried class: rename-only
    // adaptation rewrites one into the other.
    return !self.candidate.empty() && canon == self.candidate && to_lower(pattern) == self.query;
}

}  // namespace

MqlQuery parse_mql(std::string_view text) { return Parser(text).parse(); }

std::string print_mql(const MqlQuery& q)
{
    std::string out = q.class_name;
    if (!q.methods.empty()) {
        out += '(';
        for (std::size_t i = 0; i < q.methods.size(); ++i) {
            const auto& m = q.methods[i];
            out += (i ? "; " : "") + m.name + "(";
            for (std::size_t k = 0; k < m.params.size(); ++k) {
                out += (k ? "," : "") + m.params[k];
            }
            if (m.ellipsis) {
                out += m.params.empty() ? "..." : ",...";
            }
            out += ')';
            if (m.returns) {
                out += ":" + *m.returns;
            }
        }
        out += ')';
    }
    for (const auto& [k, v] : q.filters) {
        out += " " + k + ":" + v;
    }
    return out;
}

bool glob_match(std::string_view pattern, std::string_view text)
{
    auto lower = [](char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); };
    std::size_t p = 0;
    std::size_t t = 0;
    std::size_t star = std::string_view::npos;
    std::size_t resume = 0;
    while (t < text.size()) {
        if (p < pattern.size() && pattern[p] == '*') {
            star = p++;
            resume = t;
        } else if (p < pattern.size() && lower(pattern[p]) == lower(text[t])) {
            ++p;
            ++t;
        } else if (star != std::string_view::npos) {
            p = star + 1;
            t = ++resume;
        } else {
            return false;
        }
    }
    while (p < pattern.size() && pattern[p] == '*') {
        ++p;
    }
    return p == pattern.size();
}

bool method_compatible(const MethodPattern& p, const MethodSignature& m, const SelfType& self)
{
    if (m.is_constructor || !glob_match(p.name, m.name)) {
        return false;
    }
    if (p.ellipsis ? m.params.size() < p.params.size() : m.params.size() != p.params.size()) {
        return false;
    }
    for (std::size_t i = 0; i < p.params.size(); ++i) {
        if (!type_compatible(p.params[i], m.params[i], self)) {
            return false;
        }
    }
    return !p.returns || type_compatible(*p.returns, m.returns, self);
}

MatchResult match_interface(const MqlQuery& q, const InterfaceSpec& iface)
{
    MatchResult r;
    if (q.methods.empty()) {
        r.matched = glob_match(q.class_name, iface.class_name.simple);
        r.score = r.matched ? 1.0 : 0.0;
        return r;
    }
    // Kuhn augmenting paths, visiting query methods in query order and
    // candidates in declaration order.
    const std::size_t nq = q.methods.size();
    const std::size_t nc = iface.methods.size();
    const SelfType self{to_lower(iface.class_name.simple), to_lower(q.class_name)};
    std::vector<std::vector<bool>> compatible(nq, std::vector<bool>(nc));
    for (std::size_t qi = 0; qi < nq; ++qi) {
        for (std::size_t ci = 0; ci < nc; ++ci) {
            compatible[qi][ci] = method_compatible(q.methods[qi], iface.methods[ci], self);
        }
    }
    constexpr std::size_t kFree = static_cast<std::size_t>(-1);
    std::vector<std::size_t> owner(nc, kFree);
    std::vector<bool> seen;
    std::function<bool(std::size_t)> augment = [&](std::size_t qi) {
        for (std::size_t ci = 0; ci < nc; ++ci) {
            if (!compatible[qi][ci] || seen[ci]) {
                continue;
            }
            seen[ci] = true;
            if (owner[ci] == kFree || augment(owner[ci])) {
                owner[ci] = qi;
                return true;
            }
        }
        return false;
    };
    for (std::size_t qi = 0; qi < nq; ++qi) {
        seen.assign(nc, false);
        augment(qi);
    }
    for (std::size_t ci = 0; ci < nc; ++ci) {
        if (owner[ci] != kFree) {
            r.mapping.emplace_back(owner[ci], ci);
        }
    }
    std::sort(r.mapping.begin(), r.mapping.end());
    r.matched = r.mapping.size() == q.methods.size();
    r.score = r.matched ? 1.0 : static_cast<double>(r.mapping.size()) / static_cast<double>(q.methods.size());
    return r;
}

}  // namespace tds
