#include "tdsearch/analysis/metrics.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "tdsearch/core/hash.hpp"
#include "tdsearch/extractor/lexer.hpp"
#include "tdsearch/extractor/scan.hpp"

namespace tds {

namespace {

const std::set<std::string, std::less<>>& declaration_keywords()
{
    static const std::set<std::string, std::less<>> k = {
        "class",    "struct",   "union",    "enum",     "namespace", "using",     "typedef",  "template",
        "typename", "public",   "private",  "protected", "friend",   "virtual",   "override", "final",
        "explicit", "inline",   "static",   "extern",   "constexpr", "consteval", "constinit", "const",
        "volatile", "mutable",  "auto",     "void",     "bool",      "char",      "char8_t",  "char16_t",
        "char32_t", "wchar_t",  "short",    "int",      "long",      "float",     "double",   "signed",
        "unsigned", "register", "noexcept", "concept",  "requires",  "export",    "alignas",  "thread_local",
    };
    return k;
}

bool is_access_colon(const std::vector<Token>& toks, std::size_t i)
{
    return i > 0 && toks[i].text == ":" && toks[i - 1].is_ident() &&
           (toks[i - 1].text == "public" || toks[i - 1].text == "private" || toks[i - 1].text == "protected");
}

bool punct_at(const std::vector<Token>& toks, std::size_t i, std::string_view s)
{
    return i < toks.size() && toks[i].kind == TokenKind::Punct && toks[i].text == s;
}

bool type_like(const Token& t)
{
    if (t.kind == TokenKind::Punct) {
        return t.text == ">" || t.text == "~";
    }
    if (!t.is_ident()) {
        return false;
    }
    return !is_cpp_keyword(t.text) || declaration_keywords().count(t.text) != 0;
}

// Whether the identifier at `i` names a function at a call site (as opposed
// to a declarator or a definition header).
bool is_call_site(const std::vector<Token>& toks, std::size_t i)
{
    if (!punct_at(toks, i + 1, "(")) {
        return false;
    }
    if (i > 0) {
        const auto& p = toks[i - 1];
        if (p.kind == TokenKind::Punct) {
            const bool boundary = p.text == ";" || p.text == "{" || p.text == "}" || p.text == "::" ||
                                  is_access_colon(toks, i - 1);
            if (!boundary && !type_like(p)) {
                return true;
            }
        }
        if (type_like(p)) {
            return false;
        }
        if (p.is_ident() && is_cpp_keyword(p.text)) {
            return true;  // return f(x), new T(x), ...
        }
    }
    const auto close = find_matching(toks, i + 1);
    if (close == std::string::npos) {
        return true;
    }
    std::size_t q = close + 1;
    while (q < toks.size() && toks[q].is_ident() &&
           (toks[q].text == "const" || toks[q].text == "noexcept" || toks[q].text == "override" ||
            toks[q].text == "final")) {
        ++q;
    }
    return !(punct_at(toks, q, "{") || punct_at(toks, q, "->") || punct_at(toks, q, ":"));
}

}  // namespace

HalsteadMetrics derive_halstead(int n1, int n2, int N1, int N2)
{
    HalsteadMetrics h;
    h.n1 = n1;
    h.n2 = n2;
    h.N1 = N1;
    h.N2 = N2;
    h.vocabulary = n1 + n2;
    h.length = N1 + N2;
    h.volume = h.vocabulary > 0 ? h.length * std::log2(static_cast<double>(h.vocabulary)) : 0.0;
    h.difficulty = n2 > 0 ? (n1 / 2.0) * (static_cast<double>(N2) / n2) : 0.0;
    h.effort = h.difficulty * h.volume;
    return h;
}

MetricsReport compute_metrics(std::string_view source)
{
    auto lexed = lex(source);
    if (lexed.issue) {
        throw *lexed.issue;
    }
    std::vector<Token> toks;
    for (auto& t : lexed.tokens) {
        if (t.kind != TokenKind::Preprocessor) {
            toks.push_back(std::move(t));
        }
    }
    if (auto bad = check_balance(toks)) {
        throw *bad;
    }

    MetricsReport report;
    {
        std::istringstream in(strip_comments(source));
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r\f\v") != std::string::npos) {
                ++report.loc;
            }
        }
    }

    static const std::set<std::string, std::less<>> kDecisionWords = {"if", "for", "while", "case", "catch"};
    static const std::set<std::string, std::less<>> kDecisionSymbols = {"&&", "||", "?"};
    static const std::set<std::string, std::less<>> kPunctuation = {";", ",", "(", ")", "{", "}", "]"};

    std::set<std::string> operators;
    std::set<std::string> operands;
    int total_operators = 0;
    int total_operands = 0;

    for (std::size_t i = 0; i < toks.size(); ++i) {
        const auto& t = toks[i];
        if ((t.is_ident() && kDecisionWords.count(t.text)) ||
            (t.kind == TokenKind::Punct && kDecisionSymbols.count(t.text))) {
            ++report.cyclomatic;
        }

        if (t.kind == TokenKind::Punct) {
            if (kPunctuation.count(t.text) || is_access_colon(toks, i)) {
                continue;
            }
            operators.insert(t.text == "[" ? "[]" : t.text);
            ++total_operators;
            continue;
        }
        if (t.is_literal()) {
            operands.insert(t.text);
            ++total_operands;
            continue;
        }
        if (is_cpp_keyword(t.text)) {
            if (t.text == "true" || t.text == "false" || t.text == "nullptr" || t.text == "this") {
                operands.insert(t.text);
                ++total_operands;
            } else if (declaration_keywords().count(t.text) == 0) {
                operators.insert(t.text);
                ++total_operators;
            }
            continue;
        }
        if (is_call_site(toks, i)) {
            operators.insert(t.text);
            ++total_operators;
        } else {
            operands.insert(t.text);
            ++total_operands;
        }
    }

    report.halstead = derive_halstead(static_cast<int>(operators.size()), static_cast<int>(operands.size()),
                                      total_operators, total_operands);
    return report;
}

std::string content_hash(std::string_view source) { return sha256_hex(normalize_source(source)); }

}  // namespace tds
