#include "tdsearch/extractor/extractor.hpp"

#include <algorithm>

#include "tdsearch/analysis/metrics.hpp"
#include "tdsearch/core/hash.hpp"
#include "tdsearch/extractor/scan.hpp"

namespace tds {

namespace {

bool punct(const std::vector<Token>& toks, std::size_t i, std::string_view s)
{
    return i < toks.size() && toks[i].kind == TokenKind::Punct && toks[i].text == s;
}

bool word(const std::vector<Token>& toks, std::size_t i, std::string_view s)
{
    return i < toks.size() && toks[i].is_ident() && toks[i].text == s;
}

bool plain_ident(const std::vector<Token>& toks, std::size_t i)
{
    return i < toks.size() && toks[i].is_ident() && !is_cpp_keyword(toks[i].text);
}

bool function_qualifier(const Token& t)
{
    return t.is_ident() && (t.text == "const" || t.text == "noexcept" || t.text == "override" ||
                            t.text == "final" || t.text == "mutable" || t.text == "volatile");
}

std::size_t skip_angle_list(const std::vector<Token>& toks, std::size_t open, std::size_t end)
{
    int depth = 0;
    for (std::size_t i = open; i < end; ++i) {
        const auto& t = toks[i];
        if (t.kind != TokenKind::Punct) {
            continue;
        }
        if (t.text == "<") {
            ++depth;
        } else if (t.text == ">") {
            --depth;
        } else if (t.text == ">>") {
            depth -= 2;
        } else if (t.text == "(" || t.text == "[" || t.text == "{") {
            auto close = find_matching(toks, i);
            if (close == std::string::npos || close >= end) {
                return end;
            }
            i = close;
        } else if (t.text == ";") {
            return i;
        }
        if (depth <= 0) {
            return i + 1;
        }
    }
    return end;
}

class UnitParser {
public:
    UnitParser(std::string_view src, std::vector<Token> toks) : src_(src), toks_(std::move(toks)) {}

    TranslationUnit run(std::vector<std::string> includes, std::optional<UnparsableSource> lex_issue)
    {
        out_.includes = std::move(includes);
        out_.failure = std::move(lex_issue);
        if (!out_.failure) {
            out_.failure = check_balance(toks_);
        }
        std::vector<std::string> ns;
        parse_range(0, toks_.size(), ns);
        return std::move(out_);
    }

private:
    void fail(const std::string& what, std::size_t at)
    {
        if (!out_.failure) {
            out_.failure.emplace(what, at < toks_.size() ? toks_[at].position() : SourcePosition{});
        }
    }

    // Skips one declaration or statement. A `{` directly after `)`, a function
    // qualifier, or a closing `}` (constructor initializer list) opens a body
    // that ends the declaration.
    std::size_t skip_declaration(std::size_t k, std::size_t end)
    {
        while (k < end) {
            const auto& t = toks_[k];
            if (t.kind == TokenKind::Punct) {
                if (t.text == ";") {
                    return k + 1;
                }
                if (t.text == "}") {
                    return k;
                }
                if (t.text == "(" || t.text == "[" || t.text == "{") {
                    const auto close = find_matching(toks_, k);
                    if (close == std::string::npos || close >= end) {
                        fail("unbalanced '" + t.text + "'", k);
                        return end;
                    }
                    const bool body = t.text == "{" && k > 0 &&
                                      (punct(toks_, k - 1, ")") || punct(toks_, k - 1, "}") ||
                                       function_qualifier(toks_[k - 1]));
                    k = close + 1;
                    if (body) {
                        return punct(toks_, k, ";") ? k + 1 : k;
                    }
                    continue;
                }
            }
            ++k;
        }
        return end;
    }

    void parse_range(std::size_t i, std::size_t end, std::vector<std::string>& ns)
    {
        std::optional<std::size_t> template_start;
        while (i < end) {
            const auto& t = toks_[i];
            if (punct(toks_, i, ";")) {
                ++i;
                continue;
            }
            if (punct(toks_, i, "}")) {
                ++i;
                continue;
            }
            if (word(toks_, i, "namespace") || (word(toks_, i, "inline") && word(toks_, i + 1, "namespace"))) {
                i = parse_namespace(word(toks_, i, "inline") ? i + 1 : i, end, ns);
                continue;
            }
            if (word(toks_, i, "extern") && i + 1 < end && toks_[i + 1].kind == TokenKind::String &&
                punct(toks_, i + 2, "{")) {
                const auto close = find_matching(toks_, i + 2);
                if (close == std::string::npos) {
                    fail("unclosed extern block", i + 2);
                    return;
                }
                parse_range(i + 3, close, ns);
                i = close + 1;
                continue;
            }
            if (word(toks_, i, "template") && punct(toks_, i + 1, "<")) {
                if (!template_start) {
                    template_start = i;
                }
                i = skip_angle_list(toks_, i + 1, end);
                continue;
            }
            if (word(toks_, i, "class") || word(toks_, i, "struct") || word(toks_, i, "union")) {
                i = parse_class(i, end, ns, template_start.value_or(i));
                template_start.reset();
                continue;
            }
            template_start.reset();
            if (t.is_ident() && is_assertion_name(t.text)) {
                out_.top_level_assertions = true;
            }
            if (word(toks_, i, "enum") || word(toks_, i, "using") || word(toks_, i, "typedef") ||
                word(toks_, i, "static_assert")) {
                i = skip_declaration(i, end);
                continue;
            }
            i = parse_function_or_skip(i, end);
        }
    }

    std::size_t parse_namespace(std::size_t i, std::size_t end, std::vector<std::string>& ns)
    {
        std::size_t j = i + 1;
        std::vector<std::string> names;
        while (j < end && !punct(toks_, j, "{") && !punct(toks_, j, "=") && !punct(toks_, j, ";")) {
            if (plain_ident(toks_, j)) {
                names.push_back(toks_[j].text);
            }
            ++j;
        }
        if (!punct(toks_, j, "{")) {
            return skip_declaration(i, end);
        }
        const auto close = find_matching(toks_, j);
        if (close == std::string::npos || close >= end) {
            fail("unclosed namespace", j);
            return end;
        }
        ns.insert(ns.end(), names.begin(), names.end());
        parse_range(j + 1, close, ns);
        ns.resize(ns.size() - names.size());
        return close + 1;
    }

    std::size_t parse_function_or_skip(std::size_t i, std::size_t end)
    {
        const std::size_t start = i;
        auto pt = parse_type(toks_, i);
        if (pt && plain_ident(toks_, pt->end)) {
            std::size_t n = pt->end;
            std::string owner;
            while (punct(toks_, n + 1, "::") && plain_ident(toks_, n + 2)) {
                owner = toks_[n].text;
                n += 2;
            }
            if (punct(toks_, n + 1, "(")) {
                const auto close = find_matching(toks_, n + 1);
                if (close != std::string::npos && close < end) {
                    std::size_t q = close + 1;
                    while (q < end && function_qualifier(toks_[q])) {
                        ++q;
                    }
                    if (punct(toks_, q, "{")) {
                        FunctionDefinition fn;
                        fn.name = toks_[n].text;
                        fn.owner = owner;
                        auto args = split_arguments(toks_, n + 1, close);
                        fn.param_count = args.size();
                        if (args.size() == 1 && args[0].size() == 1 && word(toks_, args[0].begin, "void")) {
                            fn.param_count = 0;
                        }
                        fn.returns_void = pt->type.kind == TypeKind::Void && !pt->pointer;
                        out_.functions.push_back(std::move(fn));
                    }
                }
            }
        }
        const auto next = skip_declaration(start, end);
        return next > start ? next : start + 1;
    }

    std::size_t parse_class(std::size_t i, std::size_t end, const std::vector<std::string>& ns, std::size_t span_start)
    {
        const bool is_struct = toks_[i].text != "class";
        std::size_t j = i + 1;
        while (punct(toks_, j, "[") && punct(toks_, j + 1, "[")) {
            const auto close = find_matching(toks_, j);
            j = close == std::string::npos ? j + 1 : close + 1;
        }
        if (!plain_ident(toks_, j)) {
            return skip_declaration(i, end);
        }
        TypeDeclaration decl;
        decl.name.simple = toks_[j].text;
        for (std::size_t k = 0; k < ns.size(); ++k) {
            decl.name.qualifier += (k == 0 ? "" : ".") + ns[k];
        }
        decl.namespaces = ns;
        decl.is_struct = is_struct;
        ++j;
        while (j < end && !punct(toks_, j, "{") && !punct(toks_, j, ";")) {
            if (punct(toks_, j, "(")) {
                return skip_declaration(i, end);
            }
            ++j;
        }
        if (!punct(toks_, j, "{")) {
            return j + 1;  // forward declaration or elaborated use
        }
        const auto close = find_matching(toks_, j);
        if (close == std::string::npos || close >= end) {
            fail("unclosed class body of '" + decl.name.simple + "'", j);
            return end;
        }
        parse_class_body(j + 1, close, decl, is_struct);

        std::size_t k = close + 1;
        while (k < end && !punct(toks_, k, ";") && !punct(toks_, k, "}")) {
            ++k;
        }
        decl.begin_offset = toks_[span_start].offset;
        decl.end_offset = punct(toks_, k, ";") ? toks_[k].end() : toks_[close].end();
        out_.types.push_back(std::move(decl));
        return punct(toks_, k, ";") ? k + 1 : k;
    }

    void parse_class_body(std::size_t k, std::size_t end, TypeDeclaration& decl, bool is_public)
    {
        for (std::size_t a = k; a < end; ++a) {
            if (toks_[a].is_ident() && is_assertion_name(toks_[a].text)) {
                decl.has_assertions = true;
                break;
            }
        }
        while (k < end) {
            if (punct(toks_, k, ";")) {
                ++k;
                continue;
            }
            if ((word(toks_, k, "public") || word(toks_, k, "private") || word(toks_, k, "protected")) &&
                punct(toks_, k + 1, ":")) {
                is_public = toks_[k].text == "public";
                k += 2;
                continue;
            }
            if (word(toks_, k, "template") && punct(toks_, k + 1, "<")) {
                k = skip_angle_list(toks_, k + 1, end);
                continue;
            }
            if (word(toks_, k, "class") || word(toks_, k, "struct") || word(toks_, k, "union") ||
                word(toks_, k, "enum")) {
                std::size_t n = k + 1;
                if (word(toks_, n, "class") || word(toks_, n, "struct")) {
                    ++n;
                }
                if (plain_ident(toks_, n)) {
                    decl.nested_types.push_back(toks_[n].text);
                }
                k = advance(k, skip_declaration(k, end));
                continue;
            }
            if (word(toks_, k, "using") || word(toks_, k, "typedef") || word(toks_, k, "friend") ||
                word(toks_, k, "static_assert") || punct(toks_, k, "~")) {
                k = advance(k, skip_declaration(k, end));
                continue;
            }
            k = parse_member(k, end, decl, is_public);
        }
    }

    static std::size_t advance(std::size_t from, std::size_t to) { return to > from ? to : from + 1; }

    std::size_t parse_member(std::size_t k, std::size_t end, TypeDeclaration& decl, bool is_public)
    {
        const std::size_t start = k;
        while (punct(toks_, k, "[") && punct(toks_, k + 1, "[")) {
            const auto close = find_matching(toks_, k);
            k = close == std::string::npos ? k + 1 : close + 1;
        }
        const std::size_t head = k;
        static const std::vector<std::string_view> kSpecs = {"virtual", "static", "inline", "constexpr",
                                                             "explicit", "consteval", "friend"};
        std::size_t type_start = head;
        while (type_start < end && toks_[type_start].is_ident() &&
               std::find(kSpecs.begin(), kSpecs.end(), toks_[type_start].text) != kSpecs.end()) {
            ++type_start;
        }

        std::size_t m = type_start;
        bool is_operator = false;
        while (m < end) {
            const auto& t = toks_[m];
            if (word(toks_, m, "operator")) {
                is_operator = true;
                break;
            }
            if (t.kind == TokenKind::Punct) {
                if (t.text == "<" && m > type_start) {
                    m = skip_angle_list(toks_, m, end);
                    continue;
                }
                if (t.text == "(" || t.text == ";" || t.text == "=" || t.text == "{" || t.text == ":" ||
                    t.text == "[") {
                    break;
                }
            }
            ++m;
        }
        if (is_operator || m >= end) {
            return advance(start, skip_declaration(start, end));
        }
        if (!punct(toks_, m, "(")) {
            decl.has_fields = true;
            return advance(start, skip_declaration(start, end));
        }

        const std::size_t name_idx = m - 1;
        if (name_idx < type_start || !plain_ident(toks_, name_idx) || punct(toks_, name_idx - 1, "::")) {
            return advance(start, skip_declaration(start, end));
        }
        const auto close = find_matching(toks_, m);
        if (close == std::string::npos || close >= end) {
            fail("unbalanced parameter list", m);
            return end;
        }

        MemberFunction fn;
        fn.is_public = is_public;
        fn.signature.name = toks_[name_idx].text;
        const bool ctor = name_idx == type_start && fn.signature.name == decl.name.simple;
        if (name_idx == type_start && !ctor) {
            return advance(start, skip_declaration(start, end));  // macro invocation or similar
        }
        fn.signature.is_constructor = ctor;
        if (ctor) {
            fn.signature.returns = TypeRef::named(decl.name);
        } else {
            auto pt = parse_type(toks_, type_start);
            if (!pt || pt->end != name_idx) {
                return advance(start, skip_declaration(start, end));
            }
            fn.signature.returns = pt->type;
            if (pt->type.is_named() && pt->type.name.simple == "auto" && pt->type.name.qualifier.empty()) {
                fn.signature.returns = TypeRef::unknown();
            }
        }

        auto args = split_arguments(toks_, m, close);
        for (const auto& arg : args) {
            std::size_t stop = arg.end;
            for (std::size_t a = arg.begin; a < arg.end; ++a) {
                if (punct(toks_, a, "=")) {
                    stop = a;
                    break;
                }
            }
            if (stop == arg.begin || punct(toks_, arg.begin, "...")) {
                continue;
            }
            if (args.size() == 1 && stop == arg.begin + 1 && word(toks_, arg.begin, "void")) {
                continue;
            }
            auto pt = parse_type(toks_, arg.begin);
            fn.signature.params.push_back(pt ? pt->type : TypeRef::unknown());
        }

        std::size_t q = close + 1;
        bool deleted = false;
        while (q < end) {
            if (function_qualifier(toks_[q]) || punct(toks_, q, "&") || punct(toks_, q, "&&")) {
                ++q;
                if (punct(toks_, q, "(")) {
                    const auto c = find_matching(toks_, q);
                    q = c == std::string::npos ? q + 1 : c + 1;
                }
                continue;
            }
            if (punct(toks_, q, "->")) {
                auto pt = parse_type(toks_, q + 1);
                if (pt) {
                    fn.signature.returns = pt->type;
                    q = pt->end;
                    continue;
                }
            }
            break;
        }
        if (punct(toks_, q, "=")) {
            fn.is_pure = q + 1 < end && toks_[q + 1].text == "0";
            deleted = word(toks_, q + 1, "delete");
        }
        if (!deleted) {
            decl.members.push_back(std::move(fn));
        }
        return advance(start, skip_declaration(start, end));
    }

    std::string_view src_;
    std::vector<Token> toks_;
    TranslationUnit out_;
};

bool ends_with(std::string_view s, std::string_view suffix)
{
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string record_source(std::string_view source, const TranslationUnit& tu, const TypeDeclaration& decl)
{
    if (tu.types.size() == 1) {
        return std::string(source);
    }
    std::string out;
    for (const auto& inc : tu.includes) {
        out += inc;
        out += "\n";
    }
    if (!tu.includes.empty()) {
        out += "\n";
    }
    for (const auto& n : decl.namespaces) {
        out += "namespace " + n + " {\n";
    }
    out += std::string(source.substr(decl.begin_offset, decl.end_offset - decl.begin_offset));
    out += "\n";
    for (std::size_t k = 0; k < decl.namespaces.size(); ++k) {
        out += "}\n";
    }
    return out;
}

}  // namespace

bool is_subject_source_path(std::string_view path)
{
    static constexpr std::string_view kExt[] = {".hpp", ".h", ".hh", ".hxx", ".cpp", ".cc", ".cxx"};
    return std::any_of(std::begin(kExt), std::end(kExt), [&](std::string_view e) { return ends_with(path, e); });
}

TranslationUnit parse_translation_unit(std::string_view source)
{
    auto lexed = lex(source);
    std::vector<std::string> includes;
    std::vector<Token> code;
    code.reserve(lexed.tokens.size());
    for (auto& t : lexed.tokens) {
        if (t.kind == TokenKind::Preprocessor) {
            if (t.text.find("include") != std::string::npos) {
                includes.push_back(t.text);
            }
            continue;
        }
        code.push_back(std::move(t));
    }
    return UnitParser(source, std::move(code)).run(std::move(includes), std::move(lexed.issue));
}

InterfaceSpec interface_of(const TypeDeclaration& decl)
{
    InterfaceSpec iface;
    iface.class_name = decl.name;
    bool any_pure = false;
    bool all_pure = true;
    for (const auto& m : decl.members) {
        if (!m.signature.is_constructor) {
            any_pure = any_pure || m.is_pure;
            all_pure = all_pure && m.is_pure;
        }
        if (m.is_public) {
            iface.add_method(m.signature);
        }
    }
    const auto& name = decl.name.simple;
    if (ends_with(name, "Test") || ends_with(name, "Tests") || decl.has_assertions) {
        iface.kind = ComponentKind::Test;
    } else if (any_pure && all_pure && !decl.has_fields) {
        iface.kind = ComponentKind::Interface;
    }
    return iface;
}

std::vector<ComponentRecord> extract_components(std::string_view source, std::string_view path)
{
    const auto tu = parse_translation_unit(source);
    if (tu.types.empty()) {
        if (tu.failure) {
            throw *tu.failure;
        }
        const auto toks = lex(source).tokens;
        const SourcePosition at = toks.empty() ? SourcePosition{} : toks.front().position();
        throw UnparsableSource("no type declaration found", at);
    }

    std::vector<ComponentRecord> out;
    out.reserve(tu.types.size());
    for (std::size_t k = 0; k < tu.types.size(); ++k) {
        const auto& decl = tu.types[k];
        ComponentRecord rec;
        rec.iface = interface_of(decl);
        rec.source = record_source(source, tu, decl);
        rec.path = std::string(path);
        rec.content_hash = content_hash(rec.source);
        rec.id.value = rec.content_hash.substr(0, 16);
        const bool clash = std::any_of(out.begin(), out.end(), [&](const ComponentRecord& r) { return r.id == rec.id; });
        if (clash) {
            rec.id.value += "-" + sha256_hex(rec.path + "#" + std::to_string(k)).substr(0, 8);
        }
        try {
            rec.metrics = compute_metrics(rec.source);
        } catch (const UnparsableSource&) {
            rec.metrics = MetricsReport{};
        }
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace tds
