#include "tdsearch/extractor/scan.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace tds {

namespace {

constexpr std::array<std::string_view, 15> kBuiltinWords = {
    "void", "bool", "char", "char8_t", "char16_t", "char32_t", "wchar_t", "short",
    "int",  "long", "float", "double", "signed",   "unsigned", "auto",
};

constexpr std::array<std::string_view, 16> kSpecifiers = {
    "const",  "volatile",    "static",  "inline",   "constexpr", "virtual",   "explicit",  "friend",
    "mutable", "typename",   "extern",  "register", "consteval", "constinit", "thread_local", "struct",
};

bool is_specifier(std::string_view w) { return std::find(kSpecifiers.begin(), kSpecifiers.end(), w) != kSpecifiers.end(); }

bool punct(const std::vector<Token>& toks, std::size_t i, std::string_view s)
{
    return i < toks.size() && toks[i].kind == TokenKind::Punct && toks[i].text == s;
}

bool ident(const std::vector<Token>& toks, std::size_t i)
{
    return i < toks.size() && toks[i].is_ident();
}

bool plain_ident(const std::vector<Token>& toks, std::size_t i)
{
    return ident(toks, i) && !is_cpp_keyword(toks[i].text);
}

// Skips `[[...]]` attribute blocks.
std::size_t skip_attributes(const std::vector<Token>& toks, std::size_t i)
{
    while (punct(toks, i, "[") && punct(toks, i + 1, "[")) {
        auto close = find_matching(toks, i);
        if (close == std::string::npos) {
            return i;
        }
        i = close + 1;
    }
    return i;
}

// Index after the `>` closing the template argument list opened at `open`.
std::size_t skip_angles(const std::vector<Token>& toks, std::size_t open)
{
    int depth = 0;
    for (std::size_t i = open; i < toks.size(); ++i) {
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
        } else if (t.text == "(" || t.text == "[") {
            auto close = find_matching(toks, i);
            if (close == std::string::npos) {
                return std::string::npos;
            }
            i = close;
        } else if (t.text == ";" || t.text == "{" || t.text == "}") {
            return std::string::npos;
        }
        if (depth <= 0) {
            return i + 1;
        }
    }
    return std::string::npos;
}

void collect_template_args(const std::vector<Token>& toks, std::size_t open, std::size_t end,
                           std::vector<TypeName>& out)
{
    std::size_t i = open + 1;
    while (i < end) {
        auto pt = parse_type(toks, i);
        if (pt && pt->end <= end) {
            if (pt->type.is_named() && !pt->builtin) {
                out.push_back(pt->type.name);
            }
            out.insert(out.end(), pt->template_args.begin(), pt->template_args.end());
            i = std::max(pt->end, i + 1);
        } else {
            ++i;
        }
        while (i < end && !punct(toks, i, ",")) {
            ++i;
        }
        ++i;
    }
}

const std::set<std::string>& assertion_names()
{
    static const std::set<std::string> names = {"assert", "assertEquals", "assertTrue", "assertFalse"};
    return names;
}

}  // namespace

bool is_builtin_type_word(std::string_view word)
{
    return std::find(kBuiltinWords.begin(), kBuiltinWords.end(), word) != kBuiltinWords.end();
}

bool is_builtin_type(const TypeName& t)
{
    if (t.qualifier == "std" || t.qualifier.starts_with("std.")) {
        return true;
    }
    if (!t.qualifier.empty()) {
        return false;
    }
    static const std::set<std::string, std::less<>> kExtra = {
        "size_t",  "ptrdiff_t", "int8_t",  "int16_t",   "int32_t",  "int64_t",
        "uint8_t", "uint16_t",  "uint32_t", "uint64_t", "nullptr_t", "string",
    };
    if (kExtra.count(t.simple) != 0) {
        return true;
    }
    // Multi-word builtins are joined with '_' ("unsigned_int").
    std::size_t start = 0;
    while (start <= t.simple.size()) {
        auto end = t.simple.find('_', start);
        auto part = std::string_view(t.simple).substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!is_builtin_type_word(part)) {
            return false;
        }
        if (end == std::string::npos) {
            break;
        }
        start = end + 1;
    }
    return !t.simple.empty();
}

std::string render_cpp_type(const TypeRef& t)
{
    if (t.kind == TypeKind::Void) {
        return "void";
    }
    if (t.kind == TypeKind::Unknown) {
        return "auto";
    }
    std::string simple = t.name.simple;
    if (t.name.qualifier.empty() && is_builtin_type(t.name) && simple.find('_') != std::string::npos &&
        !simple.ends_with("_t")) {
        std::replace(simple.begin(), simple.end(), '_', ' ');
    }
    std::string out;
    if (!t.name.qualifier.empty()) {
        out = t.name.qualifier;
        std::string::size_type pos = 0;
        while ((pos = out.find('.', pos)) != std::string::npos) {
            out.replace(pos, 1, "::");
            pos += 2;
        }
        out += "::";
    }
    return out + simple;
}

std::optional<ParsedType> parse_type(const std::vector<Token>& toks, std::size_t i)
{
    ParsedType pt;
    i = skip_attributes(toks, i);
    while (ident(toks, i) && is_specifier(toks[i].text)) {
        ++i;
    }
    if (i >= toks.size()) {
        return std::nullopt;
    }

    if (ident(toks, i) && is_builtin_type_word(toks[i].text)) {
        std::string joined;
        while (ident(toks, i) && (is_builtin_type_word(toks[i].text) || toks[i].text == "const")) {
            if (toks[i].text != "const") {
                joined += joined.empty() ? toks[i].text : "_" + toks[i].text;
            }
            ++i;
        }
        pt.builtin = true;
        pt.type = joined == "void" ? TypeRef::void_type() : TypeRef::named(TypeName{joined});
    } else {
        std::vector<std::string> parts;
        if (punct(toks, i, "::")) {
            ++i;
        }
        while (true) {
            if (!plain_ident(toks, i)) {
                return std::nullopt;
            }
            parts.push_back(toks[i].text);
            ++i;
            if (punct(toks, i, "<")) {
                const auto open = i;
                const auto after = skip_angles(toks, i);
                if (after == std::string::npos) {
                    return std::nullopt;
                }
                collect_template_args(toks, open, after - 1, pt.template_args);
                i = after;
            }
            if (punct(toks, i, "::") && plain_ident(toks, i + 1)) {
                ++i;
                continue;
            }
            break;
        }
        TypeName name{parts.back()};
        for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
            name.qualifier += (k == 0 ? "" : ".") + parts[k];
        }
        pt.builtin = is_builtin_type(name);
        pt.type = TypeRef::named(std::move(name));
    }

    while (i < toks.size()) {
        if (ident(toks, i) && (toks[i].text == "const" || toks[i].text == "volatile")) {
            ++i;
        } else if (punct(toks, i, "*")) {
            pt.pointer = true;
            ++i;
        } else if (punct(toks, i, "&") || punct(toks, i, "&&")) {
            pt.reference = true;
            ++i;
        } else {
            break;
        }
    }
    pt.end = i;
    return pt;
}

std::vector<TokenRange> split_arguments(const std::vector<Token>& toks, std::size_t open, std::size_t close)
{
    std::vector<TokenRange> out;
    if (close <= open + 1) {
        return out;
    }
    int depth = 0;
    std::size_t start = open + 1;
    for (std::size_t i = open + 1; i < close; ++i) {
        const auto& t = toks[i];
        if (t.kind != TokenKind::Punct) {
            continue;
        }
        if (t.text == "(" || t.text == "[" || t.text == "{") {
            ++depth;
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
            --depth;
        } else if (t.text == "," && depth == 0) {
            out.push_back({start, i});
            start = i + 1;
        }
    }
    out.push_back({start, close});
    return out;
}

bool is_assertion_name(std::string_view name) { return assertion_names().count(std::string(name)) != 0; }

const VarDecl* CodeScan::find_variable(std::string_view name) const
{
    for (const auto& d : declarations) {
        if (d.name == name) {
            return &d;
        }
    }
    return nullptr;
}

std::vector<Token> code_tokens(std::string_view source)
{
    auto lexed = lex(source);
    std::vector<Token> out;
    out.reserve(lexed.tokens.size());
    for (auto& t : lexed.tokens) {
        if (t.kind != TokenKind::Preprocessor) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

namespace {

class CodeScanner {
public:
    explicit CodeScanner(const std::vector<Token>& toks) : toks_(toks) {}

    CodeScan run()
    {
        index_brackets();
        collect_declared_names();
        std::set<std::size_t> decl_names;

        for (std::size_t i = 0; i < toks_.size(); ++i) {
            if (statement_start(i)) {
                scan_declaration(i, false, decl_names);
            } else if (parameter_start(i)) {
                scan_declaration(i, true, decl_names);
            }
        }
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            if (decl_names.count(i) == 0) {
                scan_expression(i);
            }
        }
        return std::move(out_);
    }

private:
    void index_brackets()
    {
        std::vector<std::size_t> stack;
        open_of_.assign(toks_.size(), std::string::npos);
        close_of_.assign(toks_.size(), std::string::npos);
        for (std::size_t i = 0; i < toks_.size(); ++i) {
            if (toks_[i].kind != TokenKind::Punct) {
                continue;
            }
            const auto& t = toks_[i].text;
            if (t == "(" || t == "[" || t == "{") {
                stack.push_back(i);
            } else if ((t == ")" || t == "]" || t == "}") && !stack.empty()) {
                close_of_[stack.back()] = i;
                open_of_[i] = stack.back();
                stack.pop_back();
            }
        }
    }

    // `(` that opens a function parameter list (definition or declaration).
    bool header_paren(std::size_t open) const
    {
        if (!punct(toks_, open, "(") || open == 0 || close_of_[open] == std::string::npos) {
            return false;
        }
        const auto& before = toks_[open - 1];
        if (before.is_ident() && before.text == "catch") {
            return true;
        }
        if (!before.is_ident() || is_cpp_keyword(before.text)) {
            return false;
        }
        std::size_t j = close_of_[open] + 1;
        while (ident(toks_, j) && (toks_[j].text == "const" || toks_[j].text == "noexcept" ||
                                   toks_[j].text == "override" || toks_[j].text == "final")) {
            ++j;
        }
        if (punct(toks_, j, "{") || punct(toks_, j, "->")) {
            return true;
        }
        // Constructor with an initializer list.
        if (punct(toks_, j, ":") && plain_ident(toks_, j + 1)) {
            return true;
        }
        // Declaration `T name(params);` where the params look like types.
        if ((punct(toks_, j, ";") || punct(toks_, j, "=")) && open >= 2) {
            const bool typed_head = toks_[open - 2].is_ident() || punct(toks_, open - 2, "&") ||
                                    punct(toks_, open - 2, "*") || punct(toks_, open - 2, ">");
            if (!typed_head) {
                return false;
            }
            if (close_of_[open] == open + 1) {
                return true;
            }
            if (ident(toks_, open + 1) && toks_[open + 1].text == "const") {
                return true;
            }
            auto pt = parse_type(toks_, open + 1);
            if (!pt) {
                return false;
            }
            const bool named_param = plain_ident(toks_, pt->end) &&
                                     (punct(toks_, pt->end + 1, ",") || punct(toks_, pt->end + 1, ")") ||
                                      punct(toks_, pt->end + 1, "="));
            const bool bare_builtin = pt->builtin && (punct(toks_, pt->end, ",") || punct(toks_, pt->end, ")"));
            return named_param || bare_builtin || pt->reference || pt->pointer;
        }
        return false;
    }

    void collect_declared_names()
    {
        for (std::size_t i = 0; i + 1 < toks_.size(); ++i) {
            const auto& t = toks_[i];
            if (t.is_ident() && (t.text == "class" || t.text == "struct" || t.text == "enum" || t.text == "union")) {
                std::size_t j = i + 1;
                if (ident(toks_, j) && (toks_[j].text == "class" || toks_[j].text == "struct")) {
                    ++j;
                }
                if (plain_ident(toks_, j)) {
                    out_.declared_types.push_back(toks_[j].text);
                }
            }
            if (t.is_ident() && !is_cpp_keyword(t.text) && header_paren(i + 1)) {
                out_.declared_functions.push_back(t.text);
            }
        }
    }

    bool statement_start(std::size_t i) const
    {
        if (i == 0) {
            return true;
        }
        const auto& prev = toks_[i - 1];
        if (prev.kind == TokenKind::Punct && (prev.text == ";" || prev.text == "{" || prev.text == "}")) {
            return true;
        }
        if (punct(toks_, i - 1, ":") && i >= 2 && toks_[i - 2].is_ident() &&
            (toks_[i - 2].text == "public" || toks_[i - 2].text == "private" || toks_[i - 2].text == "protected")) {
            return true;
        }
        if (punct(toks_, i - 1, "(") && i >= 2 && toks_[i - 2].is_ident() && toks_[i - 2].text == "for") {
            return true;
        }
        return false;
    }

    bool parameter_start(std::size_t i) const
    {
        if (i == 0) {
            return false;
        }
        if (punct(toks_, i - 1, "(")) {
            return header_paren(i - 1);
        }
        if (punct(toks_, i - 1, ",")) {
            // Find the enclosing open paren.
            int depth = 0;
            for (std::size_t k = i - 1; k-- > 0;) {
                const auto& t = toks_[k];
                if (t.kind != TokenKind::Punct) {
                    continue;
                }
                if (t.text == ")" || t.text == "]" || t.text == "}") {
                    ++depth;
                } else if (t.text == "(" || t.text == "[" || t.text == "{") {
                    if (depth == 0) {
                        return t.text == "(" && header_paren(k);
                    }
                    --depth;
                } else if (t.text == ";" && depth == 0) {
                    return false;
                }
            }
        }
        return false;
    }

    // End of an initializer expression starting at `i`: the depth-0 `,`, `;` or `)`.
    std::size_t expression_end(std::size_t i) const
    {
        while (i < toks_.size()) {
            const auto& t = toks_[i];
            if (t.kind == TokenKind::Punct) {
                if (t.text == "(" || t.text == "[" || t.text == "{") {
                    if (close_of_[i] == std::string::npos) {
                        return toks_.size();
                    }
                    i = close_of_[i] + 1;
                    continue;
                }
                if (t.text == "," || t.text == ";" || t.text == ")" || t.text == "}" || t.text == "]") {
                    return i;
                }
            }
            ++i;
        }
        return toks_.size();
    }

    void scan_declaration(std::size_t i, bool parameter, std::set<std::size_t>& decl_names)
    {
        if (ident(toks_, i) && is_cpp_keyword(toks_[i].text) && !is_builtin_type_word(toks_[i].text) &&
            !is_specifier(toks_[i].text)) {
            return;
        }
        auto pt = parse_type(toks_, i);
        if (!pt || (pt->type.kind == TypeKind::Void && !pt->pointer)) {
            return;
        }
        std::size_t n = pt->end;
        while (plain_ident(toks_, n)) {
            const std::size_t next = n + 1;
            const bool ok = parameter ? (punct(toks_, next, ",") || punct(toks_, next, ")") ||
                                         punct(toks_, next, "=") || punct(toks_, next, "["))
                                      : (punct(toks_, next, "=") || punct(toks_, next, "(") ||
                                         punct(toks_, next, "{") || punct(toks_, next, ";") ||
                                         punct(toks_, next, ",") || punct(toks_, next, "["));
            if (!ok || (punct(toks_, next, "(") && header_paren(next))) {
                return;
            }

            VarDecl d;
            d.name = toks_[n].text;
            d.type = *pt;
            d.name_index = n;
            d.parameter = parameter;
            std::size_t after = next;
            if (punct(toks_, next, "=")) {
                d.init = InitKind::Assign;
                const auto end = expression_end(next + 1);
                d.init_range = {next + 1, end};
                after = end;
            } else if ((punct(toks_, next, "(") || punct(toks_, next, "{")) && close_of_[next] != std::string::npos) {
                d.init = punct(toks_, next, "(") ? InitKind::Paren : InitKind::Brace;
                d.init_range = {next + 1, close_of_[next]};
                after = close_of_[next] + 1;
            }
            decl_names.insert(n);

            if (!parameter && d.type.type.is_named() && !d.type.builtin && !d.type.pointer && !d.type.reference &&
                d.init != InitKind::Assign) {
                Construction c;
                c.type = d.type.type.name;
                if (d.init == InitKind::Paren || d.init == InitKind::Brace) {
                    c.args = split_arguments(toks_, next, close_of_[next]);
                }
                c.expr = {i, after};
                c.from_declaration = true;
                out_.constructions.push_back(std::move(c));
            }
            out_.declarations.push_back(std::move(d));

            if (parameter || !punct(toks_, after, ",")) {
                return;
            }
            n = after + 1;
        }
    }

    bool known_type_name(const std::string& name) const
    {
        if (std::find(out_.declared_functions.begin(), out_.declared_functions.end(), name) !=
                out_.declared_functions.end() &&
            std::find(out_.declared_types.begin(), out_.declared_types.end(), name) == out_.declared_types.end()) {
            return false;
        }
        if (is_assertion_name(name) || is_cpp_keyword(name)) {
            return false;
        }
        if (std::find(out_.declared_types.begin(), out_.declared_types.end(), name) != out_.declared_types.end()) {
            return true;
        }
        return std::isupper(static_cast<unsigned char>(name[0])) != 0;
    }

    void scan_expression(std::size_t i)
    {
        const auto& t = toks_[i];
        if (t.is_ident() && t.text == "new") {
            scan_new(i);
            return;
        }
        if (t.is_ident() && is_assertion_name(t.text)) {
            scan_assertion(i);
            return;
        }
        if (!plain_ident(toks_, i)) {
            if (punct(toks_, i, ")") && (punct(toks_, i + 1, ".") || punct(toks_, i + 1, "->"))) {
                scan_temporary_call(i);
            }
            return;
        }
        const bool after_access = i > 0 && (punct(toks_, i - 1, ".") || punct(toks_, i - 1, "->") ||
                                            punct(toks_, i - 1, "::"));
        if (after_access) {
            return;
        }
        if ((punct(toks_, i + 1, ".") || punct(toks_, i + 1, "->")) && plain_ident(toks_, i + 2) &&
            punct(toks_, i + 3, "(") && close_of_[i + 3] != std::string::npos) {
            MemberCall call;
            call.receiver = t.text;
            call.method = toks_[i + 2].text;
            call.args = split_arguments(toks_, i + 3, close_of_[i + 3]);
            call.expr = {i, close_of_[i + 3] + 1};
            out_.calls.push_back(std::move(call));
            return;
        }
        scan_functional_cast(i);
    }

    void scan_functional_cast(std::size_t i)
    {
        // [ns::]T( args ) or T{ args } in expression position.
        std::size_t j = i;
        std::vector<std::string> parts{toks_[j].text};
        while (punct(toks_, j + 1, "::") && plain_ident(toks_, j + 2)) {
            j += 2;
            parts.push_back(toks_[j].text);
        }
        const std::size_t open = j + 1;
        const bool paren = punct(toks_, open, "(");
        const bool brace = punct(toks_, open, "{");
        if ((!paren && !brace) || close_of_[open] == std::string::npos || header_paren(open)) {
            return;
        }
        if (i > 0 && toks_[i - 1].is_ident()) {
            const auto& p = toks_[i - 1].text;
            if (p != "return" && p != "throw" && p != "case" && p != "else" && p != "do") {
                return;  // declaration head or class/struct keyword
            }
        }
        if (brace && i > 0 && (punct(toks_, i - 1, ":") || punct(toks_, i - 1, ")"))) {
            return;
        }
        if (!known_type_name(parts.back())) {
            return;
        }
        TypeName name{parts.back()};
        for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
            name.qualifier += (k == 0 ? "" : ".") + parts[k];
        }
        if (is_builtin_type(name)) {
            return;
        }
        Construction c;
        c.type = std::move(name);
        c.args = split_arguments(toks_, open, close_of_[open]);
        c.expr = {i, close_of_[open] + 1};
        out_.constructions.push_back(std::move(c));
    }

    void scan_new(std::size_t i)
    {
        auto pt = parse_type(toks_, i + 1);
        if (!pt || !pt->type.is_named() || pt->builtin) {
            return;
        }
        Construction c;
        c.type = pt->type.name;
        std::size_t end = pt->end;
        if ((punct(toks_, end, "(") || punct(toks_, end, "{")) && close_of_[end] != std::string::npos) {
            c.args = split_arguments(toks_, end, close_of_[end]);
            end = close_of_[end] + 1;
        }
        c.expr = {i, end};
        out_.constructions.push_back(std::move(c));
    }

    void scan_temporary_call(std::size_t close)
    {
        const auto open = open_of_[close];
        if (open == std::string::npos || !plain_ident(toks_, close + 2) || !punct(toks_, close + 3, "(") ||
            close_of_[close + 3] == std::string::npos) {
            return;
        }
        for (const auto& c : out_.constructions) {
            if (c.expr.end == close + 1 && !c.from_declaration) {
                MemberCall call;
                call.receiver_ctor = c.type;
                call.method = toks_[close + 2].text;
                call.args = split_arguments(toks_, close + 3, close_of_[close + 3]);
                call.expr = {c.expr.begin, close_of_[close + 3] + 1};
                out_.calls.push_back(std::move(call));
                return;
            }
        }
    }

    void scan_assertion(std::size_t i)
    {
        const auto& name = toks_[i].text;
        if (punct(toks_, i + 1, "(") && close_of_[i + 1] != std::string::npos) {
            Assertion a;
            a.form = name == "assert"         ? AssertionForm::Assert
                     : name == "assertTrue"   ? AssertionForm::AssertTrue
                     : name == "assertFalse"  ? AssertionForm::AssertFalse
                                              : AssertionForm::AssertEquals;
            a.args = split_arguments(toks_, i + 1, close_of_[i + 1]);
            a.span = {i, close_of_[i + 1] + 1};
            out_.assertions.push_back(std::move(a));
            return;
        }
        if (name == "assert") {
            const auto end = expression_end(i + 1);
            if (end > i + 1 && punct(toks_, end, ";")) {
                Assertion a;
                a.form = AssertionForm::AssertStatement;
                a.args = {{i + 1, end}};
                a.span = {i, end};
                out_.assertions.push_back(std::move(a));
            }
        }
    }

    const std::vector<Token>& toks_;
    std::vector<std::size_t> open_of_;
    std::vector<std::size_t> close_of_;
    CodeScan out_;
};

}  // namespace

CodeScan scan_code(const std::vector<Token>& toks) { return CodeScanner(toks).run(); }

}  // namespace tds
