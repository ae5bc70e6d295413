#include "tdsearch/extractor/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace tds {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
bool space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 26> kPuncts = {
    ">>=", "<<=", "...", "->*", "::", "->", "++", "--", "==", "!=", "<=", ">=", "&&",
    "||",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", ">>", ".*", "##",
};

constexpr std::array<std::string_view, 8> kStringPrefixes = {"R", "L", "u", "U", "u8", "LR", "uR", "u8R"};

class Scanner {
public:
    explicit Scanner(std::string_view src) : src_(src) {}

    LexResult run()
    {
        LexResult out;
        bool line_start = true;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\n') {
                advance();
                line_start = true;
                continue;
            }
            if (space(c)) {
                advance();
                continue;
            }
            if (c == '/' && peek(1) == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    advance();
                }
                continue;
            }
            if (c == '/' && peek(1) == '*') {
                const auto start = here();
                advance(2);
                bool closed = false;
                while (pos_ < src_.size()) {
                    if (src_[pos_] == '*' && peek(1) == '/') {
                        advance(2);
                        closed = true;
                        break;
                    }
                    advance();
                }
                if (!closed) {
                    note(out, "unterminated block comment", start);
                }
                continue;
            }
            if (c == '#' && line_start) {
                out.tokens.push_back(preprocessor());
                continue;
            }
            line_start = false;
            if (ident_start(c)) {
                Token t = identifier();
                if (pos_ < src_.size() && src_[pos_] == '"' &&
                    std::find(kStringPrefixes.begin(), kStringPrefixes.end(), t.text) != kStringPrefixes.end()) {
                    out.tokens.push_back(string_literal(out, t));
                } else {
                    out.tokens.push_back(std::move(t));
                }
                continue;
            }
            if (digit(c) || (c == '.' && digit(peek(1)))) {
                out.tokens.push_back(number());
                continue;
            }
            if (c == '"') {
                Token t = begin(TokenKind::String);
                out.tokens.push_back(string_literal(out, t));
                continue;
            }
            if (c == '\'') {
                out.tokens.push_back(char_literal(out));
                continue;
            }
            out.tokens.push_back(punct());
        }
        return out;
    }

private:
    char peek(std::size_t ahead) const { return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0'; }

    void advance(std::size_t n = 1)
    {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    SourcePosition here() const { return {line_, col_}; }

    Token begin(TokenKind kind) const
    {
        Token t{kind, {}, pos_, line_, col_};
        return t;
    }

    void finish(Token& t) const { t.text = std::string(src_.substr(t.offset, pos_ - t.offset)); }

    static void note(LexResult& out, const std::string& what, SourcePosition at)
    {
        if (!out.issue) {
            out.issue.emplace(what, at);
        }
    }

    Token preprocessor()
    {
        Token t = begin(TokenKind::Preprocessor);
        while (pos_ < src_.size()) {
            if (src_[pos_] == '\\' && peek(1) == '\n') {
                advance(2);
                continue;
            }
            if (src_[pos_] == '\n') {
                break;
            }
            if (src_[pos_] == '/' && (peek(1) == '/' || peek(1) == '*')) {
                break;
            }
            advance();
        }
        finish(t);
        while (!t.text.empty() && space(t.text.back())) {
            t.text.pop_back();
        }
        return t;
    }

    Token identifier()
    {
        Token t = begin(TokenKind::Identifier);
        while (pos_ < src_.size() && ident_char(src_[pos_])) {
            advance();
        }
        finish(t);
        return t;
    }

    Token number()
    {
        Token t = begin(TokenKind::Integer);
        const bool hex = src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X');
        bool decimal = false;
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '.') {
                decimal = true;
                advance();
                continue;
            }
            const bool exp = hex ? (c == 'p' || c == 'P') : (c == 'e' || c == 'E');
            if (exp && (peek(1) == '+' || peek(1) == '-')) {
                decimal = true;
                advance(2);
                continue;
            }
            if (exp) {
                decimal = true;
            }
            if (ident_char(c) || c == '\'') {
                advance();
                continue;
            }
            break;
        }
        finish(t);
        if (!hex && !decimal && (t.text.back() == 'f' || t.text.back() == 'F')) {
            decimal = true;
        }
        t.kind = decimal ? TokenKind::Decimal : TokenKind::Integer;
        return t;
    }

    Token string_literal(LexResult& out, Token t)
    {
        t.kind = TokenKind::String;
        const bool raw = !t.text.empty() && t.text.back() == 'R';
        const auto start = SourcePosition{t.line, t.column};
        advance();  // opening quote
        if (raw) {
            std::string delim;
            while (pos_ < src_.size() && src_[pos_] != '(') {
                delim.push_back(src_[pos_]);
                advance();
            }
            const std::string close = ")" + delim + "\"";
            auto end = src_.find(close, pos_);
            if (end == std::string_view::npos) {
                note(out, "unterminated raw string literal", start);
                advance(src_.size() - pos_);
            } else {
                advance(end + close.size() - pos_);
            }
            finish(t);
            return t;
        }
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                advance(2);
                continue;
            }
            if (c == '"') {
                advance();
                finish(t);
                return t;
            }
            if (c == '\n') {
                break;
            }
            advance();
        }
        note(out, "unterminated string literal", start);
        finish(t);
        return t;
    }

    Token char_literal(LexResult& out)
    {
        Token t = begin(TokenKind::Char);
        advance();
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (c == '\\') {
                advance(2);
                continue;
            }
            if (c == '\'') {
                advance();
                finish(t);
                return t;
            }
            if (c == '\n') {
                break;
            }
            advance();
        }
        note(out, "unterminated character literal", {t.line, t.column});
        finish(t);
        return t;
    }

    Token punct()
    {
        Token t = begin(TokenKind::Punct);
        for (auto p : kPuncts) {
            if (src_.substr(pos_, p.size()) == p) {
                advance(p.size());
                finish(t);
                return t;
            }
        }
        advance();
        finish(t);
        return t;
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace

LexResult lex(std::string_view source) { return Scanner(source).run(); }

std::string strip_comments(std::string_view src)
{
    std::string out;
    out.reserve(src.size());
    std::size_t i = 0;
    auto copy_quoted = [&](char quote) {
        out.push_back(src[i++]);
        while (i < src.size()) {
            const char c = src[i];
            if (c == '\\' && i + 1 < src.size()) {
                out.push_back(c);
                out.push_back(src[i + 1]);
                i += 2;
                continue;
            }
            out.push_back(c);
            ++i;
            if (c == quote || c == '\n') {
                return;
            }
        }
    };

    while (i < src.size()) {
        const char c = src[i];
        const char next = i + 1 < src.size() ? src[i + 1] : '\0';
        if (c == '"' || c == '\'') {
            // A quote directly after an identifier/digit char is a digit
            // separator (1'000), not a character literal.
            if (c == '\'' && !out.empty() && std::isalnum(static_cast<unsigned char>(out.back()))) {
                out.push_back(c);
                ++i;
                continue;
            }
            copy_quoted(c);
            continue;
        }
        if (c == '/' && next == '/') {
            while (i < src.size() && src[i] != '\n') {
                ++i;
            }
            continue;
        }
        if (c == '/' && next == '*') {
            auto end = src.find("*/", i + 2);
            const std::size_t stop = end == std::string_view::npos ? src.size() : end + 2;
            const auto newlines = std::count(src.begin() + static_cast<std::ptrdiff_t>(i),
                                             src.begin() + static_cast<std::ptrdiff_t>(stop), '\n');
            if (newlines > 0) {
                out.append(static_cast<std::size_t>(newlines), '\n');
            } else {
                const bool before = !out.empty() && !space(out.back());
                const bool after = stop < src.size() && !space(src[stop]);
                if (before && after) {
                    out.push_back(' ');
                }
            }
            i = stop;
            continue;
        }
        out.push_back(c);
        ++i;
    }
    return out;
}

std::string normalize_source(std::string_view source)
{
    const std::string stripped = strip_comments(source);
    std::string out;
    out.reserve(stripped.size());
    bool pending_space = false;
    for (char c : stripped) {
        if (space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

bool is_cpp_keyword(std::string_view word)
{
    static constexpr std::array<std::string_view, 73> kKeywords = {
        "alignas",   "alignof",      "and",          "asm",        "auto",         "bool",
        "break",     "case",         "catch",        "char",       "char16_t",     "char32_t",
        "char8_t",   "class",        "co_await",     "co_return",  "co_yield",     "concept",
        "const",     "const_cast",   "consteval",    "constexpr",  "constinit",    "continue",
        "decltype",  "default",      "delete",       "do",         "double",       "dynamic_cast",
        "else",      "enum",         "explicit",     "export",     "extern",       "false",
        "float",     "for",          "friend",       "goto",       "if",           "inline",
        "int",       "long",         "mutable",      "namespace",  "new",          "noexcept",
        "not",       "nullptr",      "operator",     "or",         "private",      "protected",
        "public",    "register",     "reinterpret_cast", "requires", "return",     "short",
        "signed",    "sizeof",       "static",       "static_assert", "static_cast", "struct",
        "switch",    "template",     "this",         "throw",      "true",         "try",
        "typedef",
    };
    static constexpr std::array<std::string_view, 11> kMore = {
        "typeid", "typename", "union", "unsigned", "using", "virtual", "void", "volatile", "wchar_t", "while", "xor",
    };
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end() ||
           std::find(kMore.begin(), kMore.end(), word) != kMore.end();
}

std::size_t find_matching(const std::vector<Token>& toks, std::size_t open)
{
    if (open >= toks.size()) {
        return std::string::npos;
    }
    const std::string& o = toks[open].text;
    if (toks[open].kind != TokenKind::Punct || (o != "(" && o != "[" && o != "{")) {
        return std::string::npos;
    }
    std::vector<char> stack;
    for (std::size_t i = open; i < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::Punct) {
            continue;
        }
        const std::string& t = toks[i].text;
        if (t == "(" || t == "[" || t == "{") {
            stack.push_back(t[0]);
        } else if (t == ")" || t == "]" || t == "}") {
            const char want = t == ")" ? '(' : t == "]" ? '[' : '{';
            if (stack.empty() || stack.back() != want) {
                return std::string::npos;
            }
            stack.pop_back();
            if (stack.empty()) {
                return i;
            }
        }
    }
    return std::string::npos;
}

std::optional<UnparsableSource> check_balance(const std::vector<Token>& toks)
{
    std::vector<const Token*> stack;
    for (const auto& t : toks) {
        if (t.kind != TokenKind::Punct) {
            continue;
        }
        if (t.text == "(" || t.text == "[" || t.text == "{") {
            stack.push_back(&t);
        } else if (t.text == ")" || t.text == "]" || t.text == "}") {
            const char want = t.text == ")" ? '(' : t.text == "]" ? '[' : '{';
            if (stack.empty() || stack.back()->text[0] != want) {
                return UnparsableSource("unbalanced '" + t.text + "'", t.position());
            }
            stack.pop_back();
        }
    }
    if (!stack.empty()) {
        return UnparsableSource("unclosed '" + stack.back()->text + "'", stack.back()->position());
    }
    return std::nullopt;
}

}  // namespace tds
