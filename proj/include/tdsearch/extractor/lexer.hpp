#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdsearch/core/error.hpp"

namespace tds {

enum class TokenKind { Identifier, Integer, Decimal, String, Char, Punct, Preprocessor };

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t offset = 0;  // byte offset into the lexed source
    int line = 1;
    int column = 1;

    bool is(std::string_view s) const { return (kind == TokenKind::Punct || kind == TokenKind::Identifier) && text == s; }
    bool is_ident() const { return kind == TokenKind::Identifier; }
    bool is_literal() const
    {
        return kind == TokenKind::Integer || kind == TokenKind::Decimal || kind == TokenKind::String ||
               kind == TokenKind::Char;
    }
    std::size_t end() const { return offset + text.size(); }
    SourcePosition position() const { return {line, column}; }
};

struct LexResult {
    std::vector<Token> tokens;
    /// First lexical problem (unterminated literal or block comment), if any.
    std::optional<UnparsableSource> issue;
};

/// Tokenizes the C++ subject subset. Comments are dropped; preprocessor
/// directives become single Preprocessor tokens. Never throws.
LexResult lex(std::string_view source);

/// Removes line and block comments, keeping string/char literal contents and
/// line structure. A block comment becomes nothing, or one space where
/// removing it would glue two tokens together.
std::string strip_comments(std::string_view source);

/// strip_comments followed by collapsing every whitespace run to one space
/// and trimming both ends.
std::string normalize_source(std::string_view source);

bool is_cpp_keyword(std::string_view word);

/// Index of the token closing the bracket opened at `open`, or npos.
/// Handles (), [], {}; `<` is not treated as a bracket here.
std::size_t find_matching(const std::vector<Token>& toks, std::size_t open);

/// First bracket imbalance in the token stream, if any.
std::optional<UnparsableSource> check_balance(const std::vector<Token>& toks);

}  // namespace tds
