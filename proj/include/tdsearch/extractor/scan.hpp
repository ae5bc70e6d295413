#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdsearch/core/types.hpp"
#include "tdsearch/extractor/lexer.hpp"

namespace tds {

/// Token range [begin, end).
struct TokenRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const TokenRange&) const = default;
};

struct ParsedType {
    TypeRef type;
    /// Non-builtin names found inside template argument lists.
    std::vector<TypeName> template_args;
    std::size_t end = 0;  // first token after the type
    bool pointer = false;
    bool reference = false;
    bool builtin = false;
};

/// Parses a declaration type starting at `i`: leading cv/specifiers, builtin
/// words or a `::`-qualified name with template arguments, trailing cv, `*`, `&`.
std::optional<ParsedType> parse_type(const std::vector<Token>& toks, std::size_t i);

bool is_builtin_type_word(std::string_view word);

/// True for C++ fundamental types, `auto`, and anything in namespace std.
bool is_builtin_type(const TypeName& t);

/// C++ spelling of a type: `std::string`, `unsigned int`, `void`.
std::string render_cpp_type(const TypeRef& t);

/// Splits the contents of a bracket pair at depth-0 commas.
std::vector<TokenRange> split_arguments(const std::vector<Token>& toks, std::size_t open, std::size_t close);

enum class InitKind { None, Paren, Brace, Assign };

struct VarDecl {
    std::string name;
    ParsedType type;
    std::size_t name_index = 0;
    InitKind init = InitKind::None;
    TokenRange init_range;  // initializer tokens, brackets excluded
    bool parameter = false;
};

struct Construction {
    TypeName type;
    std::vector<TokenRange> args;
    TokenRange expr;  // whole expression, e.g. `new T(1, 2)` or `T(1, 2)`
    bool from_declaration = false;
};

struct MemberCall {
    std::string receiver;                 // variable name, empty for a temporary
    std::optional<TypeName> receiver_ctor;  // set when the receiver is `T(...)`
    std::string method;
    std::vector<TokenRange> args;
    TokenRange expr;  // receiver through closing paren
};

enum class AssertionForm { Assert, AssertStatement, AssertTrue, AssertFalse, AssertEquals };

struct Assertion {
    AssertionForm form;
    std::vector<TokenRange> args;
    TokenRange span;  // assertion name through `)` (or the expression before `;`)
};

bool is_assertion_name(std::string_view name);

/// Statement-level facts about a token stream; structure-insensitive.
struct CodeScan {
    std::vector<VarDecl> declarations;
    std::vector<Construction> constructions;
    std::vector<MemberCall> calls;
    std::vector<Assertion> assertions;
    std::vector<std::string> declared_types;      // class/struct/enum names declared here
    std::vector<std::string> declared_functions;  // free/member function names defined here

    const VarDecl* find_variable(std::string_view name) const;
};

/// Tokens passed in must not contain Preprocessor tokens.
CodeScan scan_code(const std::vector<Token>& toks);

/// Tokens of `source` minus preprocessor directives.
std::vector<Token> code_tokens(std::string_view source);

}  // namespace tds
