#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdsearch/core/types.hpp"
#include "tdsearch/extractor/lexer.hpp"

namespace tds {

/// Subject-language label recorded in index manifests.
inline constexpr std::string_view kSubjectLanguage = "cpp-subset";

/// File extensions treated as subject-language sources.
bool is_subject_source_path(std::string_view path);

struct MemberFunction {
    MethodSignature signature;
    bool is_public = false;
    bool is_pure = false;
};

/// One top-level class/struct declaration.
struct TypeDeclaration {
    TypeName name;                      // qualifier = enclosing namespaces
    std::vector<std::string> namespaces;
    std::size_t begin_offset = 0;       // byte span in the source, including any template prefix
    std::size_t end_offset = 0;         // one past the closing `;`
    std::vector<MemberFunction> members;
    std::vector<std::string> nested_types;
    bool has_fields = false;
    bool has_assertions = false;
    bool is_struct = false;
};

/// A namespace-scope function definition.
struct FunctionDefinition {
    std::string name;
    std::string owner;  // "Matrix" for `Matrix::get`, empty for free functions
    std::size_t param_count = 0;
    bool returns_void = false;
};

struct TranslationUnit {
    std::vector<TypeDeclaration> types;
    std::vector<FunctionDefinition> functions;
    std::vector<std::string> includes;  // raw `#include` lines
    bool top_level_assertions = false;  // statements outside any function
    std::optional<UnparsableSource> failure;
};

/// Tolerant structural parse of a source file; never throws.
TranslationUnit parse_translation_unit(std::string_view source);

/// Interface of one parsed declaration (public members, kind detection applied).
InterfaceSpec interface_of(const TypeDeclaration& decl);

/// One record per top-level type declaration. Metrics are filled in.
/// Throws UnparsableSource when no type declaration is recognizable.
std::vector<ComponentRecord> extract_components(std::string_view source, std::string_view path);

}  // namespace tds
