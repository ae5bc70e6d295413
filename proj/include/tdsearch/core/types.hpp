#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace tds {

/// Content-derived identifier of an indexed component.
struct ComponentId {
    std::string value;

    bool empty() const { return value.empty(); }
    auto operator<=>(const ComponentId&) const = default;
};

/// A possibly qualified type name. The qualifier is a dotted path ("geo.shapes");
/// C++ `::` separators are converted on extraction.
struct TypeName {
    std::string simple;
    std::string qualifier;

    TypeName() = default;
    TypeName(std::string simple_name, std::string qual = {})
        : simple(std::move(simple_name)), qualifier(std::move(qual)) {}

    std::string qualified() const { return qualifier.empty() ? simple : qualifier + "." + simple; }

    /// Parses "a.b.Name" into qualifier "a.b" and simple "Name".
    static TypeName parse_dotted(std::string_view dotted);

    auto operator<=>(const TypeName&) const = default;
};

enum class TypeKind : std::uint8_t { Named, Void, Unknown };

/// Parameter or return type as seen by the matcher.
struct TypeRef {
    TypeKind kind = TypeKind::Unknown;
    TypeName name;

    static TypeRef named(TypeName n) { return {TypeKind::Named, std::move(n)}; }
    static TypeRef void_type() { return {TypeKind::Void, {}}; }
    static TypeRef unknown() { return {TypeKind::Unknown, {}}; }

    bool is_named() const { return kind == TypeKind::Named; }
    bool is_unknown() const { return kind == TypeKind::Unknown; }

    /// "void", "*" for unknown, otherwise the dotted qualified name.
    std::string spelling() const;
    static TypeRef from_spelling(std::string_view s);

    auto operator<=>(const TypeRef&) const = default;
};

struct MethodSignature {
    std::string name;
    std::vector<TypeRef> params;
    TypeRef returns = TypeRef::unknown();
    bool is_constructor = false;

    /// Human readable form, e.g. "add(Polynomial):Polynomial".
    std::string spelling() const;

    auto operator<=>(const MethodSignature&) const = default;
};

enum class ComponentKind : std::uint8_t { Class, Interface, Test };

std::string_view to_string(ComponentKind k);
ComponentKind component_kind_from_string(std::string_view s);

struct InterfaceSpec {
    TypeName class_name;
    std::vector<MethodSignature> methods;
    ComponentKind kind = ComponentKind::Class;

    /// Appends unless a method with the same name and parameter list exists.
    bool add_method(MethodSignature sig);

    auto operator<=>(const InterfaceSpec&) const = default;
};

struct HalsteadMetrics {
    int n1 = 0;  // distinct operators
    int n2 = 0;  // distinct operands
    int N1 = 0;  // total operators
    int N2 = 0;  // total operands
    int vocabulary = 0;
    int length = 0;
    double volume = 0.0;
    double difficulty = 0.0;
    double effort = 0.0;

    bool operator==(const HalsteadMetrics&) const = default;
};

struct MetricsReport {
    int loc = 0;
    int cyclomatic = 1;
    HalsteadMetrics halstead;

    bool operator==(const MetricsReport&) const = default;
};

struct ComponentRecord {
    ComponentId id;
    InterfaceSpec iface;
    std::string source;
    std::string path;
    MetricsReport metrics;
    std::string content_hash;

    bool operator==(const ComponentRecord&) const = default;
};

/// Lowered signature used for matching, clustering and fingerprints.
struct CanonicalSignature {
    std::string name;
    int arity = 0;
    std::vector<std::string> param_simple;
    std::string return_simple;

    /// "name/arity/p1,p2/ret", injective over canonical signatures.
    std::string key() const;

    auto operator<=>(const CanonicalSignature&) const = default;
};

}  // namespace tds
