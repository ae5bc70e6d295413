#include "tdsearch/core/types.hpp"

#include <algorithm>

#include "tdsearch/core/error.hpp"

namespace tds {

TypeName TypeName::parse_dotted(std::string_view dotted)
{
    auto dot = dotted.rfind('.');
    if (dot == std::string_view::npos) {
        return TypeName{std::string(dotted)};
    }
    return TypeName{std::string(dotted.substr(dot + 1)), std::string(dotted.substr(0, dot))};
}

std::string TypeRef::spelling() const
{
    switch (kind) {
    case TypeKind::Void:
        return "void";
    case TypeKind::Unknown:
        return "*";
    case TypeKind::Named:
        break;
    }
    return name.qualified();
}

TypeRef TypeRef::from_spelling(std::string_view s)
{
    if (s == "void") {
        return void_type();
    }
    if (s == "*" || s.empty()) {
        return unknown();
    }
    return named(TypeName::parse_dotted(s));
}

std::string MethodSignature::spelling() const
{
    std::string out = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i != 0) {
            out += ",";
        }
        out += params[i].spelling();
    }
    out += ")";
    if (!is_constructor) {
        out += ":" + returns.spelling();
    }
    return out;
}

std::string_view to_string(ComponentKind k)
{
    switch (k) {
    case ComponentKind::Class:
        return "CLASS";
    case ComponentKind::Interface:
        return "INTERFACE";
    case ComponentKind::Test:
        return "TEST";
    }
    return "CLASS";
}

ComponentKind component_kind_from_string(std::string_view s)
{
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
    if (up == "CLASS") {
        return ComponentKind::Class;
    }
    if (up == "INTERFACE") {
        return ComponentKind::Interface;
    }
    if (up == "TEST") {
        return ComponentKind::Test;
    }
    throw InvalidArgument("unknown component kind '" + std::string(s) + "'");
}

bool InterfaceSpec::add_method(MethodSignature sig)
{
    auto same = [&](const MethodSignature& m) { return m.name == sig.name && m.params == sig.params; };
    if (std::any_of(methods.begin(), methods.end(), same)) {
        return false;
    }
    methods.push_back(std::move(sig));
    return true;
}

std::string CanonicalSignature::key() const
{
    std::string out = name + "/" + std::to_string(arity) + "/";
    for (std::size_t i = 0; i < param_simple.size(); ++i) {
        if (i != 0) {
            out += ",";
        }
        out += param_simple[i];
    }
    out += "/" + return_simple;
    return out;
}

}  // namespace tds
