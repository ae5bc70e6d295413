#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "tdsearch/core/types.hpp"

namespace tds {

CanonicalSignature canonicalize_signature(const MethodSignature& sig);

/// Identity on already-canonical input; exists so idempotence can be stated directly.
CanonicalSignature canonicalize_signature(const CanonicalSignature& sig);

/// Canonical type string: lowercased simple name, "*" for unknown, "void" for void.
std::string canonical_type(const TypeRef& t);

/// Splits an identifier on camelCase, underscores, non-alphanumerics and
/// letter/digit boundaries. Tokens are lowercase and never empty.
std::vector<std::string> tokenize_identifier(std::string_view name);

/// Digest over the canonical class simple name and the sorted canonical
/// signatures. Independent of method order and bodies.
std::string interface_fingerprint(const InterfaceSpec& iface);

std::string to_lower(std::string_view s);

}  // namespace tds
