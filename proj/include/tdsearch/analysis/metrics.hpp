#pragma once

#include <string>
#include <string_view>

#include "tdsearch/core/types.hpp"

namespace tds {

/// LOC, token-based cyclomatic complexity and Halstead measures.
///
/// Halstead classification: operators are keywords other than
/// declaration-only ones, every symbol except `; , ( ) { } ]` (a `[` stands
/// for the `[]` pair), and names at call sites; operands are all other
/// identifiers and literals. Preprocessor lines are ignored.
///
/// Throws UnparsableSource on unterminated literals or unbalanced brackets.
MetricsReport compute_metrics(std::string_view source);

/// Fills the derived Halstead fields from n1, n2, N1, N2.
HalsteadMetrics derive_halstead(int n1, int n2, int N1, int N2);

/// Dedupe key: digest of the comment-free, whitespace-collapsed source.
std::string content_hash(std::string_view source);

}  // namespace tds
