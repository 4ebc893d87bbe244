#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>

namespace rvd {

/// Lowercases ASCII letters, turns every other ASCII non-alphanumeric byte
/// into a separator, collapses separators to one space and trims. Non-ASCII
/// bytes are kept as word characters.
std::string normalize_text(std::string_view s);

/// Distinct tokens of the normalized text.
std::set<std::string> token_set(std::string_view s);

/// |A ∩ B| / |A ∪ B|; 0 when both are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

/// Byte-level Levenshtein distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - lev(a,b)/max(|a|,|b|) over normalized text; 0 when both are empty.
double edit_similarity(std::string_view a, std::string_view b);

/// max(token-set Jaccard, edit similarity) over normalized text.
double text_similarity(std::string_view a, std::string_view b);

}  // namespace rvd
