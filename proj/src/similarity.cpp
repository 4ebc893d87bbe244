#include "rvd/similarity.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace rvd {

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (const char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    if (!word) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
  }
  return out;
}

std::set<std::string> token_set(std::string_view s) {
  std::set<std::string> out;
  const auto norm = normalize_text(s);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    out.insert(norm.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& t : a) common += b.count(t);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

double edit_similarity_normalized(const std::string& a, const std::string& b) {
  if (a.empty() && b.empty()) return 0.0;
  const auto longest = std::max(a.size(), b.size());
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

}  // namespace

double edit_similarity(std::string_view a, std::string_view b) {
  return edit_similarity_normalized(normalize_text(a), normalize_text(b));
}

double text_similarity(std::string_view a, std::string_view b) {
  return std::max(jaccard(token_set(a), token_set(b)), edit_similarity(a, b));
}

}  // namespace rvd
