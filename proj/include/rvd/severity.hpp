#pragma once

#include "rvd/document.hpp"
#include "rvd/validation.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvd {

class VectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric score in [0,10], or nullopt for the unscored marker "None".
using Score = std::optional<double>;

struct MetricEntry {
  std::string key;
  std::string value;
  bool extension = false;  // not a CVSS v3.1 base metric

  bool operator==(const MetricEntry&) const = default;
};

/// Parsed `[PREFIX/]KEY:VAL(/KEY:VAL)*` vector. Entries keep input order so
/// rendering reproduces the original text.
class MetricVector {
 public:
  MetricVector() = default;
  MetricVector(std::optional<std::string> prefix, std::vector<MetricEntry> entries);

  const std::optional<std::string>& prefix() const { return prefix_; }
  const std::vector<MetricEntry>& entries() const { return entries_; }

  std::vector<MetricEntry> metrics() const;
  std::vector<MetricEntry> extensions() const;
  std::optional<std::string> get(std::string_view key) const;

  /// True when all eight base metrics are present.
  bool has_complete_base() const;

  bool operator==(const MetricVector&) const = default;

 private:
  std::optional<std::string> prefix_;
  std::vector<MetricEntry> entries_;
};

/// The eight CVSS v3.1 base metric keys in canonical order.
const std::vector<std::string>& base_metric_keys();
/// Legal values for a base metric key; empty if the key is not a base metric.
const std::vector<std::string>& base_metric_values(std::string_view key);

enum class VectorGrammar {
  Auto,    // base metric values checked unless the prefix is RVSS
  Opaque,  // values never checked (RVSS vectors stored without a prefix)
};

/// Parses a vector string. Under a CVSS (or absent) prefix, base metric
/// values are checked against the CVSS v3.1 grammar; under an RVSS prefix
/// every value is kept opaque. Throws VectorError.
MetricVector parse_vector(std::string_view text, VectorGrammar grammar = VectorGrammar::Auto);
std::string render_vector(const MetricVector& v);

/// CVSS v3.1 base score, rounded up to one decimal.
double cvss_base_score(const MetricVector& v);

/// CVSS v3.1 Roundup: smallest one-decimal number >= x, robust to
/// floating-point noise.
double roundup(double x);

enum class SeverityBucket { None = 0, Low, Medium, High, Critical };
enum class Imputation { Pessimistic, Optimistic, None };

std::string to_string(SeverityBucket b);
std::string to_string(Imputation i);
Imputation imputation_from_string(std::string_view s);

/// Maps a score to the CVSS qualitative scale. Unscored flaws are imputed:
/// pessimistic -> Critical, optimistic -> Low, none -> std::invalid_argument.
SeverityBucket bucket(Score score, Imputation imputation);

struct SeverityBlock {
  Score rvss_score;
  std::string rvss_vector;
  std::string severity_description;
  std::optional<Score> cvss_score;  // outer optional: field absent
  std::optional<std::string> cvss_vector;

  bool operator==(const SeverityBlock&) const = default;
};

/// Checks a `severity` sub-document: required subfields, types, score ranges,
/// vector syntax and cvss-score/cvss-vector agreement. Field paths are
/// prefixed with `path`.
ValidationReport validate_severity_block(const Document& block, const std::string& path = "severity");

/// Reads a block that already passed validation.
SeverityBlock severity_from_document(const Document& block);
Document severity_to_document(const SeverityBlock& block);

Document score_to_document(const Score& s);

/// True when the vector text is one of the "not provided" placeholders.
bool is_placeholder_vector(std::string_view text);

}  // namespace rvd
