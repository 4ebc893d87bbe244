#pragma once

#include "rvd/document.hpp"
#include "rvd/severity.hpp"
#include "rvd/validation.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rvd {

enum class FlawType { Bug, Weakness, Vulnerability, Exposure };

std::string to_string(FlawType t);
std::optional<FlawType> flaw_type_from_string(std::string_view s);

/// Bug and weakness name the same thing; everything else compares as usual.
bool taxonomy_equivalent(FlawType a, FlawType b);

/// exposure if a configuration error, else vulnerability if an exploit is
/// known, else bug.
FlawType taxonomy_classify(bool has_exploit, bool is_config_error);

using TextOrList = std::variant<std::string, std::vector<std::string>>;

/// Flattens a TextOrList to its entries. A plain string is one entry, except
/// that the empty string is no entry at all.
std::vector<std::string> entries_of(const TextOrList& v);

struct FlawContext {
  std::string phase;
  std::string specificity;
  std::string architectural_location;
  std::string application;
  std::string subsystem;
  TextOrList package;
  TextOrList languages;
  std::string date_detected;
  std::string detected_by;
  std::string detected_by_method;
  std::string date_reported;
  std::string reported_by;
  std::string reported_by_relationship;
  std::string issue;
  std::string reproducibility;
  std::string trace;
  std::string reproduction;
  std::string reproduction_image;

  bool operator==(const FlawContext&) const = default;
};

struct ExploitationBlock {
  std::string description;
  std::string image;
  std::string vector;

  bool operator==(const ExploitationBlock&) const = default;
};

struct MitigationBlock {
  std::string description;
  std::variant<std::string, double> pull_request;

  bool operator==(const MitigationBlock&) const = default;
};

struct FlawRecord {
  std::int64_t id = 0;
  std::string title;
  FlawType type = FlawType::Bug;
  std::string description;
  std::string cwe;
  std::string cve;
  TextOrList keywords;
  std::string system;
  std::optional<std::string> vendor;
  SeverityBlock severity;
  TextOrList links;
  FlawContext flaw;
  ExploitationBlock exploitation;
  MitigationBlock mitigation;

  bool operator==(const FlawRecord&) const = default;
};

class RenameConflict : public std::runtime_error {
 public:
  RenameConflict(std::string old_key, std::string new_key);
  const std::string& old_key() const { return old_key_; }
  const std::string& new_key() const { return new_key_; }

 private:
  std::string old_key_;
  std::string new_key_;
};

/// Thrown when a document that failed validation is converted or stored.
class InvalidRecord : public std::runtime_error {
 public:
  explicit InvalidRecord(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Renames legacy top-level keys: `bug` -> `flaw`, `fix` -> `mitigation`.
/// Throws RenameConflict when both the old and new key are present.
Document normalize_record(const Document& raw);

/// Inserts every schema default that is absent. Present fields are never
/// touched. Paths of inserted fields are appended to `applied` if given.
Document apply_defaults(const Document& doc, std::vector<std::string>* applied = nullptr);

/// Checks every schema rule and reports all violations.
ValidationReport validate_record(const Document& doc);

struct PipelineResult {
  Document doc;
  ValidationReport report;
};

/// normalize_record -> apply_defaults -> validate_record. A rename conflict
/// is reported as a violation rather than thrown.
PipelineResult run_pipeline(const Document& raw);

/// Typed view of a document that passed validation; throws InvalidRecord
/// otherwise.
FlawRecord record_from_document(const Document& doc);
Document record_to_document(const FlawRecord& record);

/// Allowed values, exactly as the schema lists them (with the
/// "runtime crash" / "testing violation" pair split in two).
const std::vector<std::string>& allowed_phases();
const std::vector<std::string>& allowed_architectural_locations();
const std::vector<std::string>& allowed_languages();
const std::vector<std::string>& allowed_detection_methods();
const std::vector<std::string>& allowed_reporter_relationships();

/// Regex sources, bit-exact.
inline constexpr std::string_view kCvePattern = "^CVE-[0-9]*-[0-9]*$|^None$";
inline constexpr std::string_view kCwePattern = "^CWE-[0-9]*.*$|^None$";
inline constexpr std::string_view kSubsystemPolicyPattern =
    "^(sensing|actuation|communication|cognition|UI|power).*$|^N/A$";

inline constexpr std::size_t kTitleMaxLength = 100;

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

}  // namespace rvd
