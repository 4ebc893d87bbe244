#pragma once

#include <string>
#include <vector>

namespace rvd {

struct Violation {
  std::string field;  // dotted path, e.g. "flaw.phase"
  std::string rule;   // "required", "type", "allowed", "regex", "maxlength", ...
  std::string message;

  bool operator==(const Violation&) const = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  std::vector<Violation> warnings;  // non-fatal
  std::vector<std::string> applied_defaults;

  bool ok() const { return violations.empty(); }

  void add(std::string field, std::string rule, std::string message) {
    violations.push_back({std::move(field), std::move(rule), std::move(message)});
  }
  void warn(std::string field, std::string rule, std::string message) {
    warnings.push_back({std::move(field), std::move(rule), std::move(message)});
  }
  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
  }

  bool has(const std::string& field, const std::string& rule) const {
    for (const auto& v : violations)
      if (v.field == field && v.rule == rule) return true;
    return false;
  }

  bool operator==(const ValidationReport&) const = default;
};

}  // namespace rvd
