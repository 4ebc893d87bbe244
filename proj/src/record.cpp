#include "rvd/record.hpp"

#include "rvd/date.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

namespace rvd {
namespace {

using Check = void (*)(const Document&, const std::string&, ValidationReport&);

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

bool is_number(const Document& v) { return v.is_number() && !v.is_boolean(); }

bool is_string_list(const Document& v) {
  return v.is_array() && std::all_of(v.begin(), v.end(), [](const Document& e) { return e.is_string(); });
}

const std::regex& cve_regex() {
  static const std::regex re{std::string(kCvePattern)};
  return re;
}
const std::regex& cwe_regex() {
  static const std::regex re{std::string(kCwePattern)};
  return re;
}
const std::regex& subsystem_regex() {
  static const std::regex re{std::string(kSubsystemPolicyPattern)};
  return re;
}

void check_string(const Document& v, const std::string& field, ValidationReport& r) {
  if (!v.is_string()) r.add(field, "type", "must be a string");
}

void check_text_or_list(const Document& v, const std::string& field, ValidationReport& r) {
  if (!v.is_string() && !is_string_list(v)) r.add(field, "type", "must be a string or a list of strings");
}

void check_allowed(const Document& v, const std::string& field, const std::vector<std::string>& allowed,
                   ValidationReport& r) {
  if (!v.is_string()) {
    r.add(field, "type", "must be a string");
  } else if (!contains(allowed, v.get<std::string>())) {
    r.add(field, "allowed", "unallowed value '" + v.get<std::string>() + "'");
  }
}

void check_date(const Document& v, const std::string& field, ValidationReport& r) {
  if (!v.is_string()) {
    r.add(field, "type", "must be a string");
    return;
  }
  const auto s = v.get<std::string>();
  if (!s.empty() && !parse_iso_date(s)) r.add(field, "date", "'" + s + "' is not a YYYY-MM-DD date");
}

void check_languages(const Document& v, const std::string& field, ValidationReport& r) {
  if (v.is_string()) {
    check_allowed(v, field, allowed_languages(), r);
  } else if (is_string_list(v)) {
    for (const auto& item : v)
      if (!contains(allowed_languages(), item.get<std::string>()))
        r.add(field, "allowed", "unallowed value '" + item.get<std::string>() + "'");
  } else {
    r.add(field, "type", "must be a string or a list of strings");
  }
}

struct FieldRule {
  const char* name;
  bool required;
  void (*check)(const Document&, const std::string&, ValidationReport&);
  Document (*fallback)();  // nullptr: no default
};

Document empty_text() { return ""; }
Document na_text() { return "N/A"; }
Document none_text() { return "None"; }
Document unknown_text() { return "unknown"; }

// Sub-schema of the `flaw` block, in schema order.
const std::vector<FieldRule>& flaw_rules() {
  static const std::vector<FieldRule> rules{
      {"phase", true, [](const Document& v, const std::string& f, ValidationReport& r) { check_allowed(v, f, allowed_phases(), r); }, unknown_text},
      {"specificity", true, check_string, na_text},
      {"architectural-location", true, [](const Document& v, const std::string& f, ValidationReport& r) { check_allowed(v, f, allowed_architectural_locations(), r); }, na_text},
      {"application", true, check_string, na_text},
      {"subsystem", true,
       [](const Document& v, const std::string& f, ValidationReport& r) {
         check_string(v, f, r);
         if (v.is_string() && !std::regex_search(v.get<std::string>(), subsystem_regex()))
           r.warn(f, "policy", "'" + v.get<std::string>() + "' does not name a known subsystem");
       },
       na_text},
      {"package", false, check_text_or_list, na_text},
      {"languages", true, check_languages, none_text},
      {"date-detected", true, check_date, empty_text},
      {"detected-by", true, check_string, empty_text},
      {"detected-by-method", true, [](const Document& v, const std::string& f, ValidationReport& r) { check_allowed(v, f, allowed_detection_methods(), r); }, na_text},
      {"date-reported", true, check_date, empty_text},
      {"reported-by", true, check_string, empty_text},
      {"reported-by-relationship", true, [](const Document& v, const std::string& f, ValidationReport& r) { check_allowed(v, f, allowed_reporter_relationships(), r); }, na_text},
      {"issue", false, check_string, empty_text},
      {"reproducibility", true, check_string, empty_text},
      {"trace", true, check_string, empty_text},
      {"reproduction", true, check_string, empty_text},
      {"reproduction-image", true, check_string, empty_text},
  };
  return rules;
}

const std::vector<FieldRule>& exploitation_rules() {
  static const std::vector<FieldRule> rules{
      {"description", true, check_string, empty_text},
      {"exploitation-image", true, check_string, empty_text},
      {"exploitation-vector", true, check_string, empty_text},
  };
  return rules;
}

const std::vector<FieldRule>& mitigation_rules() {
  static const std::vector<FieldRule> rules{
      {"description", true, check_string, empty_text},
      {"pull-request", false,
       [](const Document& v, const std::string& f, ValidationReport& r) {
         if (!v.is_string() && !is_number(v)) r.add(f, "type", "must be a string or a number");
       },
       empty_text},
  };
  return rules;
}

void check_id(const Document& v, const std::string& f, ValidationReport& r) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s.empty()) r.add(f, "empty", "must not be empty");
    else if (!std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      r.add(f, "type", "string id must be a non-negative decimal integer");
    return;
  }
  if (!is_number(v)) {
    r.add(f, "type", "must be a string or a number");
    return;
  }
  const double d = v.get<double>();
  if (!v.is_number_integer() && std::floor(d) != d) r.add(f, "type", "must be an integer");
  else if (d < 0) r.add(f, "min", "must be >= 0");
}

void check_title(const Document& v, const std::string& f, ValidationReport& r) {
  if (!v.is_string()) {
    r.add(f, "type", "must be a string");
  } else if (utf8_length(v.get<std::string>()) > kTitleMaxLength) {
    r.add(f, "maxlength", "longer than " + std::to_string(kTitleMaxLength) + " characters");
  }
}

void check_type(const Document& v, const std::string& f, ValidationReport& r) {
  static const std::vector<std::string> allowed{"bug", "weakness", "vulnerability", "exposure"};
  check_allowed(v, f, allowed, r);
}

void check_regex(const Document& v, const std::string& f, const std::regex& re, std::string_view pattern,
                 ValidationReport& r) {
  if (!v.is_string()) {
    r.add(f, "type", "must be a string");
  } else if (!std::regex_search(v.get<std::string>(), re)) {
    r.add(f, "regex", "'" + v.get<std::string>() + "' does not match " + std::string(pattern));
  }
}

void check_vendor(const Document& v, const std::string& f, ValidationReport& r) {
  if (!v.is_null() && !v.is_string()) r.add(f, "type", "must be a string or null");
}

void validate_block(const Document& block, const std::string& path, const std::vector<FieldRule>& rules,
                    ValidationReport& r) {
  if (!block.is_object()) {
    r.add(path, "type", "must be a mapping");
    return;
  }
  for (const auto& [key, value] : block.items()) {
    const bool known = std::any_of(rules.begin(), rules.end(), [&](const FieldRule& rule) { return key == rule.name; });
    if (!known) r.add(path + "." + key, "unknown", "unknown field");
  }
  for (const auto& rule : rules) {
    const std::string field = path + "." + rule.name;
    if (!block.contains(rule.name)) {
      if (rule.required) r.add(field, "required", "required field");
      continue;
    }
    rule.check(block[rule.name], field, r);
  }
}

void default_block(Document& block, const std::string& path, const std::vector<FieldRule>& rules,
                   std::vector<std::string>* applied) {
  if (!block.is_object()) return;
  for (const auto& rule : rules) {
    if (rule.fallback == nullptr || block.contains(rule.name)) continue;
    block[rule.name] = rule.fallback();
    if (applied) applied->push_back(path + "." + rule.name);
  }
}

const std::vector<std::string>& top_level_keys() {
  static const std::vector<std::string> keys{"id",     "title",    "type",  "description",  "cwe",
                                             "cve",    "keywords", "system", "vendor",      "severity",
                                             "links",  "flaw",     "exploitation", "mitigation"};
  return keys;
}

TextOrList text_or_list(const Document& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.get<std::vector<std::string>>();
}

Document text_or_list_document(const TextOrList& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  Document out = Document::array();
  for (const auto& item : std::get<std::vector<std::string>>(v)) out.push_back(item);
  return out;
}

}  // namespace

std::string to_string(FlawType t) {
  switch (t) {
    case FlawType::Bug: return "bug";
    case FlawType::Weakness: return "weakness";
    case FlawType::Vulnerability: return "vulnerability";
    case FlawType::Exposure: return "exposure";
  }
  return "bug";
}

std::optional<FlawType> flaw_type_from_string(std::string_view s) {
  if (s == "bug") return FlawType::Bug;
  if (s == "weakness") return FlawType::Weakness;
  if (s == "vulnerability") return FlawType::Vulnerability;
  if (s == "exposure") return FlawType::Exposure;
  return std::nullopt;
}

bool taxonomy_equivalent(FlawType a, FlawType b) {
  auto canon = [](FlawType t) { return t == FlawType::Weakness ? FlawType::Bug : t; };
  return canon(a) == canon(b);
}

FlawType taxonomy_classify(bool has_exploit, bool is_config_error) {
  if (is_config_error) return FlawType::Exposure;
  return has_exploit ? FlawType::Vulnerability : FlawType::Bug;
}

std::vector<std::string> entries_of(const TextOrList& v) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    if (s->empty()) return {};
    return {*s};
  }
  return std::get<std::vector<std::string>>(v);
}

const std::vector<std::string>& allowed_phases() {
  static const std::vector<std::string> v{"programming-time", "build-time", "compile-time",
                                          "deployment-time",  "runtime",    "runtime-initialization",
                                          "runtime-operation", "testing",   "unknown"};
  return v;
}

const std::vector<std::string>& allowed_architectural_locations() {
  static const std::vector<std::string> v{"application-specific code", "application-specific", "platform-code",
                                          "platform code", "ROS-specific", "third-party", "N/A"};
  return v;
}

const std::vector<std::string>& allowed_languages() {
  static const std::vector<std::string> v{"Python", "python", "cmake", "CMake", "C", "C++", "package.xml",
                                          "launch XML", "URScript", "shell", "msg", "srv", "xacro", "urdf",
                                          "None", "rosparam YAML", "XML", "ASCII STL", "N/A", "YAML",
                                          "Package XML"};
  return v;
}

const std::vector<std::string>& allowed_detection_methods() {
  static const std::vector<std::string> v{"build system",      "compiler",       "assertions",
                                          "runtime detection", "runtime crash",  "testing violation",
                                          "testing static",    "testing dynamic", "N/A"};
  return v;
}

const std::vector<std::string>& allowed_reporter_relationships() {
  static const std::vector<std::string> v{"guest user", "contributor", "member developer", "automatic",
                                          "security researcher", "N/A"};
  return v;
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

RenameConflict::RenameConflict(std::string old_key, std::string new_key)
    : std::runtime_error("both '" + old_key + "' and '" + new_key + "' are present; '" + old_key +
                         "' is a legacy name for '" + new_key + "'"),
      old_key_(std::move(old_key)),
      new_key_(std::move(new_key)) {}

InvalidRecord::InvalidRecord(ValidationReport report)
    : std::runtime_error("record failed validation with " + std::to_string(report.violations.size()) +
                         " violation(s)"),
      report_(std::move(report)) {}

Document normalize_record(const Document& raw) {
  if (!raw.is_object()) return raw;
  static const std::pair<const char*, const char*> renames[] = {{"bug", "flaw"}, {"fix", "mitigation"}};
  for (const auto& [from, to] : renames)
    if (raw.contains(from) && raw.contains(to)) throw RenameConflict(from, to);

  Document out = Document::object();
  for (const auto& [key, value] : raw.items()) {
    std::string name = key;
    for (const auto& [from, to] : renames)
      if (key == from) name = to;
    out[name] = value;
  }
  return out;
}

Document apply_defaults(const Document& doc, std::vector<std::string>* applied) {
  if (!doc.is_object()) return doc;
  Document out = doc;
  auto set_default = [&](const char* key, Document value) {
    if (out.contains(key)) return;
    out[key] = std::move(value);
    if (applied) applied->push_back(key);
  };
  set_default("id", 0);
  set_default("type", "bug");
  set_default("cwe", "None");
  set_default("cve", "None");
  set_default("keywords", "");
  set_default("system", "");
  set_default("vendor", nullptr);
  set_default("links", "None");
  // The schema's own '' default for this block would fail its sub-schema,
  // so an absent block becomes a mapping of defaulted sub-fields.
  set_default("exploitation", Document::object());

  if (out.contains("flaw")) default_block(out["flaw"], "flaw", flaw_rules(), applied);
  default_block(out["exploitation"], "exploitation", exploitation_rules(), applied);
  if (out.contains("mitigation")) default_block(out["mitigation"], "mitigation", mitigation_rules(), applied);
  return out;
}

ValidationReport validate_record(const Document& doc) {
  ValidationReport r;
  if (!doc.is_object()) {
    r.add("", "type", "record must be a mapping");
    return r;
  }
  for (const auto& [key, value] : doc.items())
    if (!contains(top_level_keys(), key)) r.add(key, "unknown", "unknown field");

  auto field = [&](const char* name, bool required, auto&& check) {
    if (!doc.contains(name)) {
      if (required) r.add(name, "required", "required field");
      return;
    }
    check(doc[name], std::string(name), r);
  };

  field("id", true, check_id);
  field("title", true, check_title);
  field("type", true, check_type);
  field("description", true, check_string);
  field("cwe", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    check_regex(v, f, cwe_regex(), kCwePattern, rep);
  });
  field("cve", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    check_regex(v, f, cve_regex(), kCvePattern, rep);
  });
  field("keywords", true, check_text_or_list);
  field("system", true, check_string);
  field("vendor", true, check_vendor);
  field("severity", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    rep.merge(validate_severity_block(v, f));
  });
  field("links", false, check_text_or_list);
  field("flaw", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    validate_block(v, f, flaw_rules(), rep);
  });
  field("exploitation", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    validate_block(v, f, exploitation_rules(), rep);
  });
  field("mitigation", true, [](const Document& v, const std::string& f, ValidationReport& rep) {
    validate_block(v, f, mitigation_rules(), rep);
  });
  return r;
}

PipelineResult run_pipeline(const Document& raw) {
  PipelineResult result;
  if (!raw.is_object()) {
    result.doc = raw;
    result.report.add("", "type", "record must be a mapping");
    return result;
  }
  Document normalized;
  try {
    normalized = normalize_record(raw);
  } catch (const RenameConflict& e) {
    result.doc = raw;
    result.report.add(e.old_key(), "rename", e.what());
    return result;
  }
  std::vector<std::string> applied;
  result.doc = apply_defaults(normalized, &applied);
  result.report = validate_record(result.doc);
  result.report.applied_defaults = std::move(applied);
  return result;
}

FlawRecord record_from_document(const Document& doc) {
  auto report = validate_record(doc);
  if (!report.ok()) throw InvalidRecord(std::move(report));

  FlawRecord rec;
  const auto& id = doc["id"];
  rec.id = id.is_string() ? std::stoll(id.get<std::string>()) : id.get<std::int64_t>();
  rec.title = doc["title"].get<std::string>();
  rec.type = *flaw_type_from_string(doc["type"].get<std::string>());
  rec.description = doc["description"].get<std::string>();
  rec.cwe = doc["cwe"].get<std::string>();
  rec.cve = doc["cve"].get<std::string>();
  rec.keywords = text_or_list(doc["keywords"]);
  rec.system = doc["system"].get<std::string>();
  if (!doc["vendor"].is_null()) rec.vendor = doc["vendor"].get<std::string>();
  rec.severity = severity_from_document(doc["severity"]);
  rec.links = doc.contains("links") ? text_or_list(doc["links"]) : TextOrList{std::string("None")};

  const auto& f = doc["flaw"];
  auto& c = rec.flaw;
  c.phase = f["phase"].get<std::string>();
  c.specificity = f["specificity"].get<std::string>();
  c.architectural_location = f["architectural-location"].get<std::string>();
  c.application = f["application"].get<std::string>();
  c.subsystem = f["subsystem"].get<std::string>();
  c.package = f.contains("package") ? text_or_list(f["package"]) : TextOrList{std::string("N/A")};
  c.languages = text_or_list(f["languages"]);
  c.date_detected = f["date-detected"].get<std::string>();
  c.detected_by = f["detected-by"].get<std::string>();
  c.detected_by_method = f["detected-by-method"].get<std::string>();
  c.date_reported = f["date-reported"].get<std::string>();
  c.reported_by = f["reported-by"].get<std::string>();
  c.reported_by_relationship = f["reported-by-relationship"].get<std::string>();
  c.issue = f.contains("issue") ? f["issue"].get<std::string>() : "";
  c.reproducibility = f["reproducibility"].get<std::string>();
  c.trace = f["trace"].get<std::string>();
  c.reproduction = f["reproduction"].get<std::string>();
  c.reproduction_image = f["reproduction-image"].get<std::string>();

  const auto& e = doc["exploitation"];
  rec.exploitation = {e["description"].get<std::string>(), e["exploitation-image"].get<std::string>(),
                      e["exploitation-vector"].get<std::string>()};

  const auto& m = doc["mitigation"];
  rec.mitigation.description = m["description"].get<std::string>();
  if (m.contains("pull-request")) {
    const auto& pr = m["pull-request"];
    if (pr.is_string()) rec.mitigation.pull_request = pr.get<std::string>();
    else rec.mitigation.pull_request = pr.get<double>();
  }
  return rec;
}

Document record_to_document(const FlawRecord& rec) {
  Document doc = Document::object();
  doc["id"] = rec.id;
  doc["title"] = rec.title;
  doc["type"] = to_string(rec.type);
  doc["description"] = rec.description;
  doc["cwe"] = rec.cwe;
  doc["cve"] = rec.cve;
  doc["keywords"] = text_or_list_document(rec.keywords);
  doc["system"] = rec.system;
  doc["vendor"] = rec.vendor ? Document(*rec.vendor) : Document(nullptr);
  doc["severity"] = severity_to_document(rec.severity);
  doc["links"] = text_or_list_document(rec.links);

  const auto& c = rec.flaw;
  Document f = Document::object();
  f["phase"] = c.phase;
  f["specificity"] = c.specificity;
  f["architectural-location"] = c.architectural_location;
  f["application"] = c.application;
  f["subsystem"] = c.subsystem;
  f["package"] = text_or_list_document(c.package);
  f["languages"] = text_or_list_document(c.languages);
  f["date-detected"] = c.date_detected;
  f["detected-by"] = c.detected_by;
  f["detected-by-method"] = c.detected_by_method;
  f["date-reported"] = c.date_reported;
  f["reported-by"] = c.reported_by;
  f["reported-by-relationship"] = c.reported_by_relationship;
  f["issue"] = c.issue;
  f["reproducibility"] = c.reproducibility;
  f["trace"] = c.trace;
  f["reproduction"] = c.reproduction;
  f["reproduction-image"] = c.reproduction_image;
  doc["flaw"] = std::move(f);

  doc["exploitation"] = Document{{"description", rec.exploitation.description},
                                 {"exploitation-image", rec.exploitation.image},
                                 {"exploitation-vector", rec.exploitation.vector}};

  Document m = Document::object();
  m["description"] = rec.mitigation.description;
  if (const auto* s = std::get_if<std::string>(&rec.mitigation.pull_request)) {
    m["pull-request"] = *s;
  } else {
    const double d = std::get<double>(rec.mitigation.pull_request);
    if (std::floor(d) == d && std::abs(d) < 9.0e15) m["pull-request"] = static_cast<std::int64_t>(d);
    else m["pull-request"] = d;
  }
  doc["mitigation"] = std::move(m);
  return doc;
}

}  // namespace rvd
