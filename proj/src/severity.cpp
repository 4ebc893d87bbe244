#include "rvd/severity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rvd {
namespace {

const std::map<std::string, std::vector<std::string>, std::less<>>& base_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> table{
      {"AV", {"N", "A", "L", "P"}}, {"AC", {"L", "H"}}, {"PR", {"N", "L", "H"}},
      {"UI", {"N", "R"}},           {"S", {"U", "C"}},  {"C", {"H", "L", "N"}},
      {"I", {"H", "L", "N"}},       {"A", {"H", "L", "N"}},
  };
  return table;
}

double weight_av(const std::string& v) {
  if (v == "N") return 0.85;
  if (v == "A") return 0.62;
  if (v == "L") return 0.55;
  return 0.2;
}

double weight_ac(const std::string& v) { return v == "L" ? 0.77 : 0.44; }

double weight_pr(const std::string& v, bool scope_changed) {
  if (v == "N") return 0.85;
  if (v == "L") return scope_changed ? 0.68 : 0.62;
  return scope_changed ? 0.5 : 0.27;
}

double weight_ui(const std::string& v) { return v == "N" ? 0.85 : 0.62; }

double weight_cia(const std::string& v) {
  if (v == "H") return 0.56;
  if (v == "L") return 0.22;
  return 0.0;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool is_number(const Document& v) { return v.is_number() && !v.is_boolean(); }

// Shared rule for rvss-score and cvss-score: "None" or a number in [0,10].
void check_score(const Document& v, const std::string& field, ValidationReport& report) {
  if (v.is_string()) {
    if (v.get<std::string>() != "None")
      report.add(field, "regex", "string score must match ^None$");
    return;
  }
  if (!is_number(v)) {
    report.add(field, "type", "must be a number or the string \"None\"");
    return;
  }
  const double d = v.get<double>();
  if (!std::isfinite(d) || d < 0.0) report.add(field, "min", "must be >= 0");
  else if (d > 10.0) report.add(field, "max", "must be <= 10");
}

}  // namespace

MetricVector::MetricVector(std::optional<std::string> prefix, std::vector<MetricEntry> entries)
    : prefix_(std::move(prefix)), entries_(std::move(entries)) {}

std::vector<MetricEntry> MetricVector::metrics() const {
  std::vector<MetricEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [](const MetricEntry& e) { return !e.extension; });
  return out;
}

std::vector<MetricEntry> MetricVector::extensions() const {
  std::vector<MetricEntry> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [](const MetricEntry& e) { return e.extension; });
  return out;
}

std::optional<std::string> MetricVector::get(std::string_view key) const {
  for (const auto& e : entries_)
    if (e.key == key) return e.value;
  return std::nullopt;
}

bool MetricVector::has_complete_base() const {
  return std::all_of(base_metric_keys().begin(), base_metric_keys().end(),
                     [this](const std::string& k) {
                       auto it = std::find_if(entries_.begin(), entries_.end(),
                                              [&](const MetricEntry& e) { return e.key == k && !e.extension; });
                       return it != entries_.end();
                     });
}

const std::vector<std::string>& base_metric_keys() {
  static const std::vector<std::string> keys{"AV", "AC", "PR", "UI", "S", "C", "I", "A"};
  return keys;
}

const std::vector<std::string>& base_metric_values(std::string_view key) {
  static const std::vector<std::string> none;
  const auto& table = base_table();
  auto it = table.find(key);
  return it == table.end() ? none : it->second;
}

MetricVector parse_vector(std::string_view text, VectorGrammar grammar) {
  if (text.empty()) throw VectorError("empty vector");
  auto tokens = split(text, '/');

  std::optional<std::string> prefix;
  bool opaque = grammar == VectorGrammar::Opaque;
  {
    const auto first = tokens.front();
    const auto colon = first.find(':');
    const auto head = first.substr(0, colon);
    if (colon != std::string_view::npos && (head == "CVSS" || head == "RVSS")) {
      const auto version = first.substr(colon + 1);
      if (version.empty()) throw VectorError("empty version in prefix '" + std::string(first) + "'");
      if (head == "CVSS" && version != "3.0" && version != "3.1")
        throw VectorError("unsupported CVSS version '" + std::string(version) + "'");
      if (head == "RVSS") opaque = true;
      prefix = std::string(first);
      tokens.erase(tokens.begin());
      if (tokens.empty()) throw VectorError("vector has a prefix but no metrics");
    }
  }

  std::vector<MetricEntry> entries;
  for (const auto token : tokens) {
    const auto colon = token.find(':');
    if (token.empty() || colon == std::string_view::npos)
      throw VectorError("malformed token '" + std::string(token) + "' (expected KEY:VAL)");
    MetricEntry e{std::string(token.substr(0, colon)), std::string(token.substr(colon + 1)), false};
    if (e.key.empty() || e.value.empty() || e.value.find(':') != std::string::npos)
      throw VectorError("malformed token '" + std::string(token) + "' (expected KEY:VAL)");
    for (const auto& seen : entries)
      if (seen.key == e.key) throw VectorError("duplicate metric '" + e.key + "'");
    const auto& legal = base_metric_values(e.key);
    if (legal.empty()) {
      e.extension = true;
    } else if (!opaque && std::find(legal.begin(), legal.end(), e.value) == legal.end()) {
      throw VectorError("illegal value '" + e.value + "' for metric " + e.key);
    }
    entries.push_back(std::move(e));
  }
  return MetricVector(std::move(prefix), std::move(entries));
}

std::string render_vector(const MetricVector& v) {
  std::string out;
  if (v.prefix()) out = *v.prefix();
  for (const auto& e : v.entries()) {
    if (!out.empty()) out += '/';
    out += e.key;
    out += ':';
    out += e.value;
  }
  return out;
}

double roundup(double x) {
  const auto scaled = std::llround(x * 100000.0);
  if (scaled % 10000 == 0) return static_cast<double>(scaled) / 100000.0;
  return (std::floor(static_cast<double>(scaled) / 10000.0) + 1.0) / 10.0;
}

double cvss_base_score(const MetricVector& v) {
  std::map<std::string, std::string, std::less<>> m;
  for (const auto& key : base_metric_keys()) {
    auto value = v.get(key);
    if (!value) throw VectorError("missing base metric " + key);
    const auto& legal = base_metric_values(key);
    if (std::find(legal.begin(), legal.end(), *value) == legal.end())
      throw VectorError("illegal value '" + *value + "' for metric " + key);
    m[key] = *value;
  }

  const bool changed = m["S"] == "C";
  const double iss = 1.0 - (1.0 - weight_cia(m["C"])) * (1.0 - weight_cia(m["I"])) * (1.0 - weight_cia(m["A"]));
  const double impact = changed ? 7.52 * (iss - 0.029) - 3.25 * std::pow(iss - 0.02, 15) : 6.42 * iss;
  const double exploitability =
      8.22 * weight_av(m["AV"]) * weight_ac(m["AC"]) * weight_pr(m["PR"], changed) * weight_ui(m["UI"]);

  if (impact <= 0.0) return 0.0;
  if (changed) return roundup(std::min(1.08 * (impact + exploitability), 10.0));
  return roundup(std::min(impact + exploitability, 10.0));
}

std::string to_string(SeverityBucket b) {
  switch (b) {
    case SeverityBucket::None: return "None";
    case SeverityBucket::Low: return "Low";
    case SeverityBucket::Medium: return "Medium";
    case SeverityBucket::High: return "High";
    case SeverityBucket::Critical: return "Critical";
  }
  return "None";
}

std::string to_string(Imputation i) {
  switch (i) {
    case Imputation::Pessimistic: return "pessimistic";
    case Imputation::Optimistic: return "optimistic";
    case Imputation::None: return "none";
  }
  return "none";
}

Imputation imputation_from_string(std::string_view s) {
  if (s == "pessimistic") return Imputation::Pessimistic;
  if (s == "optimistic") return Imputation::Optimistic;
  if (s == "none") return Imputation::None;
  throw std::invalid_argument("unknown imputation mode '" + std::string(s) + "'");
}

SeverityBucket bucket(Score score, Imputation imputation) {
  if (!score) {
    switch (imputation) {
      case Imputation::Pessimistic: return SeverityBucket::Critical;
      case Imputation::Optimistic: return SeverityBucket::Low;
      case Imputation::None: throw std::invalid_argument("unscored flaw and imputation is 'none'");
    }
  }
  const double s = *score;
  if (!(s >= 0.0 && s <= 10.0)) throw std::invalid_argument("score outside [0,10]");
  // Scores live on a one-decimal grid; compare in tenths to avoid 3.9000001 style drift.
  const auto tenths = std::llround(s * 10.0);
  if (tenths == 0) return SeverityBucket::None;
  if (tenths < 40) return SeverityBucket::Low;
  if (tenths < 70) return SeverityBucket::Medium;
  if (tenths < 90) return SeverityBucket::High;
  return SeverityBucket::Critical;
}

bool is_placeholder_vector(std::string_view text) {
  return text.empty() || text == "N/A" || text == "None";
}

ValidationReport validate_severity_block(const Document& block, const std::string& path) {
  ValidationReport report;
  if (!block.is_object()) {
    report.add(path, "type", "must be a mapping");
    return report;
  }

  static const std::vector<std::string> known{"rvss-score", "rvss-vector", "severity-description",
                                              "cvss-score", "cvss-vector"};
  for (const auto& [key, value] : block.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      report.add(path + "." + key, "unknown", "unknown field");
  }

  auto field = [&](const char* name) { return path + "." + name; };

  if (!block.contains("rvss-score")) report.add(field("rvss-score"), "required", "required field");
  else check_score(block["rvss-score"], field("rvss-score"), report);

  if (block.contains("cvss-score")) check_score(block["cvss-score"], field("cvss-score"), report);

  for (const char* name : {"rvss-vector", "severity-description"}) {
    if (!block.contains(name)) report.add(field(name), "required", "required field");
    else if (!block[name].is_string()) report.add(field(name), "type", "must be a string");
  }
  if (block.contains("cvss-vector") && !block["cvss-vector"].is_string())
    report.add(field("cvss-vector"), "type", "must be a string");

  if (block.contains("rvss-vector") && block["rvss-vector"].is_string()) {
    const auto text = block["rvss-vector"].get<std::string>();
    if (!is_placeholder_vector(text)) {
      try {
        parse_vector(text, VectorGrammar::Opaque);
      } catch (const VectorError& e) {
        report.add(field("rvss-vector"), "vector", e.what());
      }
    }
  }

  if (block.contains("cvss-vector") && block["cvss-vector"].is_string()) {
    const auto text = block["cvss-vector"].get<std::string>();
    if (!is_placeholder_vector(text)) {
      try {
        const auto vec = parse_vector(text);
        const double computed = cvss_base_score(vec);
        if (block.contains("cvss-score") && is_number(block["cvss-score"])) {
          const double stated = block["cvss-score"].get<double>();
          if (std::llround(stated * 10.0) != std::llround(computed * 10.0))
            report.add(field("cvss-score"), "consistency",
                       "stated " + format_double(stated) + " but vector scores " + format_double(computed));
        }
      } catch (const VectorError& e) {
        report.add(field("cvss-vector"), "vector", e.what());
      }
    }
  }
  return report;
}

namespace {

Score score_from(const Document& v) {
  if (v.is_string()) return std::nullopt;
  return v.get<double>();
}

}  // namespace

Document score_to_document(const Score& s) {
  if (!s) return "None";
  return *s;
}

SeverityBlock severity_from_document(const Document& block) {
  SeverityBlock out;
  out.rvss_score = score_from(block.at("rvss-score"));
  out.rvss_vector = block.at("rvss-vector").get<std::string>();
  out.severity_description = block.at("severity-description").get<std::string>();
  if (block.contains("cvss-score")) out.cvss_score = score_from(block["cvss-score"]);
  if (block.contains("cvss-vector")) out.cvss_vector = block["cvss-vector"].get<std::string>();
  return out;
}

Document severity_to_document(const SeverityBlock& block) {
  Document out = Document::object();
  out["rvss-score"] = score_to_document(block.rvss_score);
  out["rvss-vector"] = block.rvss_vector;
  out["severity-description"] = block.severity_description;
  if (block.cvss_score) out["cvss-score"] = score_to_document(*block.cvss_score);
  if (block.cvss_vector) out["cvss-vector"] = *block.cvss_vector;
  return out;
}

}  // namespace rvd
