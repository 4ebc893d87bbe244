#include <doctest.h>

#include "rvd/date.hpp"
#include "rvd/record.hpp"
#include "synth.hpp"

#include <random>
#include <regex>

using namespace rvd;
using rvd::testing::minimal_doc;

namespace {

ValidationReport check(const Document& raw) { return run_pipeline(raw).report; }

Document with(Document doc, const std::string& key, Document value) {
  doc[key] = std::move(value);
  return doc;
}

Document with_flaw(Document doc, const std::string& key, Document value) {
  doc["flaw"][key] = std::move(value);
  return doc;
}

}  // namespace

TEST_CASE("flaw type taxonomy") {
  CHECK(flaw_type_from_string("weakness") == FlawType::Weakness);
  CHECK_FALSE(flaw_type_from_string("exploit"));
  CHECK(taxonomy_equivalent(FlawType::Bug, FlawType::Weakness));
  CHECK(taxonomy_equivalent(FlawType::Weakness, FlawType::Bug));
  CHECK_FALSE(taxonomy_equivalent(FlawType::Bug, FlawType::Vulnerability));
  CHECK(FlawType::Bug != FlawType::Weakness);

  CHECK(taxonomy_classify(true, false) == FlawType::Vulnerability);
  CHECK(taxonomy_classify(false, false) == FlawType::Bug);
  CHECK(taxonomy_classify(true, true) == FlawType::Exposure);
  CHECK(taxonomy_classify(false, true) == FlawType::Exposure);
}

TEST_CASE("normalize_record renames legacy keys") {
  const auto out = normalize_record(Document{{"bug", {{"phase", "runtime"}}}});
  CHECK(out == Document{{"flaw", {{"phase", "runtime"}}}});

  const Document flaw{{"title", "t"}, {"flaw", {{"phase", "testing"}}}};
  CHECK(normalize_record(flaw) == flaw);

  const auto fixed = normalize_record(Document{{"fix", {{"description", "d"}}}, {"title", "t"}});
  CHECK(fixed.contains("mitigation"));
  CHECK_FALSE(fixed.contains("fix"));
  CHECK(normalize_record(fixed) == fixed);

  try {
    normalize_record(Document{{"fix", Document::object()}, {"mitigation", Document::object()}});
    FAIL("expected a rename conflict");
  } catch (const RenameConflict& e) {
    CHECK(e.old_key() == "fix");
    CHECK(e.new_key() == "mitigation");
    CHECK(std::string(e.what()).find("fix") != std::string::npos);
    CHECK(std::string(e.what()).find("mitigation") != std::string::npos);
  }
  CHECK_THROWS_AS(normalize_record(Document{{"bug", 1}, {"flaw", 2}}), RenameConflict);

  const auto report = check(with(minimal_doc(), "bug", Document::object()));
  CHECK(report.has("bug", "rename"));
}

TEST_CASE("apply_defaults fills every default-setter") {
  std::vector<std::string> applied;
  const auto out = apply_defaults(Document{{"title", "t"}, {"description", "d"}}, &applied);
  CHECK(out["type"] == "bug");
  CHECK(out["id"] == 0);
  CHECK(out["cwe"] == "None");
  CHECK(out["cve"] == "None");
  CHECK(out["keywords"] == "");
  CHECK(out["system"] == "");
  CHECK(out["vendor"].is_null());
  CHECK(out["links"] == "None");
  CHECK(out["exploitation"] ==
        Document{{"description", ""}, {"exploitation-image", ""}, {"exploitation-vector", ""}});
  CHECK(std::find(applied.begin(), applied.end(), "type") != applied.end());
  CHECK(std::find(applied.begin(), applied.end(), "title") == applied.end());

  const auto flaw = apply_defaults(Document{{"flaw", Document::object()}})["flaw"];
  CHECK(flaw["phase"] == "unknown");
  CHECK(flaw["specificity"] == "N/A");
  CHECK(flaw["architectural-location"] == "N/A");
  CHECK(flaw["application"] == "N/A");
  CHECK(flaw["subsystem"] == "N/A");
  CHECK(flaw["package"] == "N/A");
  CHECK(flaw["languages"] == "None");
  for (const char* key : {"date-detected", "detected-by", "date-reported", "reported-by", "issue", "reproducibility",
                          "trace", "reproduction", "reproduction-image"})
    CHECK(flaw[key] == "");
  CHECK(flaw["detected-by-method"] == "N/A");
  CHECK(flaw["reported-by-relationship"] == "N/A");

  const auto mitigation = apply_defaults(Document{{"mitigation", Document::object()}})["mitigation"];
  CHECK(mitigation == Document{{"description", ""}, {"pull-request", ""}});
}

TEST_CASE("apply_defaults leaves present fields alone and is idempotent") {
  const auto doc = with(minimal_doc(), "cve", "CVE-2019-13566");
  const auto once = apply_defaults(doc);
  CHECK(once["cve"] == "CVE-2019-13566");
  CHECK(apply_defaults(once) == once);
  CHECK(apply_defaults(apply_defaults(Document::object())) == apply_defaults(Document::object()));

  // A present but invalid value is not "repaired" by a default.
  const auto bad = apply_defaults(Document{{"type", 5}, {"flaw", {{"phase", nullptr}}}});
  CHECK(bad["type"] == 5);
  CHECK(bad["flaw"]["phase"].is_null());
}

TEST_CASE("minimal record validates") {
  const auto result = run_pipeline(minimal_doc());
  CHECK(result.report.ok());
  CHECK(result.report.warnings.empty());
  CHECK_FALSE(result.report.applied_defaults.empty());
}

TEST_CASE("validation is total") {
  auto doc = minimal_doc(std::string(101, 'x'));
  doc["type"] = "exploit";
  doc["cve"] = "CVE-2019-ABC";
  doc["flaw"]["phase"] = "later";
  doc["severity"]["rvss-score"] = 11;
  const auto report = check(doc);
  CHECK(report.has("title", "maxlength"));
  CHECK(report.has("type", "allowed"));
  CHECK(report.has("cve", "regex"));
  CHECK(report.has("flaw.phase", "allowed"));
  CHECK(report.has("severity.rvss-score", "max"));
  CHECK(report.violations.size() == 5);
}

TEST_CASE("title length counts characters") {
  CHECK(check(minimal_doc(std::string(100, 'x'))).ok());
  CHECK(check(minimal_doc(std::string(101, 'x'))).has("title", "maxlength"));
  std::string accented;
  for (int i = 0; i < 100; ++i) accented += "\xc3\xa9";
  CHECK(utf8_length(accented) == 100);
  CHECK(check(minimal_doc(accented)).ok());
  CHECK(check(minimal_doc(accented + "x")).has("title", "maxlength"));
}

TEST_CASE("required fields without defaults") {
  for (const char* key : {"title", "description", "severity", "flaw", "mitigation"}) {
    auto doc = minimal_doc();
    doc.erase(key);
    CAPTURE(key);
    CHECK(check(doc).has(key, "required"));
  }
  auto doc = minimal_doc();
  doc["severity"].erase("rvss-vector");
  CHECK(check(doc).has("severity.rvss-vector", "required"));
}

TEST_CASE("identifier rules") {
  CHECK(check(with(minimal_doc(), "id", 42)).ok());
  CHECK(check(with(minimal_doc(), "id", "42")).ok());
  CHECK(check(with(minimal_doc(), "id", -1)).has("id", "min"));
  CHECK(check(with(minimal_doc(), "id", "")).has("id", "empty"));
  CHECK(check(with(minimal_doc(), "id", "4x")).has("id", "type"));
  CHECK(check(with(minimal_doc(), "id", 1.5)).has("id", "type"));
  CHECK(check(with(minimal_doc(), "id", Document::array())).has("id", "type"));
  CHECK(record_from_document(run_pipeline(with(minimal_doc(), "id", "42")).doc).id == 42);
}

TEST_CASE("identifier regexes are applied bit-exactly") {
  const std::regex cve{std::string(kCvePattern)};
  const std::regex cwe{std::string(kCwePattern)};
  for (const char* ok : {"CVE-2019-13445", "CVE-2019-13566", "None", "CVE--", "CVE-2020-1"}) {
    CAPTURE(ok);
    CHECK(std::regex_search(std::string(ok), cve));
    CHECK(check(with(minimal_doc(), "cve", ok)).ok());
  }
  for (const char* bad : {"CVE-2019-1344a", "none", "cve-2019-13445", "CVE-2019", " CVE-2019-13445", ""}) {
    CAPTURE(bad);
    CHECK(check(with(minimal_doc(), "cve", bad)).has("cve", "regex"));
  }
  for (const char* ok : {"CWE-121", "CWE-", "CWE-121 Stack-based Buffer Overflow", "None"}) {
    CAPTURE(ok);
    CHECK(std::regex_search(std::string(ok), cwe));
    CHECK(check(with(minimal_doc(), "cwe", ok)).ok());
  }
  for (const char* bad : {"cwe-121", "121", "NONE", "xCWE-1"}) {
    CAPTURE(bad);
    CHECK(check(with(minimal_doc(), "cwe", bad)).has("cwe", "regex"));
  }
  CHECK(check(with(minimal_doc(), "cve", 2019)).has("cve", "type"));
}

TEST_CASE("allowed lists") {
  for (const auto& phase : allowed_phases()) CHECK(check(with_flaw(minimal_doc(), "phase", phase)).ok());
  for (const auto& loc : allowed_architectural_locations())
    CHECK(check(with_flaw(minimal_doc(), "architectural-location", loc)).ok());
  for (const auto& m : allowed_detection_methods())
    CHECK(check(with_flaw(minimal_doc(), "detected-by-method", m)).ok());
  for (const auto& rel : allowed_reporter_relationships())
    CHECK(check(with_flaw(minimal_doc(), "reported-by-relationship", rel)).ok());

  CHECK(check(with_flaw(minimal_doc(), "phase", "Runtime")).has("flaw.phase", "allowed"));
  CHECK(check(with_flaw(minimal_doc(), "architectural-location", "kernel"))
            .has("flaw.architectural-location", "allowed"));
  CHECK(check(with_flaw(minimal_doc(), "reported-by-relationship", "vendor"))
            .has("flaw.reported-by-relationship", "allowed"));

  for (const char* t : {"bug", "weakness", "vulnerability", "exposure"}) CHECK(check(with(minimal_doc(), "type", t)).ok());
  CHECK(check(with(minimal_doc(), "type", "exploit")).has("type", "allowed"));
}

TEST_CASE("detected-by-method splits the concatenated pair") {
  CHECK(check(with_flaw(minimal_doc(), "detected-by-method", "runtime crash")).ok());
  CHECK(check(with_flaw(minimal_doc(), "detected-by-method", "testing violation")).ok());
  CHECK(check(with_flaw(minimal_doc(), "detected-by-method", "runtime crashtesting violation"))
            .has("flaw.detected-by-method", "allowed"));
}

TEST_CASE("languages: string or list, members allowed") {
  CHECK(check(with_flaw(minimal_doc(), "languages", "C++")).ok());
  CHECK(check(with_flaw(minimal_doc(), "languages", Document::array({"C", "Python", "launch XML"}))).ok());
  CHECK(check(with_flaw(minimal_doc(), "languages", Document::array())).ok());
  CHECK(check(with_flaw(minimal_doc(), "languages", "Rust")).has("flaw.languages", "allowed"));
  CHECK(check(with_flaw(minimal_doc(), "languages", Document::array({"C", "Go"}))).has("flaw.languages", "allowed"));
  CHECK(check(with_flaw(minimal_doc(), "languages", 3)).has("flaw.languages", "type"));
}

TEST_CASE("subsystem policy is a warning") {
  const auto good = check(with_flaw(minimal_doc(), "subsystem", "sensing/lidar"));
  CHECK(good.ok());
  CHECK(good.warnings.empty());
  const auto loose = check(with_flaw(minimal_doc(), "subsystem", "navigation"));
  CHECK(loose.ok());
  REQUIRE(loose.warnings.size() == 1);
  CHECK(loose.warnings[0].field == "flaw.subsystem");
  CHECK(check(with_flaw(minimal_doc(), "subsystem", 4)).has("flaw.subsystem", "type"));
}

TEST_CASE("dates are ISO when present") {
  CHECK(check(with_flaw(minimal_doc(), "date-detected", "2019-07-02")).ok());
  CHECK(check(with_flaw(minimal_doc(), "date-reported", "2020-02-29")).ok());
  CHECK(check(with_flaw(minimal_doc(), "date-detected", "")).ok());
  CHECK(check(with_flaw(minimal_doc(), "date-detected", "02/07/2019")).has("flaw.date-detected", "date"));
  CHECK(check(with_flaw(minimal_doc(), "date-reported", "2019-02-29")).has("flaw.date-reported", "date"));
}

TEST_CASE("text-or-list fields") {
  CHECK(check(with(minimal_doc(), "keywords", Document::array({"ROS", "DoS"}))).ok());
  CHECK(check(with(minimal_doc(), "keywords", Document::array())).ok());
  CHECK(check(with(minimal_doc(), "keywords", "ROS")).ok());
  CHECK(check(with(minimal_doc(), "keywords", 7)).has("keywords", "type"));
  CHECK(check(with(minimal_doc(), "keywords", Document::array({"ok", 7}))).has("keywords", "type"));
  CHECK(check(with(minimal_doc(), "links", Document::array({"https://example.org"}))).ok());
  CHECK(check(with(minimal_doc(), "links", Document::object())).has("links", "type"));
  CHECK(check(with_flaw(minimal_doc(), "package", Document::array({"ros_comm"}))).ok());
}

TEST_CASE("vendor is nullable text") {
  CHECK(check(with(minimal_doc(), "vendor", nullptr)).ok());
  CHECK(check(with(minimal_doc(), "vendor", "ABB")).ok());
  CHECK(check(with(minimal_doc(), "vendor", 1)).has("vendor", "type"));
}

TEST_CASE("mitigation pull-request is text or number") {
  auto doc = minimal_doc();
  doc["mitigation"]["pull-request"] = 1234;
  CHECK(check(doc).ok());
  CHECK(std::get<double>(record_from_document(run_pipeline(doc).doc).mitigation.pull_request) == 1234.0);
  doc["mitigation"]["pull-request"] = "https://github.com/ros/ros_comm/pull/1771";
  CHECK(check(doc).ok());
  doc["mitigation"]["pull-request"] = Document::array();
  CHECK(check(doc).has("mitigation.pull-request", "type"));
}

TEST_CASE("exploitation block") {
  auto doc = minimal_doc();
  doc["exploitation"] = {{"description", "remote"}};
  const auto result = run_pipeline(doc);
  CHECK(result.report.ok());
  CHECK(result.doc["exploitation"]["exploitation-vector"] == "");
  doc["exploitation"] = "";
  CHECK(check(doc).has("exploitation", "type"));
  doc["exploitation"] = {{"exploitation-image", 3}};
  CHECK(check(doc).has("exploitation.exploitation-image", "type"));
}

TEST_CASE("unknown fields are rejected") {
  CHECK(check(with(minimal_doc(), "priority", "high")).has("priority", "unknown"));
  CHECK(check(with_flaw(minimal_doc(), "owner", "me")).has("flaw.owner", "unknown"));
  auto doc = minimal_doc();
  doc["severity"]["temporal"] = 1;
  CHECK(check(doc).has("severity.temporal", "unknown"));
}

TEST_CASE("non-mapping documents") {
  CHECK(check(Document::array()).has("", "type"));
  CHECK(check(Document("text")).has("", "type"));
  auto doc = minimal_doc();
  doc["flaw"] = "runtime";
  CHECK(check(doc).has("flaw", "type"));
}

TEST_CASE("record conversion is lossless") {
  auto doc = minimal_doc();
  doc["id"] = 17;
  doc["type"] = "vulnerability";
  doc["cve"] = "CVE-2019-13566";
  doc["cwe"] = "CWE-121";
  doc["keywords"] = Document::array({"ROS", "ros_comm"});
  doc["vendor"] = "Open Robotics";
  doc["links"] = Document::array({"https://example.org/a"});
  doc["severity"] = {{"rvss-score", 7.5},
                     {"rvss-vector", "RVSS:1.0/AV:RN/AC:L/PR:N/UI:N/Y:Z/S:U/C:N/I:N/A:H/H:U"},
                     {"severity-description", "high"},
                     {"cvss-score", 7.5},
                     {"cvss-vector", "CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U/C:N/I:N/A:H"}};
  doc["flaw"] = {{"phase", "runtime-operation"}, {"languages", Document::array({"C++"})}, {"package", "roscpp"}};
  doc["mitigation"] = {{"description", "bounds check"}, {"pull-request", 1771.5}};
  const auto record = record_from_document(run_pipeline(doc).doc);
  CHECK(record.id == 17);
  CHECK(record.vendor == std::optional<std::string>("Open Robotics"));
  CHECK(std::get<std::vector<std::string>>(record.keywords).size() == 2);

  const auto back = record_to_document(record);
  CHECK(run_pipeline(back).report.ok());
  CHECK(run_pipeline(back).doc == back);
  CHECK(record_from_document(back) == record);
  CHECK(record_from_document(parse_yaml(render_yaml(back))) == record);

  CHECK_THROWS_AS(record_from_document(with(minimal_doc(), "type", "exploit")), InvalidRecord);
}

TEST_CASE("pipeline is deterministic and idempotent on random documents") {
  std::mt19937_64 rng(2024);
  const std::vector<Document> values{
      "", "None", "N/A", "runtime", "CVE-2019-13445", "CWE-20", "bug", "exploit", "2019-07-02", "ABB",
      0,  -3,     7.5,   11,        nullptr,          true,     Document::array({"C", "Python"}),
      Document::array({"Go"}), Document::object(), std::string(120, 'a')};
  const std::vector<std::string> keys{"id",    "title", "type",     "description", "cwe",         "cve",
                                      "keywords", "system", "vendor", "links",     "bug",         "fix",
                                      "flaw",  "mitigation", "exploitation", "severity", "extra"};
  const std::vector<std::string> flaw_keys{"phase", "languages", "subsystem", "date-detected", "detected-by-method",
                                           "architectural-location", "package"};
  auto pick = [&](const auto& v) { return v[rng() % v.size()]; };

  int valid = 0;
  for (int i = 0; i < 2000; ++i) {
    Document doc = rng() % 3 == 0 ? Document::object() : minimal_doc();
    for (std::size_t n = rng() % 5; n > 0; --n) {
      const auto key = pick(keys);
      if ((key == "flaw" || key == "bug") && rng() % 2 == 0) {
        Document flaw = Document::object();
        flaw[pick(flaw_keys)] = pick(values);
        doc[key] = flaw;
      } else {
        doc[key] = pick(values);
      }
    }

    const auto first = run_pipeline(doc);
    const auto again = run_pipeline(doc);
    CHECK(first.doc == again.doc);
    CHECK(first.report == again.report);
    if (!doc.contains("bug") && !doc.contains("fix")) {
      const auto twice = run_pipeline(first.doc);
      CHECK(render_yaml(twice.doc) == render_yaml(first.doc));
      CHECK(twice.report.violations == first.report.violations);
    }

    // Present fields survive defaulting untouched.
    if (doc.is_object()) {
      const auto normalized = [&] {
        try {
          return normalize_record(doc);
        } catch (const RenameConflict&) {
          return Document();
        }
      }();
      if (normalized.is_object()) {
        const auto defaulted = apply_defaults(normalized);
        for (const auto& [k, v] : normalized.items()) {
          if (v.is_object() && defaulted[k].is_object()) {
            for (const auto& [sk, sv] : v.items()) CHECK(defaulted[k][sk] == sv);
          } else {
            CHECK(defaulted[k] == v);
          }
        }
      }
    }

    if (first.report.ok()) {
      ++valid;
      const auto r = record_from_document(first.doc);
      const std::regex cve{std::string(kCvePattern)};
      const std::regex cwe{std::string(kCwePattern)};
      CHECK(r.id >= 0);
      CHECK(utf8_length(r.title) <= kTitleMaxLength);
      CHECK(std::regex_search(r.cve, cve));
      CHECK(std::regex_search(r.cwe, cwe));
      const auto in = [](const std::string& s, const std::vector<std::string>& allowed) {
        return std::find(allowed.begin(), allowed.end(), s) != allowed.end();
      };
      CHECK(in(r.flaw.phase, allowed_phases()));
      CHECK(in(r.flaw.architectural_location, allowed_architectural_locations()));
      CHECK(in(r.flaw.detected_by_method, allowed_detection_methods()));
      CHECK(in(r.flaw.reported_by_relationship, allowed_reporter_relationships()));
      for (const auto& lang : entries_of(r.flaw.languages)) CHECK(in(lang, allowed_languages()));
      for (const auto* date : {&r.flaw.date_detected, &r.flaw.date_reported})
        CHECK((date->empty() || parse_iso_date(*date).has_value()));
      CHECK(record_from_document(record_to_document(r)) == r);
    }
  }
  CHECK(valid > 100);
}
