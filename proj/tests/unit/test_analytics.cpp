#include <doctest.h>

#include "rvd/analytics.hpp"
#include "synth.hpp"

#include <algorithm>
#include <map>
#include <random>

using namespace rvd;
using rvd::testing::minimal_doc;

namespace {

FlawRecord scored(std::int64_t id, std::optional<std::string> vendor, Document cvss, Document rvss = "None") {
  auto doc = minimal_doc();
  doc["id"] = id;
  if (vendor) doc["vendor"] = *vendor;
  doc["severity"]["rvss-score"] = rvss;
  if (!cvss.is_null()) doc["severity"]["cvss-score"] = cvss;
  return record_from_document(run_pipeline(doc).doc);
}

}  // namespace

TEST_CASE("vendor_counts") {
  CHECK(vendor_counts(std::vector<FlawRecord>{}).empty());
  CHECK(vendor_counts(std::vector{scored(0, std::nullopt, nullptr)}) == std::vector<VendorCount>{{"Unknown", 1}});

  const std::vector<FlawRecord> corpus{scored(0, "b", nullptr), scored(1, "a", nullptr), scored(2, "c", nullptr),
                                       scored(3, "c", nullptr)};
  CHECK(vendor_counts(corpus) == std::vector<VendorCount>{{"c", 2}, {"a", 1}, {"b", 1}});
}

TEST_CASE("vendor_counts on the reference corpus") {
  const auto corpus = rvd::testing::reference_corpus();
  const auto counts = vendor_counts(corpus);
  std::map<std::string, std::size_t> got;
  std::size_t sum = 0;
  for (const auto& vc : counts) {
    got[vc.vendor] = vc.count;
    sum += vc.count;
  }
  const std::map<std::string, std::size_t> expected{
      {"ABB", 61},         {"Fanuc", 6},          {"Vecna", 6},
      {"Universal Robots", 5}, {"Acutronic Robotics", 5}, {"SoftBank Robotics", 4},
      {"WowWee", 3},       {"UBTech Robotics", 3}, {"Rethink Robotics", 3},
      {"Robotics", 2},     {"DDS vendors (eProsima, ADLINK, RTI)", 2}, {"PAL Robotics", 1},
      {"Asratec", 1},      {"Unknown", 8}};
  CHECK(got == expected);
  CHECK(sum == 110);
  for (std::size_t i = 1; i < counts.size(); ++i) {
    CHECK(counts[i - 1].count >= counts[i].count);
    if (counts[i - 1].count == counts[i].count) CHECK(counts[i - 1].vendor < counts[i].vendor);
  }
}

TEST_CASE("vendor_counts ignores corpus order") {
  auto corpus = rvd::testing::reference_corpus();
  const auto expected = vendor_counts(corpus);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(corpus.begin(), corpus.end(), rng);
    CHECK(vendor_counts(corpus) == expected);
  }
}

TEST_CASE("score_source priority") {
  CHECK(score_source(scored(0, "v", 9.8, 3.0)) == std::optional<double>(9.8));
  CHECK(score_source(scored(0, "v", "None", 3.0)) == std::optional<double>(3.0));
  CHECK(score_source(scored(0, "v", nullptr, 3.0)) == std::optional<double>(3.0));
  CHECK_FALSE(score_source(scored(0, "v", "None", "None")).has_value());
}

TEST_CASE("severity_histogram") {
  const std::vector<FlawRecord> one_scored{scored(0, "v", 9.8)};
  for (const auto mode : {Imputation::Pessimistic, Imputation::Optimistic}) {
    const auto h = severity_histogram(one_scored, mode);
    REQUIRE(h.size() == 1);
    CHECK(h[0][SeverityBucket::Critical] == 1);
    CHECK(h[0].total() == 1);
  }
  const std::vector<FlawRecord> one_unscored{scored(0, "v", nullptr)};
  CHECK(severity_histogram(one_unscored, Imputation::Pessimistic)[0][SeverityBucket::Critical] == 1);
  CHECK(severity_histogram(one_unscored, Imputation::Optimistic)[0][SeverityBucket::Low] == 1);
  CHECK(severity_histogram(std::vector<FlawRecord>{}, Imputation::Optimistic).empty());
}

TEST_CASE("partition and dominance on random corpora") {
  std::mt19937_64 rng(13);
  const std::vector<std::string> vendors{"A", "B", "C", ""};
  const std::vector<Document> scores{"None", 0.0, 2.5, 4.0, 6.9, 7.0, 9.0, 10.0};
  for (int round = 0; round < 50; ++round) {
    std::vector<FlawRecord> corpus;
    for (int i = 0, n = int(rng() % 40); i < n; ++i) {
      const auto& v = vendors[rng() % vendors.size()];
      corpus.push_back(scored(i, v.empty() ? std::nullopt : std::optional(v), scores[rng() % scores.size()],
                              scores[rng() % scores.size()]));
    }
    const auto counts = vendor_counts(corpus);
    const auto pess = severity_histogram(corpus, Imputation::Pessimistic);
    const auto opt = severity_histogram(corpus, Imputation::Optimistic);
    REQUIRE(pess.size() == counts.size());
    REQUIRE(opt.size() == counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      CHECK(pess[i].vendor == counts[i].vendor);
      CHECK(pess[i].total() == counts[i].count);
      CHECK(opt[i].total() == counts[i].count);
      CHECK(pess[i][SeverityBucket::Critical] >= opt[i][SeverityBucket::Critical]);
      CHECK(opt[i][SeverityBucket::Low] >= pess[i][SeverityBucket::Low]);
    }
  }
}

TEST_CASE("render_report golden") {
  const std::vector<FlawRecord> corpus{scored(0, "ABB", 9.8), scored(1, "ABB", nullptr), scored(2, std::nullopt, 5.0),
                                       scored(3, "Fanuc|X", 0.0)};
  const auto counts = vendor_counts(corpus);
  auto histograms = severity_histogram(corpus, Imputation::Pessimistic);
  const auto opt = severity_histogram(corpus, Imputation::Optimistic);
  histograms.insert(histograms.end(), opt.begin(), opt.end());
  const std::string expected =
      "# Robot Vulnerability Database\n"
      "\n"
      "This file is generated by `rvd report`. Do not edit it by hand.\n"
      "\n"
      "Total records: 4\n"
      "\n"
      "## Records by vendor\n"
      "\n"
      "| Vendor | Count |\n"
      "|:---|---:|\n"
      "| ABB | 2 |\n"
      "| Fanuc\\|X | 1 |\n"
      "| Unknown | 1 |\n"
      "\n"
      "## Severity by vendor (pessimistic imputation)\n"
      "\n"
      "Unscored flaws are counted as Critical.\n"
      "\n"
      "| Vendor | Critical | High | Medium | Low | None | Total |\n"
      "|:---|---:|---:|---:|---:|---:|---:|\n"
      "| ABB | 2 | 0 | 0 | 0 | 0 | 2 |\n"
      "| Fanuc\\|X | 0 | 0 | 0 | 0 | 1 | 1 |\n"
      "| Unknown | 0 | 0 | 1 | 0 | 0 | 1 |\n"
      "\n"
      "## Severity by vendor (optimistic imputation)\n"
      "\n"
      "Unscored flaws are counted as Low.\n"
      "\n"
      "| Vendor | Critical | High | Medium | Low | None | Total |\n"
      "|:---|---:|---:|---:|---:|---:|---:|\n"
      "| ABB | 1 | 0 | 0 | 1 | 0 | 2 |\n"
      "| Fanuc\\|X | 0 | 0 | 0 | 0 | 1 | 1 |\n"
      "| Unknown | 0 | 0 | 1 | 0 | 0 | 1 |\n";
  CHECK(render_report(counts, histograms, corpus.size()) == expected);
  CHECK(render_report(counts, histograms, corpus.size()) == render_report(counts, histograms, corpus.size()));
}

TEST_CASE("render_report of an empty corpus") {
  const auto md = render_report({}, {}, 0);
  CHECK(md.find("Total records: 0\n") != std::string::npos);
  CHECK(md.find("| Vendor | Count |\n|:---|---:|\n\n") != std::string::npos);
  CHECK(md.find("(pessimistic imputation)") != std::string::npos);
  CHECK(md.find("(optimistic imputation)") != std::string::npos);
  CHECK(md.find("|:---|---:|---:|---:|---:|---:|---:|\n") != std::string::npos);
  CHECK(md.back() == '\n');

  const std::array one{Imputation::Optimistic};
  const auto single = render_report({}, {}, 0, one);
  CHECK(single.find("pessimistic") == std::string::npos);
  CHECK(single.find("(optimistic imputation)") != std::string::npos);
}
