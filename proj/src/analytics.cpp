#include "rvd/analytics.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

namespace rvd {
namespace {

constexpr std::array<SeverityBucket, 5> kDisplayOrder{SeverityBucket::Critical, SeverityBucket::High,
                                                      SeverityBucket::Medium, SeverityBucket::Low,
                                                      SeverityBucket::None};

// Keeps a vendor name from breaking out of its table cell.
std::string cell(const std::string& text) {
  std::string out;
  for (const char c : text) {
    if (c == '|') out += "\\|";
    else if (c == '\n' || c == '\r') out += ' ';
    else out += c;
  }
  return out;
}

}  // namespace

std::size_t SeverityHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

std::string vendor_label(const FlawRecord& r) { return r.vendor ? *r.vendor : kUnknownVendor; }

std::vector<VendorCount> vendor_counts(std::span<const FlawRecord> corpus) {
  std::map<std::string, std::size_t> tally;
  for (const auto& r : corpus) ++tally[vendor_label(r)];
  std::vector<VendorCount> out;
  for (auto& [vendor, count] : tally) out.push_back({vendor, count});
  std::stable_sort(out.begin(), out.end(),
                   [](const VendorCount& a, const VendorCount& b) { return a.count > b.count; });
  return out;
}

Score score_source(const FlawRecord& r) {
  if (r.severity.cvss_score && *r.severity.cvss_score) return *r.severity.cvss_score;
  return r.severity.rvss_score;
}

std::vector<SeverityHistogram> severity_histogram(std::span<const FlawRecord> corpus, Imputation imputation) {
  std::map<std::string, SeverityHistogram> by_vendor;
  for (const auto& r : corpus) {
    auto& h = by_vendor[vendor_label(r)];
    h.vendor = vendor_label(r);
    h.imputation = imputation;
    ++h.counts[static_cast<std::size_t>(bucket(score_source(r), imputation))];
  }
  std::vector<SeverityHistogram> out;
  for (const auto& vc : vendor_counts(corpus)) out.push_back(by_vendor.at(vc.vendor));
  return out;
}

std::string render_report(std::span<const VendorCount> counts, std::span<const SeverityHistogram> histograms,
                          std::size_t total, std::span<const Imputation> modes) {
  std::ostringstream md;
  md << "# Robot Vulnerability Database\n\n"
     << "This file is generated by `rvd report`. Do not edit it by hand.\n\n"
     << "Total records: " << total << "\n\n"
     << "## Records by vendor\n\n"
     << "| Vendor | Count |\n"
     << "|:---|---:|\n";
  for (const auto& vc : counts) md << "| " << cell(vc.vendor) << " | " << vc.count << " |\n";

  for (const auto mode : modes) {
    md << "\n## Severity by vendor (" << to_string(mode) << " imputation)\n\n"
       << "Unscored flaws are counted as "
       << (mode == Imputation::Pessimistic ? "Critical" : "Low") << ".\n\n"
       << "| Vendor |";
    for (const auto b : kDisplayOrder) md << ' ' << to_string(b) << " |";
    md << " Total |\n|:---|";
    for (std::size_t i = 0; i <= kDisplayOrder.size(); ++i) md << "---:|";
    md << '\n';
    for (const auto& h : histograms) {
      if (h.imputation != mode) continue;
      md << "| " << cell(h.vendor) << " |";
      for (const auto b : kDisplayOrder) md << ' ' << h[b] << " |";
      md << ' ' << h.total() << " |\n";
    }
  }
  return md.str();
}

}  // namespace rvd
