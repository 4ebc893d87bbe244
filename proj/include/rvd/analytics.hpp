#pragma once

#include "rvd/record.hpp"
#include "rvd/severity.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rvd {

inline constexpr const char* kUnknownVendor = "Unknown";
inline constexpr std::array<Imputation, 2> kReportModes{Imputation::Pessimistic, Imputation::Optimistic};

struct VendorCount {
  std::string vendor;
  std::size_t count = 0;

  bool operator==(const VendorCount&) const = default;
};

struct SeverityHistogram {
  std::string vendor;
  std::array<std::size_t, 5> counts{};  // indexed by SeverityBucket
  Imputation imputation = Imputation::Pessimistic;

  std::size_t operator[](SeverityBucket b) const { return counts[static_cast<std::size_t>(b)]; }
  std::size_t total() const;

  bool operator==(const SeverityHistogram&) const = default;
};

std::string vendor_label(const FlawRecord& r);

/// Records per vendor (null vendor as "Unknown"), most first, ties by name.
std::vector<VendorCount> vendor_counts(std::span<const FlawRecord> corpus);

/// Numeric cvss-score, else numeric rvss-score, else unscored.
Score score_source(const FlawRecord& r);

/// Per-vendor bucket counts, vendors in vendor_counts order.
std::vector<SeverityHistogram> severity_histogram(std::span<const FlawRecord> corpus, Imputation imputation);

/// Markdown status report: total, vendor table and one severity table for
/// each of `modes`, filled from the histograms of that mode.
std::string render_report(std::span<const VendorCount> counts, std::span<const SeverityHistogram> histograms,
                          std::size_t total,
                          std::span<const Imputation> modes = kReportModes);

}  // namespace rvd
