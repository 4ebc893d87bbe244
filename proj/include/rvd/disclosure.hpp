#pragma once

#include "rvd/date.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvd {

inline constexpr int kDisclosureWindowDays = 90;

enum class CaseState { Private, Reported, Fixed, Disclosed };
enum class CaseEvent { Report, Fix, Disclose };

std::string to_string(CaseState s);
std::string to_string(CaseEvent e);
std::optional<CaseState> case_state_from_string(std::string_view s);
std::optional<CaseEvent> case_event_from_string(std::string_view s);

class DisclosureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DisclosureCase {
  std::int64_t record_id = 0;
  Date vendor_contacted_on{};
  CaseState state = CaseState::Private;
  std::optional<Date> disclosed_on;

  Date deadline() const;

  bool operator==(const DisclosureCase&) const = default;
};

/// Public disclosure date: 90 calendar days after the first vendor contact.
Date compute_deadline(Date contacted);
/// Same, for ISO text. Throws DisclosureError for an invalid date.
std::string compute_deadline(std::string_view contacted);

/// Undisclosed cases whose deadline lies strictly before `today`, earliest
/// deadline first (then by record id).
std::vector<DisclosureCase> overdue_cases(std::span<const DisclosureCase> cases, Date today);

/// private -report-> reported -fix-> fixed -disclose-> disclosed, plus
/// reported -disclose-> disclosed when the deadline forces publication.
/// Throws DisclosureError for any other edge.
DisclosureCase transition(const DisclosureCase& c, CaseEvent event, Date on);

/// Cases file: `record_id,vendor_contacted_on,state,disclosed_on` per line;
/// blank lines and `#` comments are ignored.
std::vector<DisclosureCase> parse_cases(std::string_view text);
std::string render_cases(std::span<const DisclosureCase> cases);

}  // namespace rvd
