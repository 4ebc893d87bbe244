#include "rvd/disclosure.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <tuple>

namespace rvd {

std::string to_string(CaseState s) {
  switch (s) {
    case CaseState::Private: return "private";
    case CaseState::Reported: return "reported";
    case CaseState::Fixed: return "fixed";
    case CaseState::Disclosed: return "disclosed";
  }
  return "private";
}

std::string to_string(CaseEvent e) {
  switch (e) {
    case CaseEvent::Report: return "report";
    case CaseEvent::Fix: return "fix";
    case CaseEvent::Disclose: return "disclose";
  }
  return "report";
}

std::optional<CaseState> case_state_from_string(std::string_view s) {
  if (s == "private") return CaseState::Private;
  if (s == "reported") return CaseState::Reported;
  if (s == "fixed") return CaseState::Fixed;
  if (s == "disclosed") return CaseState::Disclosed;
  return std::nullopt;
}

std::optional<CaseEvent> case_event_from_string(std::string_view s) {
  if (s == "report") return CaseEvent::Report;
  if (s == "fix") return CaseEvent::Fix;
  if (s == "disclose") return CaseEvent::Disclose;
  return std::nullopt;
}

Date DisclosureCase::deadline() const { return compute_deadline(vendor_contacted_on); }

Date compute_deadline(Date contacted) { return contacted + std::chrono::days{kDisclosureWindowDays}; }

std::string compute_deadline(std::string_view contacted) {
  const auto d = parse_iso_date(contacted);
  if (!d) throw DisclosureError("invalid date '" + std::string(contacted) + "'");
  return format_iso_date(compute_deadline(*d));
}

std::vector<DisclosureCase> overdue_cases(std::span<const DisclosureCase> cases, Date today) {
  std::vector<DisclosureCase> out;
  std::copy_if(cases.begin(), cases.end(), std::back_inserter(out), [&](const DisclosureCase& c) {
    return c.state != CaseState::Disclosed && c.deadline() < today;
  });
  std::stable_sort(out.begin(), out.end(), [](const DisclosureCase& a, const DisclosureCase& b) {
    return std::make_tuple(a.deadline(), a.record_id) < std::make_tuple(b.deadline(), b.record_id);
  });
  return out;
}

DisclosureCase transition(const DisclosureCase& c, CaseEvent event, Date on) {
  DisclosureCase next = c;
  const auto illegal = [&] {
    return DisclosureError("cannot " + to_string(event) + " a case that is " + to_string(c.state) + " (record " +
                           std::to_string(c.record_id) + ")");
  };
  switch (event) {
    case CaseEvent::Report:
      if (c.state != CaseState::Private) throw illegal();
      next.state = CaseState::Reported;
      break;
    case CaseEvent::Fix:
      if (c.state != CaseState::Reported) throw illegal();
      next.state = CaseState::Fixed;
      break;
    case CaseEvent::Disclose:
      if (c.state != CaseState::Reported && c.state != CaseState::Fixed) throw illegal();
      next.state = CaseState::Disclosed;
      next.disclosed_on = on;
      break;
  }
  return next;
}

std::vector<DisclosureCase> parse_cases(std::string_view text) {
  std::vector<DisclosureCase> out;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    const auto where = "cases line " + std::to_string(line_no) + ": ";
    if (fields.size() != 4) throw DisclosureError(where + "expected 4 comma-separated fields");

    DisclosureCase c;
    auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), c.record_id);
    if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size() || c.record_id < 0)
      throw DisclosureError(where + "bad record id '" + fields[0] + "'");
    const auto contacted = parse_iso_date(fields[1]);
    if (!contacted) throw DisclosureError(where + "bad date '" + fields[1] + "'");
    c.vendor_contacted_on = *contacted;
    const auto state = case_state_from_string(fields[2]);
    if (!state) throw DisclosureError(where + "unknown state '" + fields[2] + "'");
    c.state = *state;
    if (!fields[3].empty()) {
      const auto disclosed = parse_iso_date(fields[3]);
      if (!disclosed) throw DisclosureError(where + "bad date '" + fields[3] + "'");
      c.disclosed_on = *disclosed;
    }
    if (c.state == CaseState::Disclosed && !c.disclosed_on)
      throw DisclosureError(where + "disclosed case needs a disclosure date");
    out.push_back(c);
  }
  return out;
}

std::string render_cases(std::span<const DisclosureCase> cases) {
  std::string out = "# record_id,vendor_contacted_on,state,disclosed_on\n";
  for (const auto& c : cases) {
    out += std::to_string(c.record_id) + ',' + format_iso_date(c.vendor_contacted_on) + ',' + to_string(c.state) +
           ',' + (c.disclosed_on ? format_iso_date(*c.disclosed_on) : std::string()) + '\n';
  }
  return out;
}

}  // namespace rvd
