#include "rvd/labeling.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace rvd {
namespace {

std::string flatten(const TextOrList& v) {
  const auto items = entries_of(v);
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

std::string fit(std::string text, std::size_t width) {
  std::replace_if(text.begin(), text.end(), [](char c) { return c == '\n' || c == '\r' || c == '\t'; }, ' ');
  if (text.size() <= width) return text + std::string(width - text.size(), ' ');
  return text.substr(0, width - 3) + "...";
}

}  // namespace

std::string side_by_side(const FlawRecord& a, const FlawRecord& b, std::size_t width) {
  const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> rows{
      {"id", {std::to_string(a.id), std::to_string(b.id)}},
      {"title", {a.title, b.title}},
      {"vendor", {a.vendor.value_or("(none)"), b.vendor.value_or("(none)")}},
      {"system", {a.system, b.system}},
      {"cve", {a.cve, b.cve}},
      {"cwe", {a.cwe, b.cwe}},
      {"keywords", {flatten(a.keywords), flatten(b.keywords)}},
      {"description", {a.description, b.description}},
  };
  std::ostringstream out;
  for (const auto& [name, values] : rows)
    out << fit(name, 12) << " | " << fit(values.first, width) << " | " << fit(values.second, width) << '\n';
  return out.str();
}

Answer TerminalLabeler::ask(const FlawRecord& a, const FlawRecord& b, const CandidatePair&,
                            std::optional<double> probability) {
  out_ << '\n' << side_by_side(a, b);
  if (probability) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *probability);
    out_ << "model p(duplicate) = " << buf << '\n';
  }
  while (true) {
    out_ << "[d]uplicate, [n]ot duplicate, [s]kip? " << std::flush;
    std::string line;
    if (!std::getline(in_, line)) {
      out_ << '\n';
      return Answer::Quit;
    }
    line.erase(std::remove_if(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\r' || c == '\t'; }),
               line.end());
    if (line == "d") return Answer::Duplicate;
    if (line == "n") return Answer::Distinct;
    if (line == "s") return Answer::Skip;
    out_ << "please answer d, n or s\n";
  }
}

std::vector<LabeledPair> load_label_log(const fs::path& log) {
  std::vector<LabeledPair> out;
  std::error_code ec;
  if (!fs::exists(log, ec)) return out;
  std::istringstream in(read_file(log));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(parse_label(line));
  }
  return out;
}

LabelSessionSummary run_label_session(const Corpus& corpus, std::vector<LabeledPair>& labels,
                                      const fs::path& log, const LabelSessionOptions& options, Labeler& labeler) {
  if (options.batch == 0) throw std::invalid_argument("batch must be positive");
  LabelSessionSummary summary;
  const auto records = corpus.record_list();
  const auto candidates = candidate_pairs(records, options.all_pairs);

  std::set<std::pair<std::int64_t, std::int64_t>> done;
  for (const auto& l : labels) done.emplace(l.id_a, l.id_b);

  fs::create_directories(log.parent_path());
  std::ofstream out(log, std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to " + log.string());

  for (std::size_t round = 0; round < options.rounds; ++round) {
    std::vector<CandidatePair> open;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(open),
                 [&](const CandidatePair& c) { return !done.contains({c.id_a, c.id_b}); });
    if (open.empty()) break;

    const bool trainable =
        std::any_of(labels.begin(), labels.end(), [](const LabeledPair& l) { return l.label == PairLabel::Duplicate; }) &&
        std::any_of(labels.begin(), labels.end(), [](const LabeledPair& l) { return l.label == PairLabel::Distinct; });
    std::optional<DedupModel> model;
    if (trainable) model = train(labels, options.hyper);

    ++summary.rounds;
    for (const auto& pair : plan_queries(labels, open, options.batch, options.hyper)) {
      const auto& a = corpus.records.at(pair.id_a);
      const auto& b = corpus.records.at(pair.id_b);
      std::optional<double> p;
      if (model) p = predict(*model, pair.features);

      const auto answer = labeler.ask(a, b, pair, p);
      if (answer == Answer::Quit) return summary;
      done.emplace(pair.id_a, pair.id_b);
      if (answer == Answer::Skip) {
        ++summary.skipped;
        continue;
      }
      LabeledPair labeled{pair.id_a, pair.id_b, pair.features,
                          answer == Answer::Duplicate ? PairLabel::Duplicate : PairLabel::Distinct,
                          options.labeler_name};
      out << render_label(labeled) << '\n' << std::flush;
      labels.push_back(std::move(labeled));
      ++summary.labeled;
    }
  }
  return summary;
}

}  // namespace rvd
