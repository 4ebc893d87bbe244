#pragma once

#include "rvd/dedup.hpp"
#include "rvd/store.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace rvd {

enum class Answer { Duplicate, Distinct, Skip, Quit };

/// Whoever answers "are these the same flaw?" in a labeling session.
class Labeler {
 public:
  virtual ~Labeler() = default;
  /// `probability` is the current model's estimate, when a model exists.
  virtual Answer ask(const FlawRecord& a, const FlawRecord& b, const CandidatePair& pair,
                     std::optional<double> probability) = 0;
};

/// Shows both records side by side and reads d / n / s from `in`.
/// End of input ends the session.
class TerminalLabeler : public Labeler {
 public:
  TerminalLabeler(std::istream& in, std::ostream& out) : in_(in), out_(out) {}
  Answer ask(const FlawRecord& a, const FlawRecord& b, const CandidatePair& pair,
             std::optional<double> probability) override;

 private:
  std::istream& in_;
  std::ostream& out_;
};

/// Two-column rendering of a record pair.
std::string side_by_side(const FlawRecord& a, const FlawRecord& b, std::size_t width = 36);

struct LabelSessionOptions {
  std::size_t batch = 5;
  std::size_t rounds = 1;
  bool all_pairs = false;
  Hyperparameters hyper;
  std::string labeler_name;
};

struct LabelSessionSummary {
  std::size_t labeled = 0;
  std::size_t skipped = 0;
  std::size_t rounds = 0;
};

/// Active-learning loop: each round picks `batch` pairs with plan_queries,
/// asks the labeler, and appends every d/n answer to `log` right away.
/// `labels` holds the labels collected so far and grows with the session.
LabelSessionSummary run_label_session(const Corpus& corpus, std::vector<LabeledPair>& labels,
                                      const fs::path& log, const LabelSessionOptions& options, Labeler& labeler);

std::vector<LabeledPair> load_label_log(const fs::path& log);

}  // namespace rvd
