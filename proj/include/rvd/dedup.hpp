#pragma once

#include "rvd/record.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rvd {

inline constexpr std::size_t kFeatureCount = 7;

/// Feature names in vector order.
const std::array<std::string, kFeatureCount>& feature_names();

struct PairFeatures {
  std::array<double, kFeatureCount> values{};

  bool operator==(const PairFeatures&) const = default;
};

/// Symmetric similarity features of two records, each in [0,1]:
/// title, description, vendor equality, system, cwe equality, cve equality
/// and keyword Jaccard. Empty-vs-empty fields and "None" identifiers count
/// as no evidence (0).
PairFeatures featurize_pair(const FlawRecord& a, const FlawRecord& b);

enum class PairLabel { Duplicate, Distinct };

std::string to_string(PairLabel label);

struct CandidatePair {
  std::int64_t id_a = 0;  // id_a < id_b
  std::int64_t id_b = 0;
  PairFeatures features;

  bool operator==(const CandidatePair&) const = default;
};

struct LabeledPair {
  std::int64_t id_a = 0;  // id_a < id_b
  std::int64_t id_b = 0;
  PairFeatures features;
  PairLabel label = PairLabel::Distinct;
  std::string labeler;

  bool operator==(const LabeledPair&) const = default;
};

struct Hyperparameters {
  double lambda = 0.01;
  double learning_rate = 0.1;
  int epochs = 500;
  // Recorded with the model. Full-batch descent from zero does not draw
  // random numbers, so it does not change the result.
  std::uint64_t seed = 0;

  bool operator==(const Hyperparameters&) const = default;
};

struct DedupModel {
  std::vector<std::string> features;
  std::vector<double> weights;
  double bias = 0.0;
  Hyperparameters hyper;

  /// All-zero model over the standard feature set.
  static DedupModel zero();

  bool operator==(const DedupModel&) const = default;
};

class DegenerateData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One training example for the logistic loss, of any dimension.
struct Example {
  std::vector<double> x;
  double y = 0.0;  // 1 duplicate, 0 distinct
};

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  double grad_bias = 0.0;
};

double logistic(double z);

/// Mean logistic loss plus (lambda/2)·‖w‖² (bias unregularized), and its
/// analytic gradient.
LossGradient regularized_loss(std::span<const double> weights, double bias, std::span<const Example> examples,
                              double lambda);

/// Full-batch descent from zero for `hyper.epochs` steps: a gradient step on
/// the mean logistic loss followed by the exact L2 proximal step. Throws
/// DegenerateData unless both labels occur. When `loss_history` is given it
/// receives the loss before every step and after the last one.
DedupModel train(std::span<const LabeledPair> pairs, const Hyperparameters& hyper = {},
                 std::vector<double>* loss_history = nullptr);

/// logistic(w·f + b). Throws ModelError on a length mismatch.
double predict(const DedupModel& model, std::span<const double> features);
double predict(const DedupModel& model, const PairFeatures& features);

/// The k pairs the model is least sure about (probability closest to 0.5),
/// ties broken by (id_a, id_b). Throws std::invalid_argument for k == 0.
std::vector<CandidatePair> select_queries(const DedupModel& model, std::span<const CandidatePair> unlabeled,
                                          std::size_t k);

/// Next pairs to put in front of a human. With both labels present this is
/// select_queries on a freshly trained model; before that it falls back to
/// mean feature similarity, most similar first until a duplicate has been
/// seen, least similar first until a distinct pair has been seen.
std::vector<CandidatePair> plan_queries(std::span<const LabeledPair> labels,
                                        std::span<const CandidatePair> unlabeled, std::size_t k,
                                        const Hyperparameters& hyper = {});

/// Pairs sharing a blocking key (same vendor ignoring case, same CVE other
/// than "None", or a shared title token of at least four characters), or all
/// pairs when `all_pairs` is set. Canonical order, each pair once.
std::vector<CandidatePair> candidate_pairs(std::span<const FlawRecord> corpus, bool all_pairs = false);

struct DuplicateCluster {
  std::int64_t canonical = 0;  // lowest member id
  std::vector<std::int64_t> members;

  bool operator==(const DuplicateCluster&) const = default;
};

/// Connected components of candidate pairs predicted at or above
/// `threshold`. Every record is in exactly one cluster.
std::vector<DuplicateCluster> find_duplicates(std::span<const FlawRecord> corpus, const DedupModel& model,
                                              double threshold = 0.5, bool all_pairs = false);

/// Model file: `key = value` lines with weights, bias, hyperparameters and
/// the ordered feature list.
std::string render_model(const DedupModel& model);
DedupModel parse_model(std::string_view text);

/// Label log line: id_a<TAB>id_b<TAB>label<TAB>labeler<TAB>f1,...,f7
std::string render_label(const LabeledPair& pair);
LabeledPair parse_label(std::string_view line);

}  // namespace rvd
