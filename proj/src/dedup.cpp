#include "rvd/dedup.hpp"

#include "rvd/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace rvd {
namespace {

bool is_unset(const std::string& id) { return id.empty() || id == "None"; }

double text_feature(const std::string& a, const std::string& b) { return text_similarity(a, b); }

std::set<std::string> keyword_set(const TextOrList& keywords) {
  std::vector<std::string> raw = entries_of(keywords);
  // A single keyword string is a comma separated list.
  if (std::holds_alternative<std::string>(keywords) && raw.size() == 1) {
    std::vector<std::string> split;
    std::stringstream ss(raw.front());
    for (std::string item; std::getline(ss, item, ',');) split.push_back(item);
    raw = std::move(split);
  }
  std::set<std::string> out;
  for (const auto& k : raw) {
    auto norm = normalize_text(k);
    if (!norm.empty()) out.insert(std::move(norm));
  }
  return out;
}

std::string vendor_key(const FlawRecord& r) { return r.vendor ? normalize_text(*r.vendor) : std::string(); }

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

double dot(std::span<const double> w, std::span<const double> x) {
  double z = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) z += w[i] * x[i];
  return z;
}

double logit(const DedupModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size())
    throw ModelError("model has " + std::to_string(model.weights.size()) + " weights but pair has " +
                     std::to_string(features.size()) + " features");
  return dot(model.weights, features) + model.bias;
}

std::string join_doubles(std::span<const double> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view text) {
  std::vector<double> out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(',', start);
    const auto item = text.substr(start, end - start);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc{} || ptr != item.data() + item.size())
      throw ModelError("bad number '" + std::string(item) + "'");
    out.push_back(v);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_integer(std::string_view text, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ModelError(std::string("bad ") + what + " '" + std::string(text) + "'");
  return v;
}

double parse_double(std::string_view text, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ModelError(std::string("bad ") + what + " '" + std::string(text) + "'");
  return v;
}

bool uncertainty_less(const std::pair<double, const CandidatePair*>& a,
                      const std::pair<double, const CandidatePair*>& b) {
  if (a.first != b.first) return a.first < b.first;
  if (a.second->id_a != b.second->id_a) return a.second->id_a < b.second->id_a;
  return a.second->id_b < b.second->id_b;
}

}  // namespace

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names{
      "title_similarity", "description_similarity", "vendor_equality", "system_similarity",
      "cwe_equality",     "cve_equality",           "keyword_jaccard"};
  return names;
}

std::string to_string(PairLabel label) { return label == PairLabel::Duplicate ? "duplicate" : "distinct"; }

PairFeatures featurize_pair(const FlawRecord& a, const FlawRecord& b) {
  PairFeatures f;
  f.values[0] = text_feature(a.title, b.title);
  f.values[1] = text_feature(a.description, b.description);
  const auto va = vendor_key(a);
  f.values[2] = (!va.empty() && va == vendor_key(b)) ? 1.0 : 0.0;
  f.values[3] = text_feature(a.system, b.system);
  f.values[4] = (!is_unset(a.cwe) && a.cwe == b.cwe) ? 1.0 : 0.0;
  f.values[5] = (!is_unset(a.cve) && a.cve == b.cve) ? 1.0 : 0.0;
  f.values[6] = jaccard(keyword_set(a.keywords), keyword_set(b.keywords));
  return f;
}

DedupModel DedupModel::zero() {
  DedupModel m;
  m.features.assign(feature_names().begin(), feature_names().end());
  m.weights.assign(kFeatureCount, 0.0);
  return m;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

LossGradient regularized_loss(std::span<const double> weights, double bias, std::span<const Example> examples,
                              double lambda) {
  LossGradient out;
  out.grad_weights.assign(weights.size(), 0.0);
  const double n = static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    const double z = dot(weights, ex.x) + bias;
    // -y log σ(z) - (1-y) log(1-σ(z)) = y·softplus(-z) + (1-y)·softplus(z)
    out.loss += ex.y * softplus(-z) + (1.0 - ex.y) * softplus(z);
    const double residual = logistic(z) - ex.y;
    for (std::size_t i = 0; i < weights.size(); ++i) out.grad_weights[i] += residual * ex.x[i];
    out.grad_bias += residual;
  }
  if (n > 0) {
    out.loss /= n;
    for (auto& g : out.grad_weights) g /= n;
    out.grad_bias /= n;
  }
  double norm2 = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    norm2 += weights[i] * weights[i];
    out.grad_weights[i] += lambda * weights[i];
  }
  out.loss += 0.5 * lambda * norm2;
  return out;
}

DedupModel train(std::span<const LabeledPair> pairs, const Hyperparameters& hyper,
                 std::vector<double>* loss_history) {
  if (!(std::isfinite(hyper.lambda) && hyper.lambda >= 0.0))
    throw std::invalid_argument("lambda must be a finite non-negative number");
  if (!(std::isfinite(hyper.learning_rate) && hyper.learning_rate > 0.0))
    throw std::invalid_argument("learning_rate must be a finite positive number");
  if (hyper.epochs <= 0) throw std::invalid_argument("epochs must be positive");

  const auto duplicates = std::count_if(pairs.begin(), pairs.end(),
                                        [](const LabeledPair& p) { return p.label == PairLabel::Duplicate; });
  const auto distinct = static_cast<std::ptrdiff_t>(pairs.size()) - duplicates;
  if (duplicates == 0 || distinct == 0)
    throw DegenerateData("training needs at least one duplicate and one distinct pair (have " +
                         std::to_string(duplicates) + " duplicate, " + std::to_string(distinct) + " distinct)");

  std::vector<Example> examples;
  examples.reserve(pairs.size());
  for (const auto& p : pairs)
    examples.push_back({{p.features.values.begin(), p.features.values.end()},
                        p.label == PairLabel::Duplicate ? 1.0 : 0.0});

  DedupModel model = DedupModel::zero();
  model.hyper = hyper;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const auto step = regularized_loss(model.weights, model.bias, examples, hyper.lambda);
    if (loss_history) loss_history->push_back(step.loss);
    // The L2 term is taken as an exact proximal step, which stays stable
    // for any lambda; the data term is an ordinary gradient step.
    const double shrink = 1.0 + hyper.learning_rate * hyper.lambda;
    for (std::size_t i = 0; i < model.weights.size(); ++i) {
      const double data_grad = step.grad_weights[i] - hyper.lambda * model.weights[i];
      model.weights[i] = (model.weights[i] - hyper.learning_rate * data_grad) / shrink;
    }
    model.bias -= hyper.learning_rate * step.grad_bias;
  }
  if (loss_history)
    loss_history->push_back(regularized_loss(model.weights, model.bias, examples, hyper.lambda).loss);
  return model;
}

double predict(const DedupModel& model, std::span<const double> features) {
  return logistic(logit(model, features));
}

double predict(const DedupModel& model, const PairFeatures& features) {
  return predict(model, std::span<const double>(features.values));
}

std::vector<CandidatePair> select_queries(const DedupModel& model, std::span<const CandidatePair> unlabeled,
                                          std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  // |logit| orders pairs exactly like |p - 0.5| without the rounding noise.
  std::vector<std::pair<double, const CandidatePair*>> scored;
  scored.reserve(unlabeled.size());
  for (const auto& c : unlabeled)
    scored.emplace_back(std::abs(logit(model, std::span<const double>(c.features.values))), &c);
  std::sort(scored.begin(), scored.end(), uncertainty_less);
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(*scored[i].second);
  return out;
}

std::vector<CandidatePair> plan_queries(std::span<const LabeledPair> labels,
                                        std::span<const CandidatePair> unlabeled, std::size_t k,
                                        const Hyperparameters& hyper) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  const bool seen_duplicate = std::any_of(labels.begin(), labels.end(),
                                          [](const LabeledPair& p) { return p.label == PairLabel::Duplicate; });
  const bool seen_distinct = std::any_of(labels.begin(), labels.end(),
                                         [](const LabeledPair& p) { return p.label == PairLabel::Distinct; });
  if (seen_duplicate && seen_distinct) return select_queries(train(labels, hyper), unlabeled, k);

  // Cold start: rank by mean similarity.
  std::vector<std::pair<double, const CandidatePair*>> scored;
  for (const auto& c : unlabeled) {
    const double mean = std::accumulate(c.features.values.begin(), c.features.values.end(), 0.0) /
                        static_cast<double>(kFeatureCount);
    scored.emplace_back(seen_duplicate ? mean : -mean, &c);
  }
  std::sort(scored.begin(), scored.end(), uncertainty_less);
  std::vector<CandidatePair> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(*scored[i].second);
  return out;
}

std::vector<CandidatePair> candidate_pairs(std::span<const FlawRecord> corpus, bool all_pairs) {
  std::set<std::pair<std::size_t, std::size_t>> pairs;  // indices into corpus
  auto add = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    if (corpus[i].id > corpus[j].id) std::swap(i, j);
    pairs.emplace(i, j);
  };

  if (all_pairs) {
    for (std::size_t i = 0; i < corpus.size(); ++i)
      for (std::size_t j = i + 1; j < corpus.size(); ++j) add(i, j);
  } else {
    std::map<std::string, std::vector<std::size_t>> blocks;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& r = corpus[i];
      if (const auto v = vendor_key(r); !v.empty()) blocks["vendor:" + v].push_back(i);
      if (!is_unset(r.cve)) blocks["cve:" + r.cve].push_back(i);
      for (const auto& token : token_set(r.title))
        if (token.size() >= 4) blocks["title:" + token].push_back(i);
    }
    for (const auto& [key, members] : blocks)
      for (std::size_t x = 0; x < members.size(); ++x)
        for (std::size_t y = x + 1; y < members.size(); ++y) add(members[x], members[y]);
  }

  std::vector<CandidatePair> out;
  out.reserve(pairs.size());
  for (const auto& [i, j] : pairs) out.push_back({corpus[i].id, corpus[j].id, featurize_pair(corpus[i], corpus[j])});
  std::sort(out.begin(), out.end(), [](const CandidatePair& a, const CandidatePair& b) {
    return std::tie(a.id_a, a.id_b) < std::tie(b.id_a, b.id_b);
  });
  return out;
}

std::vector<DuplicateCluster> find_duplicates(std::span<const FlawRecord> corpus, const DedupModel& model,
                                              double threshold, bool all_pairs) {
  std::map<std::int64_t, std::int64_t> parent;
  for (const auto& r : corpus) parent[r.id] = r.id;
  auto find = [&](std::int64_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (const auto& c : candidate_pairs(corpus, all_pairs)) {
    if (predict(model, c.features) < threshold) continue;
    const auto ra = find(c.id_a);
    const auto rb = find(c.id_b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  std::map<std::int64_t, std::vector<std::int64_t>> groups;
  for (const auto& [id, _] : parent) groups[find(id)].push_back(id);
  std::vector<DuplicateCluster> out;
  for (auto& [root, members] : groups) out.push_back({members.front(), std::move(members)});
  return out;
}

std::string render_model(const DedupModel& model) {
  std::ostringstream out;
  out << "features = ";
  for (std::size_t i = 0; i < model.features.size(); ++i) out << (i ? "," : "") << model.features[i];
  out << "\nweights = " << join_doubles(model.weights) << "\nbias = " << format_double(model.bias)
      << "\nlambda = " << format_double(model.hyper.lambda)
      << "\nlearning_rate = " << format_double(model.hyper.learning_rate) << "\nepochs = " << model.hyper.epochs
      << "\nseed = " << model.hyper.seed << "\n";
  return out.str();
}

DedupModel parse_model(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ModelError("malformed model line '" + std::string(line) + "'");
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }
  for (const char* key : {"features", "weights", "bias", "lambda", "learning_rate", "epochs", "seed"})
    if (!kv.contains(key)) throw ModelError(std::string("model file lacks '") + key + "'");

  DedupModel m;
  std::stringstream names(kv["features"]);
  for (std::string name; std::getline(names, name, ',');) m.features.push_back(std::string(trim(name)));
  m.weights = parse_doubles(kv["weights"]);
  if (m.weights.size() != m.features.size())
    throw ModelError("model lists " + std::to_string(m.features.size()) + " features but " +
                     std::to_string(m.weights.size()) + " weights");
  m.bias = parse_double(kv["bias"], "bias");
  m.hyper.lambda = parse_double(kv["lambda"], "lambda");
  m.hyper.learning_rate = parse_double(kv["learning_rate"], "learning_rate");
  m.hyper.epochs = parse_integer<int>(kv["epochs"], "epochs");
  m.hyper.seed = parse_integer<std::uint64_t>(kv["seed"], "seed");
  return m;
}

std::string render_label(const LabeledPair& pair) {
  std::string labeler = pair.labeler;
  std::replace_if(labeler.begin(), labeler.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
  return std::to_string(pair.id_a) + '\t' + std::to_string(pair.id_b) + '\t' + to_string(pair.label) + '\t' +
         labeler + '\t' + join_doubles(pair.features.values);
}

LabeledPair parse_label(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto end = line.find('\t', start);
    fields.push_back(line.substr(start, end - start));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (fields.size() != 5) throw ModelError("label line needs 5 tab-separated fields: '" + std::string(line) + "'");

  LabeledPair p;
  p.id_a = parse_integer<std::int64_t>(fields[0], "record id");
  p.id_b = parse_integer<std::int64_t>(fields[1], "record id");
  if (p.id_a < 0 || p.id_b <= p.id_a) throw ModelError("label ids must satisfy 0 <= id_a < id_b");
  if (fields[2] == "duplicate") p.label = PairLabel::Duplicate;
  else if (fields[2] == "distinct") p.label = PairLabel::Distinct;
  else throw ModelError("unknown label '" + std::string(fields[2]) + "'");
  p.labeler = std::string(fields[3]);
  const auto values = parse_doubles(trim(fields[4]));
  if (values.size() != kFeatureCount)
    throw ModelError("label line has " + std::to_string(values.size()) + " features, expected " +
                     std::to_string(kFeatureCount));
  std::copy(values.begin(), values.end(), p.features.values.begin());
  return p;
}

}  // namespace rvd
