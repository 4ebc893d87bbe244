#include "rvd/cli.hpp"

#include "rvd/analytics.hpp"
#include "rvd/dedup.hpp"
#include "rvd/disclosure.hpp"
#include "rvd/labeling.hpp"
#include "rvd/store.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <memory>

namespace rvd::cli {
namespace {

struct Options {
  std::string root;
  std::string author;

  std::vector<std::string> validate_paths;

  std::string add_file;

  std::optional<std::int64_t> score_id;
  std::string score_vector;

  std::string imputation = "both";
  std::string report_output;

  bool all_pairs = false;
  std::size_t batch = 5;
  std::size_t rounds = 1;
  Hyperparameters hyper;
  double threshold = 0.5;
  bool mark = false;

  std::string today;

  std::int64_t case_id = 0;
  std::string case_date;

  std::string export_target;
};

// Exit paths that are not exceptions from the library.
struct Failure {
  int code;
  std::string message;
};

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

void print_violations(std::ostream& out, const std::string& where, const ValidationReport& report) {
  for (const auto& v : report.violations)
    out << where << ": " << (v.field.empty() ? "(record)" : v.field) << ": " << v.rule << ": " << v.message << '\n';
  for (const auto& w : report.warnings)
    out << where << ": warning: " << w.field << ": " << w.rule << ": " << w.message << '\n';
}

void print_load_issues(std::ostream& err, const Corpus& corpus) {
  for (const auto& issue : corpus.issues) {
    err << "excluded " << issue.file.string() << '\n';
    print_violations(err, "  " + issue.file.filename().string(), issue.report);
  }
}

class Commands {
 public:
  Commands(Context& ctx, const Options& opt) : ctx_(ctx), opt_(opt) {}

  fs::path root() const {
    if (!opt_.root.empty()) return opt_.root;
    if (ctx_.env_root && !ctx_.env_root->empty()) return *ctx_.env_root;
    return ".";
  }

  std::string author() const { return opt_.author.empty() ? ctx_.default_author : opt_.author; }

  Corpus load() const {
    auto corpus = load_corpus(root());
    print_load_issues(ctx_.err, corpus);
    return corpus;
  }

  int validate() {
    std::vector<fs::path> files;
    for (const auto& p : opt_.validate_paths) {
      std::error_code ec;
      if (!fs::exists(p, ec)) throw Failure{kUsage, "no such file or directory: " + p};
      if (fs::is_directory(p, ec)) {
        std::vector<fs::path> found;
        for (const auto& e : fs::recursive_directory_iterator(p)) {
          const auto ext = e.path().extension().string();
          const auto name = e.path().filename().string();
          if (e.is_regular_file() && (ext == ".yml" || ext == ".yaml") && name.front() != '.')
            found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        files.insert(files.end(), found.begin(), found.end());
      } else {
        files.emplace_back(p);
      }
    }

    std::size_t invalid = 0;
    for (const auto& file : files) {
      ValidationReport report;
      try {
        report = run_pipeline(parse_yaml(read_file(file))).report;
      } catch (const ParseError& e) {
        report.add("", "parse", e.what());
      }
      if (report.ok()) ctx_.out << file.string() << ": ok\n";
      else ++invalid;
      print_violations(ctx_.out, file.string(), report);
    }
    ctx_.out << "checked " << files.size() << " file(s), " << invalid << " invalid\n";
    return invalid == 0 ? kOk : kViolations;
  }

  int add() {
    std::error_code ec;
    if (!fs::exists(opt_.add_file, ec)) throw Failure{kUsage, "no such file: " + opt_.add_file};
    Document doc;
    try {
      doc = parse_yaml(read_file(opt_.add_file));
    } catch (const ParseError& e) {
      ctx_.out << opt_.add_file << ": (record): parse: " << e.what() << '\n';
      return kViolations;
    }
    WriterLock lock(root(), false);
    auto corpus = load();
    try {
      const auto id = add_record(corpus, doc, {author(), {}});
      ctx_.out << "added record " << id << " as " << corpus.files.at(id).string() << " [" << kTriageLabel << "]\n";
      return kOk;
    } catch (const InvalidRecord& e) {
      print_violations(ctx_.out, opt_.add_file, e.report());
      ctx_.out << "record rejected, nothing written\n";
      return kViolations;
    }
  }

  int score() {
    if (!opt_.score_vector.empty()) {
      try {
        const auto vec = parse_vector(opt_.score_vector);
        const double s = cvss_base_score(vec);
        ctx_.out << "vector: " << render_vector(vec) << "\nbase score: " << fixed1(s)
                 << "\nseverity: " << to_string(bucket(s, Imputation::None)) << '\n';
        return kOk;
      } catch (const VectorError& e) {
        ctx_.out << "invalid vector: " << e.what() << '\n';
        return kViolations;
      }
    }

    const auto corpus = load();
    const auto it = corpus.records.find(*opt_.score_id);
    if (it == corpus.records.end()) throw Failure{kViolations, "no record with id " + std::to_string(*opt_.score_id)};
    const auto& sev = it->second.severity;
    ctx_.out << "record: " << it->first << "\n";
    ctx_.out << "rvss-vector: " << (sev.rvss_vector.empty() ? "(none)" : sev.rvss_vector) << '\n';
    if (!is_placeholder_vector(sev.rvss_vector)) {
      const auto rv = parse_vector(sev.rvss_vector, VectorGrammar::Opaque);
      ctx_.out << "rvss metrics: " << rv.entries().size() << " (not scored)\n";
    }
    if (!sev.cvss_vector || is_placeholder_vector(*sev.cvss_vector)) {
      ctx_.out << "cvss-vector: (none)\n";
      return kOk;
    }
    const auto vec = parse_vector(*sev.cvss_vector);
    const double computed = cvss_base_score(vec);
    ctx_.out << "cvss-vector: " << render_vector(vec) << "\nbase score: " << fixed1(computed)
             << "\nseverity: " << to_string(bucket(computed, Imputation::None)) << '\n';
    if (sev.cvss_score && *sev.cvss_score) {
      const bool same = std::llround(**sev.cvss_score * 10.0) == std::llround(computed * 10.0);
      ctx_.out << "stated cvss-score: " << fixed1(**sev.cvss_score) << (same ? " (consistent)" : " (INCONSISTENT)")
               << '\n';
      return same ? kOk : kViolations;
    }
    return kOk;
  }

  int report() {
    std::vector<Imputation> modes;
    if (opt_.imputation == "both") modes = {Imputation::Pessimistic, Imputation::Optimistic};
    else modes = {imputation_from_string(opt_.imputation)};

    WriterLock lock(root(), false);
    const auto corpus = load();
    const auto records = corpus.record_list();
    const auto counts = vendor_counts(records);
    std::vector<SeverityHistogram> histograms;
    for (const auto mode : modes) {
      auto h = severity_histogram(records, mode);
      histograms.insert(histograms.end(), h.begin(), h.end());
    }
    const fs::path target = opt_.report_output.empty() ? CorpusPaths{root()}.readme() : fs::path(opt_.report_output);
    write_file_atomic(target, render_report(counts, histograms, records.size(), modes));
    ctx_.out << "total: " << records.size() << "\nwrote " << target.string() << '\n';
    return kOk;
  }

  int dedup_scan() {
    const auto corpus = load();
    const auto records = corpus.record_list();
    const auto pairs = candidate_pairs(records, opt_.all_pairs);
    ctx_.out << "id_a\tid_b";
    for (const auto& name : feature_names()) ctx_.out << '\t' << name;
    ctx_.out << '\n';
    for (const auto& p : pairs) {
      ctx_.out << p.id_a << '\t' << p.id_b;
      for (const double v : p.features.values) ctx_.out << '\t' << fixed3(v);
      ctx_.out << '\n';
    }
    ctx_.out << pairs.size() << " candidate pair(s)\n";
    return kOk;
  }

  int dedup_label() {
    WriterLock lock(root(), false);
    const auto corpus = load();
    const CorpusPaths paths{root()};
    auto labels = load_label_log(paths.dedup_labels());
    LabelSessionOptions session{opt_.batch, opt_.rounds, opt_.all_pairs, opt_.hyper, author()};
    TerminalLabeler labeler(ctx_.in, ctx_.out);
    const auto summary = run_label_session(corpus, labels, paths.dedup_labels(), session, labeler);
    ctx_.out << "labeled " << summary.labeled << " pair(s), skipped " << summary.skipped << '\n';
    if (summary.labeled > 0)
      record_mutation(root(), author(), "dedup-label", std::to_string(summary.labeled) + " label(s)");
    return kOk;
  }

  int dedup_train() {
    WriterLock lock(root(), false);
    const CorpusPaths paths{root()};
    const auto labels = load_label_log(paths.dedup_labels());
    std::vector<double> history;
    DedupModel model;
    try {
      model = train(labels, opt_.hyper, &history);
    } catch (const DegenerateData& e) {
      ctx_.out << "cannot train: degenerate data: " << e.what() << '\n';
      return kViolations;
    }
    fs::create_directories(paths.dedup_model().parent_path());
    write_file_atomic(paths.dedup_model(), render_model(model));
    const auto dup = std::count_if(labels.begin(), labels.end(),
                                   [](const LabeledPair& l) { return l.label == PairLabel::Duplicate; });
    ctx_.out << "trained on " << labels.size() << " label(s) (" << dup << " duplicate, " << labels.size() - dup
             << " distinct), final loss " << fixed3(history.back()) << "\nwrote " << paths.dedup_model().string()
             << '\n';
    record_mutation(root(), author(), "dedup-train", std::to_string(labels.size()) + " label(s)");
    return kOk;
  }

  int dedup_apply() {
    const CorpusPaths paths{root()};
    std::error_code ec;
    if (!fs::exists(paths.dedup_model(), ec))
      throw Failure{kUsage, "no model at " + paths.dedup_model().string() + "; run 'dedup train' first"};
    if (!(opt_.threshold > 0.0 && opt_.threshold < 1.0)) throw Failure{kUsage, "threshold must lie in (0,1)"};
    const auto model = parse_model(read_file(paths.dedup_model()));

    std::unique_ptr<WriterLock> lock;
    if (opt_.mark) lock = std::make_unique<WriterLock>(root(), false);
    auto corpus = load();
    const auto records = corpus.record_list();
    const auto clusters = find_duplicates(records, model, opt_.threshold, opt_.all_pairs);

    std::size_t found = 0;
    for (const auto& c : clusters) {
      if (c.members.size() < 2) continue;
      ++found;
      ctx_.out << "cluster " << c.canonical << ":";
      for (const auto id : c.members) ctx_.out << ' ' << id;
      ctx_.out << '\n';
      if (opt_.mark)
        for (const auto id : c.members)
          if (id != c.canonical) add_label(corpus, id, kDuplicateLabel);
    }
    ctx_.out << found << " duplicate cluster(s)\n";
    if (opt_.mark && found > 0) {
      save_labels(corpus);
      record_mutation(root(), author(), "dedup-apply", std::to_string(found) + " cluster(s) marked");
    }
    return kOk;
  }

  int deadlines() {
    Date today;
    if (opt_.today.empty()) {
      today = std::chrono::floor<std::chrono::days>(std::chrono::system_clock::now());
    } else {
      const auto parsed = parse_iso_date(opt_.today);
      if (!parsed) throw Failure{kUsage, "--today must be a YYYY-MM-DD date"};
      today = *parsed;
    }
    const auto cases = load_cases(root());
    const auto overdue = overdue_cases(cases, today);
    auto is_overdue = [&](const DisclosureCase& c) {
      return std::find(overdue.begin(), overdue.end(), c) != overdue.end();
    };

    if (!cases.empty()) {
      ctx_.out << std::left << std::setw(8) << "record" << std::setw(11) << "state" << std::setw(12) << "contacted"
               << std::setw(12) << "deadline" << "status\n";
    }
    for (const auto& c : cases) {
      std::string status = is_overdue(c) ? "OVERDUE" : "ok";
      if (c.state == CaseState::Disclosed) status = "disclosed " + format_iso_date(*c.disclosed_on);
      ctx_.out << std::left << std::setw(8) << c.record_id << std::setw(11) << to_string(c.state) << std::setw(12)
               << format_iso_date(c.vendor_contacted_on) << std::setw(12) << format_iso_date(c.deadline()) << status
               << '\n';
    }
    ctx_.out << cases.size() << " case(s), " << overdue.size() << " overdue as of " << format_iso_date(today)
             << '\n';
    return overdue.empty() ? kOk : kViolations;
  }

  int case_open() {
    const auto contacted = parse_iso_date(opt_.case_date);
    if (!contacted) throw Failure{kUsage, "--contacted must be a YYYY-MM-DD date"};
    WriterLock lock(root(), false);
    const auto corpus = load();
    if (!corpus.records.contains(opt_.case_id))
      throw Failure{kViolations, "no record with id " + std::to_string(opt_.case_id)};
    auto cases = load_cases(root());
    for (const auto& c : cases)
      if (c.record_id == opt_.case_id)
        throw Failure{kViolations, "record " + std::to_string(opt_.case_id) + " already has a case"};
    cases.push_back({opt_.case_id, *contacted, CaseState::Private, std::nullopt});
    save_cases(root(), cases);
    record_mutation(root(), author(), "case-open", std::to_string(opt_.case_id));
    ctx_.out << "opened case for record " << opt_.case_id << ", disclosure deadline "
             << format_iso_date(compute_deadline(*contacted)) << '\n';
    return kOk;
  }

  int case_event(CaseEvent event) {
    const auto on = parse_iso_date(opt_.case_date);
    if (!on) throw Failure{kUsage, "--on must be a YYYY-MM-DD date"};
    WriterLock lock(root(), false);
    auto cases = load_cases(root());
    auto it = std::find_if(cases.begin(), cases.end(),
                           [&](const DisclosureCase& c) { return c.record_id == opt_.case_id; });
    if (it == cases.end()) throw Failure{kViolations, "no case for record " + std::to_string(opt_.case_id)};
    try {
      *it = transition(*it, event, *on);
    } catch (const DisclosureError& e) {
      throw Failure{kViolations, e.what()};
    }
    save_cases(root(), cases);
    record_mutation(root(), author(), "case-" + to_string(event), std::to_string(opt_.case_id));
    ctx_.out << "record " << opt_.case_id << " is now " << to_string(it->state) << '\n';
    return kOk;
  }

  int export_db() {
    const auto corpus = load();
    const auto n = export_corpus(corpus, opt_.export_target);
    ctx_.out << "exported " << n << " record(s) to " << opt_.export_target << '\n';
    return kOk;
  }

 private:
  Context& ctx_;
  const Options& opt_;
};

}  // namespace

int run(const std::vector<std::string>& args, Context& ctx) {
  Options opt;
  CLI::App app{"Robot vulnerability database tools", "rvd"};
  app.require_subcommand(1);
  app.add_option("--root", opt.root, "Corpus root directory (default: $RVD_ROOT, else .)");

  auto* validate = app.add_subcommand("validate", "Check record files against the schema");
  validate->add_option("paths", opt.validate_paths, "Record files or directories")->required();

  auto* add = app.add_subcommand("add", "Add a new record to the corpus");
  add->add_option("file", opt.add_file, "Record file")->required();
  add->add_option("--author", opt.author, "Who is making the change");

  auto* score = app.add_subcommand("score", "Parse a severity vector and compute the CVSS v3.1 base score");
  auto* score_id = score->add_option("--id", opt.score_id, "Record id");
  auto* score_vec = score->add_option("--vector", opt.score_vector, "CVSS vector string");
  score_id->excludes(score_vec);
  score->require_option(1);

  auto* report = app.add_subcommand("report", "Regenerate the README.md status report");
  report->add_option("--imputation", opt.imputation, "Unscored flaw handling")
      ->check(CLI::IsMember({"pessimistic", "optimistic", "both"}));
  report->add_option("--output", opt.report_output, "Write the report here instead of <root>/README.md");

  auto* dedup = app.add_subcommand("dedup", "Duplicate detection");
  dedup->require_subcommand(1);
  auto* scan = dedup->add_subcommand("scan", "List candidate pairs and their features");
  auto* label = dedup->add_subcommand("label", "Interactive active-learning labeling session");
  auto* trainer = dedup->add_subcommand("train", "Fit the model on the label log");
  auto* apply = dedup->add_subcommand("apply", "Print duplicate clusters");
  for (auto* sub : {scan, label, apply})
    sub->add_flag("--all-pairs", opt.all_pairs, "Compare every pair instead of blocking");
  label->add_option("--batch", opt.batch, "Pairs asked per round")->check(CLI::PositiveNumber);
  label->add_option("--rounds", opt.rounds, "Number of rounds")->check(CLI::NonNegativeNumber);
  for (auto* sub : {label, trainer}) {
    sub->add_option("--lambda", opt.hyper.lambda, "L2 regularization strength")->check(CLI::NonNegativeNumber);
    sub->add_option("--learning-rate", opt.hyper.learning_rate, "Gradient descent step")->check(CLI::PositiveNumber);
    sub->add_option("--epochs", opt.hyper.epochs, "Gradient descent steps")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.hyper.seed, "Seed recorded with the model");
  }
  apply->add_option("--threshold", opt.threshold, "Duplicate probability threshold");
  apply->add_flag("--mark", opt.mark, "Attach the 'duplicate' label to non-canonical members");
  for (auto* sub : {label, trainer, apply}) sub->add_option("--author", opt.author, "Who is making the change");

  auto* deadlines = app.add_subcommand("deadlines", "List disclosure cases and flag overdue ones");
  deadlines->add_option("--today", opt.today, "Override today's date (YYYY-MM-DD)");

  auto* cases = app.add_subcommand("case", "Open or advance a disclosure case");
  cases->require_subcommand(1);
  auto* case_open = cases->add_subcommand("open", "Open a case when the vendor is first contacted");
  case_open->add_option("id", opt.case_id, "Record id")->required()->check(CLI::NonNegativeNumber);
  case_open->add_option("--contacted", opt.case_date, "Date of first vendor contact")->required();
  std::vector<std::pair<CLI::App*, CaseEvent>> case_events;
  for (const auto event : {CaseEvent::Report, CaseEvent::Fix, CaseEvent::Disclose}) {
    auto* sub = cases->add_subcommand(to_string(event), "Record the '" + to_string(event) + "' event");
    sub->add_option("id", opt.case_id, "Record id")->required()->check(CLI::NonNegativeNumber);
    sub->add_option("--on", opt.case_date, "Event date")->required();
    case_events.emplace_back(sub, event);
  }
  for (auto* sub : cases->get_subcommands({})) sub->add_option("--author", opt.author, "Who is making the change");

  auto* exporter = app.add_subcommand("export", "Write a full copy of the corpus");
  exporter->add_option("target", opt.export_target, "Target directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? kOk : kUsage;
  }

  Commands cmd(ctx, opt);
  try {
    if (validate->parsed()) return cmd.validate();
    if (add->parsed()) return cmd.add();
    if (score->parsed()) return cmd.score();
    if (report->parsed()) return cmd.report();
    if (scan->parsed()) return cmd.dedup_scan();
    if (label->parsed()) return cmd.dedup_label();
    if (trainer->parsed()) return cmd.dedup_train();
    if (apply->parsed()) return cmd.dedup_apply();
    if (deadlines->parsed()) return cmd.deadlines();
    if (case_open->parsed()) return cmd.case_open();
    for (const auto& [sub, event] : case_events)
      if (sub->parsed()) return cmd.case_event(event);
    if (exporter->parsed()) return cmd.export_db();
  } catch (const Failure& f) {
    ctx.err << "rvd: " << f.message << '\n';
    return f.code;
  } catch (const StoreError& e) {
    ctx.err << "rvd: " << e.what() << '\n';
    return kIoError;
  } catch (const ModelError& e) {
    ctx.err << "rvd: " << e.what() << '\n';
    return kIoError;
  } catch (const DisclosureError& e) {
    ctx.err << "rvd: " << e.what() << '\n';
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    ctx.err << "rvd: " << e.what() << '\n';
    return kIoError;
  }
  return kUsage;
}

}  // namespace rvd::cli
