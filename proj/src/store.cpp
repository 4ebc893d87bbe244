#include "rvd/store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace rvd {
namespace {

bool is_record_file(const fs::path& p) {
  const auto name = p.filename().string();
  if (name.empty() || name.front() == '.') return false;
  const auto ext = p.extension().string();
  return ext == ".yml" || ext == ".yaml";
}

std::optional<std::int64_t> id_prefix(const fs::path& p) {
  const auto name = p.filename().string();
  std::size_t n = 0;
  while (n < name.size() && name[n] >= '0' && name[n] <= '9') ++n;
  if (n == 0 || n > 18 || (n < name.size() && name[n] != '.')) return std::nullopt;
  return std::stoll(name.substr(0, n));
}

LoadIssue single_issue(const fs::path& file, const std::string& rule, const std::string& message) {
  LoadIssue issue{file, {}};
  issue.report.add("", rule, message);
  return issue;
}

std::map<std::int64_t, std::set<std::string>> parse_labels(const std::string& text, const fs::path& file) {
  std::map<std::int64_t, std::set<std::string>> out;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto colon = line.find(':');
    std::int64_t id = -1;
    try {
      if (colon != std::string::npos) id = std::stoll(line.substr(0, colon));
    } catch (const std::exception&) {
      id = -1;
    }
    if (id < 0 || colon + 1 >= line.size())
      throw StoreError(file.string() + ":" + std::to_string(line_no) + ": expected 'id:label'");
    out[id].insert(line.substr(colon + 1));
  }
  return out;
}

std::string render_labels(const std::map<std::int64_t, std::set<std::string>>& labels) {
  std::string out;
  for (const auto& [id, set] : labels)
    for (const auto& label : set) out += std::to_string(id) + ':' + label + '\n';
  return out;
}

}  // namespace

DuplicateIdError::DuplicateIdError(std::int64_t id, fs::path first, fs::path second)
    : StoreError("duplicate id " + std::to_string(id) + " in " + first.string() + " and " + second.string()),
      id_(id) {}

std::vector<FlawRecord> Corpus::record_list() const {
  std::vector<FlawRecord> out;
  out.reserve(records.size());
  for (const auto& [id, r] : records) out.push_back(r);
  return out;
}

bool Corpus::same_content(const Corpus& other) const { return records == other.records && labels == other.labels; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content, const std::function<void()>& before_commit) {
  const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw StoreError("cannot write " + tmp.string());
  }
  if (before_commit) {
    try {
      before_commit();
    } catch (...) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw;
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StoreError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string slugify(std::string_view title) {
  std::string slug;
  for (const char ch : title) {
    const auto c = static_cast<unsigned char>(ch);
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) slug += ch;
    else if (c >= 'A' && c <= 'Z') slug += static_cast<char>(c - 'A' + 'a');
    else if (!slug.empty() && slug.back() != '-') slug += '-';
    if (slug.size() >= 60) break;
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  return slug.empty() ? "untitled" : slug;
}

std::string record_file_name(const FlawRecord& record) {
  return std::to_string(record.id) + "." + slugify(record.title) + ".yml";
}

Corpus load_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw StoreError("not a readable directory: " + root.string());

  Corpus corpus;
  corpus.root = root;
  const CorpusPaths paths{root};

  std::vector<fs::path> files;
  if (fs::is_directory(paths.records(), ec)) {
    fs::directory_iterator it(paths.records(), ec);
    if (ec) throw StoreError("cannot list " + paths.records().string() + ": " + ec.message());
    for (const auto& entry : it)
      if (entry.is_regular_file() && is_record_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  for (const auto& file : files) {
    Document raw;
    try {
      raw = parse_yaml(read_file(file));
    } catch (const ParseError& e) {
      corpus.issues.push_back(single_issue(file, "parse", e.what()));
      if (auto id = id_prefix(file)) corpus.reserved_ids.insert(*id);
      continue;
    }
    auto result = run_pipeline(raw);
    if (!result.report.ok()) {
      corpus.issues.push_back({file, std::move(result.report)});
      if (auto id = id_prefix(file)) corpus.reserved_ids.insert(*id);
      continue;
    }
    auto record = record_from_document(result.doc);
    if (auto it = corpus.files.find(record.id); it != corpus.files.end())
      throw DuplicateIdError(record.id, it->second, file);
    corpus.files[record.id] = file;
    corpus.records.emplace(record.id, std::move(record));
  }

  if (fs::exists(paths.labels(), ec)) corpus.labels = parse_labels(read_file(paths.labels()), paths.labels());
  return corpus;
}

std::int64_t assign_id(const Corpus& corpus) {
  std::int64_t next = 0;
  if (!corpus.records.empty()) next = corpus.records.rbegin()->first + 1;
  if (!corpus.reserved_ids.empty()) next = std::max(next, *corpus.reserved_ids.rbegin() + 1);
  return next;
}

std::int64_t add_record(Corpus& corpus, const Document& doc, const AddOptions& options) {
  // Any id in the submitted document is replaced by the next free one.
  const auto id = assign_id(corpus);
  Document prepared = doc;
  if (prepared.is_object()) prepared["id"] = id;
  auto result = run_pipeline(prepared);
  if (!result.report.ok()) throw InvalidRecord(std::move(result.report));

  auto record = record_from_document(result.doc);

  const CorpusPaths paths{corpus.root};
  std::error_code ec;
  fs::create_directories(paths.records(), ec);
  if (ec) throw StoreError("cannot create " + paths.records().string() + ": " + ec.message());

  const auto file = paths.records() / record_file_name(record);
  write_file_atomic(file, render_yaml(record_to_document(record)), options.before_commit);

  corpus.files[id] = file;
  corpus.records.emplace(id, std::move(record));
  corpus.labels[id].insert(kTriageLabel);
  save_labels(corpus);
  record_mutation(corpus.root, options.author, "add", std::to_string(id));
  return id;
}

std::size_t export_corpus(const Corpus& corpus, const fs::path& target) {
  const CorpusPaths out{target};
  std::error_code ec;
  fs::create_directories(out.records(), ec);
  if (ec) throw StoreError("cannot create " + out.records().string() + ": " + ec.message());
  for (const auto& entry : fs::directory_iterator(out.records()))
    if (is_record_file(entry.path())) throw StoreError("export target already holds records: " + target.string());

  std::size_t written = 0;
  for (const auto& [id, record] : corpus.records) {
    write_file_atomic(out.records() / record_file_name(record), render_yaml(record_to_document(record)));
    ++written;
  }
  write_file_atomic(out.labels(), render_labels(corpus.labels));
  const CorpusPaths in{corpus.root};
  if (!corpus.root.empty() && fs::exists(in.cases(), ec)) write_file_atomic(out.cases(), read_file(in.cases()));
  return written;
}

void add_label(Corpus& corpus, std::int64_t id, const std::string& label) {
  if (label.empty() || label.find('\n') != std::string::npos) throw StoreError("invalid label '" + label + "'");
  corpus.labels[id].insert(label);
}

void save_labels(const Corpus& corpus) {
  write_file_atomic(CorpusPaths{corpus.root}.labels(), render_labels(corpus.labels));
}

std::vector<DisclosureCase> load_cases(const fs::path& root) {
  const CorpusPaths paths{root};
  std::error_code ec;
  if (!fs::exists(paths.cases(), ec)) return {};
  return parse_cases(read_file(paths.cases()));
}

void save_cases(const fs::path& root, const std::vector<DisclosureCase>& cases) {
  write_file_atomic(CorpusPaths{root}.cases(), render_cases(cases));
}

void record_mutation(const fs::path& root, const std::string& author, const std::string& action,
                     const std::string& detail) {
  std::ofstream out(CorpusPaths{root}.audit(), std::ios::app | std::ios::binary);
  if (!out) throw StoreError("cannot append to audit log under " + root.string());
  out << (author.empty() ? "unknown" : author) << '\t' << action << '\t' << detail << '\n';
}

WriterLock::WriterLock(const fs::path& root, bool wait) {
  const auto path = CorpusPaths{root}.lock();
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw LockError("cannot open lock file " + path.string() + ": " + std::strerror(errno));
  int rc = 0;
  do {
    rc = ::flock(fd_, LOCK_EX | (wait ? 0 : LOCK_NB));
  } while (rc != 0 && errno == EINTR);
  if (rc != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    if (err == EWOULDBLOCK) throw LockError("corpus at " + root.string() + " is locked by another writer");
    throw LockError("cannot lock " + path.string() + ": " + std::strerror(err));
  }
}

WriterLock::~WriterLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace rvd
