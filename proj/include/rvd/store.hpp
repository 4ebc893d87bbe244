#pragma once

#include "rvd/disclosure.hpp"
#include "rvd/record.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace rvd {

namespace fs = std::filesystem;

inline constexpr const char* kTriageLabel = "triage";
inline constexpr const char* kDuplicateLabel = "duplicate";

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateIdError : public StoreError {
 public:
  DuplicateIdError(std::int64_t id, fs::path first, fs::path second);
  std::int64_t id() const { return id_; }

 private:
  std::int64_t id_;
};

class LockError : public StoreError {
 public:
  using StoreError::StoreError;
};

/// Layout of a corpus directory.
struct CorpusPaths {
  fs::path root;

  fs::path records() const { return root / "records"; }
  fs::path labels() const { return root / "labels.txt"; }
  fs::path cases() const { return root / "cases.txt"; }
  fs::path readme() const { return root / "README.md"; }
  fs::path audit() const { return root / "audit.log"; }
  fs::path lock() const { return root / ".rvd.lock"; }
  fs::path dedup_labels() const { return root / "dedup" / "labels.log"; }
  fs::path dedup_model() const { return root / "dedup" / "model.txt"; }
};

/// A record file that was left out of the corpus, and why.
struct LoadIssue {
  fs::path file;
  ValidationReport report;
};

struct Corpus {
  fs::path root;
  std::map<std::int64_t, FlawRecord> records;
  std::map<std::int64_t, std::set<std::string>> labels;
  std::map<std::int64_t, fs::path> files;  // id -> record file, rebuilt on load
  std::vector<LoadIssue> issues;
  std::set<std::int64_t> reserved_ids;  // id prefixes of excluded files

  std::vector<FlawRecord> record_list() const;

  /// Records and labels; paths and load issues are not content.
  bool same_content(const Corpus& other) const;
};

/// Reads every `records/*.yml` file through the record pipeline. Files that
/// fail are listed in `issues` and left out. Throws StoreError when `root`
/// is not a readable directory and DuplicateIdError when two files share an
/// id.
Corpus load_corpus(const fs::path& root);

/// One past the largest id in use (including excluded files); 0 when empty.
std::int64_t assign_id(const Corpus& corpus);

struct AddOptions {
  std::string author;
  /// Called after the temporary file is written and before it is renamed
  /// into place. Lets tests simulate a crash at that point.
  std::function<void()> before_commit;
};

/// Validates `doc`, gives it the next id and the "triage" label and writes
/// it with write-then-rename. Throws InvalidRecord (nothing written) when
/// the document fails validation. The caller holds the WriterLock.
std::int64_t add_record(Corpus& corpus, const Document& doc, const AddOptions& options = {});

/// Writes every record (plus labels and cases) under `target`. Throws
/// StoreError when the target cannot be written or already holds records.
std::size_t export_corpus(const Corpus& corpus, const fs::path& target);

void add_label(Corpus& corpus, std::int64_t id, const std::string& label);
void save_labels(const Corpus& corpus);

std::vector<DisclosureCase> load_cases(const fs::path& root);
void save_cases(const fs::path& root, const std::vector<DisclosureCase>& cases);

/// Appends `author<TAB>action<TAB>detail` to the audit log.
void record_mutation(const fs::path& root, const std::string& author, const std::string& action,
                     const std::string& detail);

std::string record_file_name(const FlawRecord& record);
std::string slugify(std::string_view title);

std::string read_file(const fs::path& path);
void write_file_atomic(const fs::path& path, const std::string& content,
                       const std::function<void()>& before_commit = {});

/// Exclusive writer lock on `<root>/.rvd.lock`. Released on destruction.
class WriterLock {
 public:
  /// Blocks until the lock is free, or throws LockError at once when
  /// `wait` is false and another writer holds it.
  explicit WriterLock(const fs::path& root, bool wait = true);
  ~WriterLock();
  WriterLock(const WriterLock&) = delete;
  WriterLock& operator=(const WriterLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace rvd
