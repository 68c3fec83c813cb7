#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlinsight/correction.hpp"
#include "sqlinsight/knowledge.hpp"
#include "sqlinsight/retrieval.hpp"

namespace sqlinsight {

enum class Verdict { kAccept, kReject };
enum class FeedbackSource { kUser, kSystem };

struct Feedback {
  std::string request_id;
  Verdict verdict = Verdict::kAccept;
  std::optional<std::string> corrected_sql;
  std::optional<std::string> note;
  FeedbackSource source = FeedbackSource::kUser;
};

/// What a finished request leaves behind so later feedback can be resolved.
struct RequestRecord {
  std::string request_id;
  std::string created_at;
  std::string nl;
  CanonicalQuery canonical;
  std::vector<std::string> example_ids;
  std::vector<std::string> instruction_ids;
  std::string final_sql;
  std::string status;
  std::optional<std::string> first_failed_sql;  // when the loop corrected it
  std::uint64_t knowledge_version = 0;
  std::vector<std::string> verdicts;

  bool operator==(const RequestRecord&) const = default;
};

nlohmann::ordered_json ToJson(const RequestRecord& record);
RequestRecord RequestFromJson(const nlohmann::json& doc);

struct RejectionRecord {
  std::string request_id;
  std::string original_sql;
  std::optional<std::string> corrected_sql;
  std::string intent;
  FeedbackSource source = FeedbackSource::kUser;
  std::optional<std::string> note;
  std::uint64_t version = 0;
  std::string timestamp;

  bool operator==(const RejectionRecord&) const = default;
};

struct ErrorRecord {
  std::string request_id;
  std::uint64_t version = 0;
  std::string kind;
  std::string message;
  std::string timestamp;

  bool operator==(const ErrorRecord&) const = default;
};

/// Append-only rejections.jsonl and errors.jsonl. Without a directory the
/// journal lives in memory.
class AdaptationJournal {
 public:
  explicit AdaptationJournal(std::optional<std::filesystem::path> dir = std::nullopt);

  void AppendRejection(const RejectionRecord& record);
  std::vector<RejectionRecord> Rejections() const;
  void AppendError(const ErrorRecord& record);
  std::vector<ErrorRecord> Errors() const;

 private:
  void AppendLine(const std::string& file, const std::string& line);
  std::vector<nlohmann::json> ReadLines(const std::string& file) const;

  mutable std::mutex mu_;
  std::optional<std::filesystem::path> dir_;
  std::vector<RejectionRecord> rejections_;
  std::vector<ErrorRecord> errors_;
};

std::string UtcTimestamp();

void RecordExecutionError(const std::string& request_id, const ExecutionFeedback& feedback,
                          std::uint64_t version, AdaptationJournal& journal);

struct RejectionPair {
  std::string original_sql;
  std::string corrected_sql;
  std::string intent;
};

/// Token-level edit pattern between two queries: hunks of removed/added
/// tokens with identifiers written ID and strings STR. Empty when equal.
std::string DiffPattern(const std::string& original, const std::string& corrected);

/// Id an instruction derived from `pattern` receives.
std::string AdaptationId(const std::string& pattern);

/// When at least `min_group` pairs share a pattern (largest group, then
/// pattern text), asks the model to phrase a guideline. Groups whose id is in
/// `known_ids` are skipped. Model failure or empty reply gives nothing.
std::optional<Instruction> DeriveInstruction(const std::vector<RejectionPair>& rejections,
                                             ModelClient& model, std::size_t min_group = 3,
                                             const std::set<std::string>& known_ids = {});

/// Applies one verdict. Accept promotes the request's SQL under its intent;
/// reject logs, promotes a corrected query when given, and may add a derived
/// instruction. Throws InvalidCorrection for an unparsable correction.
KnowledgeSet IngestFeedback(const Feedback& feedback, const RequestRecord& context,
                            const KnowledgeSet& ks, ModelClient& model,
                            AdaptationJournal& journal, std::size_t min_group = 3);

}  // namespace sqlinsight
