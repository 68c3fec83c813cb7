#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlinsight/adaptation.hpp"
#include "sqlinsight/bootstrap.hpp"
#include "sqlinsight/correction.hpp"
#include "sqlinsight/generation.hpp"
#include "sqlinsight/knowledge.hpp"
#include "sqlinsight/retrieval.hpp"

namespace sqlinsight {

struct PipelineConfig {
  std::filesystem::path knowledge_dir;  // empty: keep everything in memory
  std::filesystem::path database;       // SQLite file
  std::optional<std::filesystem::path> schema_file;
  ModelSettings model;
  RetrievalSettings retrieval;
  AssessmentSettings assessment;
  int max_rounds = 2;
  std::chrono::seconds request_timeout{60};
  std::string dialect = "ansi";
  std::size_t rejection_threshold = 3;

  /// Relative paths resolve against `base_dir`. Unknown keys are errors.
  static PipelineConfig FromJson(const nlohmann::json& doc, const std::filesystem::path& base_dir);
  /// Reads the file, then applies SQLINSIGHT_MODEL_* overrides.
  static PipelineConfig FromFile(const std::filesystem::path& path);
  /// Throws ConfigError when a value is out of range.
  void Validate() const;
};

struct QueryResponse {
  std::string request_id;
  std::string created_at;
  std::string status;  // ok | exhausted | unparsable | timeout | error
  std::string error;
  CanonicalQuery canonical;
  std::string sql;
  CoTPlan plan;
  std::vector<std::pair<std::string, double>> examples;
  std::vector<std::pair<std::string, double>> instructions;
  std::vector<std::string> schema_tables;
  std::optional<CorrectionStatus> correction_status;
  int rounds_used = 0;
  std::vector<CorrectionRound> history;
  std::optional<ResultTable> preview;
  std::vector<std::pair<std::string, double>> stage_ms;
  std::vector<std::string> stages;
  std::vector<std::string> fallbacks;
  std::size_t model_calls = 0;
  std::uint64_t knowledge_version = 0;

  /// Full payload. With `include_volatile` false, request_id, created_at and
  /// stage durations are left out so equal runs compare byte for byte.
  nlohmann::ordered_json ToJson(bool include_volatile = true) const;
};

/// Orchestrates preprocessing, inference and feedback over one knowledge
/// store and one database. Query() is safe to call concurrently.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::shared_ptr<const ModelProvider> provider = nullptr,
                    std::optional<DatabaseHandle> db = std::nullopt);

  /// Throws IoError when there is nothing usable and no existing set.
  BootstrapReport Preprocess(const std::optional<std::filesystem::path>& logs,
                             const std::optional<std::filesystem::path>& docs);

  QueryResponse Query(const std::string& nl, RequestTrace* trace = nullptr);

  /// Returns the knowledge version after the feedback. Throws UnknownRequest.
  std::uint64_t SubmitFeedback(const Feedback& feedback);

  RequestRecord GetRequest(const std::string& request_id) const;
  nlohmann::ordered_json KnowledgeSummary() const;
  std::uint64_t version() const { return store_.Snapshot()->version; }

  KnowledgeStore& store() { return store_; }
  AdaptationJournal& journal() { return journal_; }
  const PipelineConfig& config() const { return config_; }

 private:
  std::string NewRequestId();
  void SaveRecord(const RequestRecord& record);
  const DatabaseHandle& db() const;

  PipelineConfig config_;
  std::shared_ptr<const ModelProvider> provider_;
  std::optional<DatabaseHandle> db_;
  KnowledgeStore store_;
  AdaptationJournal journal_;

  mutable std::mutex requests_mu_;
  std::map<std::string, RequestRecord> requests_;
  std::mutex feedback_mu_;
};

}  // namespace sqlinsight
