#pragma once

#include <chrono>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlinsight/database.hpp"
#include "sqlinsight/generation.hpp"

namespace sqlinsight {

enum class FeedbackKind { kSyntaxError, kRuntimeError, kAssessmentFailure };
std::string_view FeedbackKindName(FeedbackKind kind);

struct ExecutionFeedback {
  FeedbackKind kind = FeedbackKind::kRuntimeError;
  std::string message;
  std::optional<std::string> criterion;
  std::vector<std::vector<Value>> rows_preview;
};

inline constexpr const char* kCriterionEmptyResult = "empty_result";
inline constexpr const char* kCriterionAllNullColumn = "all_null_column";
inline constexpr const char* kCriterionRowCount = "row_count_bound";
inline constexpr const char* kCriterionSemanticFit = "semantic_fit";

struct AssessmentSettings {
  std::set<std::string> criteria = {kCriterionEmptyResult, kCriterionAllNullColumn,
                                    kCriterionRowCount, kCriterionSemanticFit};
  std::size_t row_count_bound = 100000;
  std::size_t preview_rows = 5;
  std::chrono::milliseconds timeout{15000};
};

/// Either a result table (rows capped at the preview size) or feedback.
struct ExecutionResult {
  std::optional<ResultTable> table;
  std::optional<ExecutionFeedback> feedback;
};

/// Runs `sql` on a fresh connection. Engine failures come back as feedback
/// carrying the engine text verbatim; only ConnectionError is thrown.
ExecutionResult Execute(const std::string& sql, const DatabaseHandle& db,
                        std::chrono::milliseconds timeout = std::chrono::milliseconds(15000),
                        std::size_t max_rows = std::numeric_limits<std::size_t>::max());

/// Deterministic checks, then one model judgement. A model failure leaves
/// only the deterministic findings.
std::vector<ExecutionFeedback> Assess(const ResultTable& result, const CanonicalQuery& cq,
                                      ModelClient& model, const AssessmentSettings& settings,
                                      RequestTrace* trace = nullptr);

/// Re-generation with the failed attempt and feedback appended. No re-ask;
/// throws UnparsableGeneration when the answer does not parse.
CandidateSql Correct(const CandidateSql& candidate, const std::vector<ExecutionFeedback>& feedback,
                     const PromptBundle& bundle, ModelClient& model, int attempt);

enum class CorrectionStatus { kClean, kCorrected, kExhausted };
std::string_view StatusName(CorrectionStatus status);

struct CorrectionRound {
  CandidateSql candidate;
  std::vector<ExecutionFeedback> feedback;
};

struct CorrectionOutcome {
  CandidateSql final;
  CorrectionStatus status = CorrectionStatus::kClean;
  int rounds_used = 0;
  std::vector<CorrectionRound> history;
  std::size_t executions = 0;
  std::optional<ResultTable> result;  // of `final`, when it ran cleanly
};

CorrectionOutcome RunCorrectionLoop(const CandidateSql& candidate, const CanonicalQuery& cq,
                                    const PromptBundle& bundle, const DatabaseHandle& db,
                                    ModelClient& model, int max_rounds,
                                    const AssessmentSettings& settings = {},
                                    RequestTrace* trace = nullptr);

nlohmann::ordered_json ToJson(const ExecutionFeedback& fb);
nlohmann::ordered_json ToJson(const ResultTable& table);
nlohmann::ordered_json ValueToJson(const Value& v);

}  // namespace sqlinsight
