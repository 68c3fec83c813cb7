#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sqlinsight/model_client.hpp"
#include "sqlinsight/retrieval.hpp"

namespace sqlinsight {

struct PlanStep {
  std::string description;
  std::optional<std::string> pseudo_sql;
  std::vector<std::string> refs;  // TABLE, TABLE.COLUMN or instruction ids

  bool operator==(const PlanStep&) const = default;
};

struct CoTPlan {
  std::vector<PlanStep> steps;

  bool operator==(const CoTPlan&) const = default;
};

inline constexpr const char* kFallbackStep = "Answer the query directly";

struct PromptSection {
  std::string heading;
  std::string body;
};

/// Prompt sections in fixed order: input query, schema, instructions,
/// example decompositions, reasoning plan.
struct PromptBundle {
  std::vector<PromptSection> sections;

  std::string Text() const;
};

struct CandidateSql {
  std::string sql;
  CoTPlan plan;
  ModelRole role = ModelRole::kGenerate;
  int attempt = 1;
};

/// Parses the numbered-list plan protocol: "1. step [pseudo sql]". Returns
/// an empty plan when no numbered line is present.
CoTPlan ParsePlan(const std::string& text, const RetrievalResult& rr);

/// Asks the model for a plan; malformed output or a model failure yields the
/// single fallback step.
CoTPlan BuildPlan(const CanonicalQuery& cq, const RetrievalResult& rr, ModelClient& model,
                  RequestTrace* trace = nullptr);

/// Attaches the most similar example clause to steps lacking pseudo-SQL when
/// the similarity reaches `threshold`.
CoTPlan AugmentWithPseudoSql(const CoTPlan& plan, const std::vector<DecomposedExample>& examples,
                             double threshold = 0.2);

PromptBundle AssemblePrompt(const CanonicalQuery& cq, const RetrievalResult& rr,
                            const CoTPlan& plan);

/// Strips code fences, whitespace and trailing semicolons.
std::string CleanModelSql(const std::string& text);

/// Returns the parse failure message, or nothing when `sql` is one SELECT.
std::optional<std::string> SqlProblem(const std::string& sql);

/// One model call, plus one re-ask when the answer does not parse. Throws
/// UnparsableGeneration or ModelError.
CandidateSql GenerateSql(const PromptBundle& bundle, const CoTPlan& plan, ModelClient& model);

nlohmann::ordered_json ToJson(const CoTPlan& plan);

}  // namespace sqlinsight
