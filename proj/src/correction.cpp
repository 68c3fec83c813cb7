#include "sqlinsight/correction.hpp"

#include <algorithm>
#include <cctype>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

std::string PreviewText(const ResultTable& table, std::size_t limit) {
  std::string out;
  for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? " | " : "") + table.columns[i];
  out += "\n";
  for (std::size_t r = 0; r < table.rows.size() && r < limit; ++r) {
    for (std::size_t c = 0; c < table.rows[r].size(); ++c) {
      out += (c ? " | " : "") + table.rows[r][c].Display();
    }
    out += "\n";
  }
  return out;
}

bool IsApproval(const std::string& reply) {
  std::string head;
  for (char c : Trim(reply)) {
    if (!std::isalpha(static_cast<unsigned char>(c))) break;
    head += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return head.empty() || head == "OK" || head == "PASS" || head == "YES" || head == "LGTM";
}

std::vector<std::vector<Value>> Preview(const ResultTable& table, std::size_t limit) {
  std::vector<std::vector<Value>> rows(table.rows.begin(),
                                       table.rows.begin() + std::min(limit, table.rows.size()));
  return rows;
}

CandidateSql RequestCorrection(const CandidateSql& candidate,
                               const std::vector<ExecutionFeedback>& feedback,
                               const PromptBundle& bundle, ModelClient& model, int attempt) {
  std::string prompt = bundle.Text();
  prompt += "### Previous Attempt\n\n" + candidate.sql + "\n\n### Feedback\n\n";
  for (const auto& fb : feedback) {
    prompt += "- [" + std::string(FeedbackKindName(fb.kind));
    if (fb.criterion) prompt += ": " + *fb.criterion;
    prompt += "] " + fb.message + "\n";
  }
  prompt += "\nReturn one corrected SQL SELECT statement only.\n";

  CandidateSql next;
  next.plan = candidate.plan;
  next.role = ModelRole::kCorrect;
  next.attempt = attempt;
  next.sql = CleanModelSql(model.Complete(prompt, ModelRole::kCorrect));
  return next;
}

}  // namespace

std::string_view FeedbackKindName(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::kSyntaxError:
      return "syntax_error";
    case FeedbackKind::kRuntimeError:
      return "runtime_error";
    case FeedbackKind::kAssessmentFailure:
      return "assessment_failure";
  }
  return "runtime_error";
}

std::string_view StatusName(CorrectionStatus status) {
  switch (status) {
    case CorrectionStatus::kClean:
      return "clean";
    case CorrectionStatus::kCorrected:
      return "corrected";
    case CorrectionStatus::kExhausted:
      return "exhausted";
  }
  return "clean";
}

ExecutionResult Execute(const std::string& sql_text, const DatabaseHandle& db,
                        std::chrono::milliseconds timeout, std::size_t max_rows) {
  Connection conn = db.Connect();
  ExecutionResult out;
  try {
    out.table = conn.Query(sql_text, timeout, max_rows);
  } catch (const SqlError& e) {
    ExecutionFeedback fb;
    fb.kind = e.phase() == SqlError::Phase::kPrepare ? FeedbackKind::kSyntaxError
                                                     : FeedbackKind::kRuntimeError;
    fb.message = e.what();
    out.feedback = std::move(fb);
  }
  return out;
}

std::vector<ExecutionFeedback> Assess(const ResultTable& result, const CanonicalQuery& cq,
                                      ModelClient& model, const AssessmentSettings& settings,
                                      RequestTrace* trace) {
  std::vector<ExecutionFeedback> out;
  auto enabled = [&](const char* id) { return settings.criteria.count(id) > 0; };
  auto fail = [&](const char* criterion, std::string message) {
    out.push_back({FeedbackKind::kAssessmentFailure, std::move(message), std::string(criterion),
                   Preview(result, settings.preview_rows)});
  };

  if (enabled(kCriterionEmptyResult) && result.row_count == 0) {
    fail(kCriterionEmptyResult, "The query returned no rows.");
  }
  if (enabled(kCriterionAllNullColumn) && result.row_count > 0) {
    for (std::size_t c = 0; c < result.columns.size(); ++c) {
      if (c < result.null_counts.size() && result.null_counts[c] == result.row_count) {
        fail(kCriterionAllNullColumn, "Column " + result.columns[c] + " is NULL in every row.");
      }
    }
  }
  if (enabled(kCriterionRowCount) && result.row_count > settings.row_count_bound) {
    fail(kCriterionRowCount, "The query returned " + std::to_string(result.row_count) +
                                 " rows, more than the bound of " +
                                 std::to_string(settings.row_count_bound) + ".");
  }

  if (enabled(kCriterionSemanticFit)) {
    std::string prompt =
        "Judge whether the result below answers the question. Reply OK when it does;\n"
        "otherwise describe what is wrong in one or two sentences.\n\n### Question\n\n" +
        cq.reformulated + "\n\n### Result (" + std::to_string(result.row_count) +
        " rows, first " + std::to_string(std::min(settings.preview_rows, result.rows.size())) +
        " shown)\n\n" + PreviewText(result, settings.preview_rows);
    try {
      std::string reply = Trim(model.Complete(prompt, ModelRole::kAssess));
      if (!IsApproval(reply)) fail(kCriterionSemanticFit, reply);
    } catch (const ModelError&) {
      if (trace) trace->Degraded("assess");
    }
  }
  return out;
}

CandidateSql Correct(const CandidateSql& candidate, const std::vector<ExecutionFeedback>& feedback,
                     const PromptBundle& bundle, ModelClient& model, int attempt) {
  CandidateSql next = RequestCorrection(candidate, feedback, bundle, model, attempt);
  if (auto problem = SqlProblem(next.sql)) {
    throw UnparsableGeneration("correction is not a single SELECT: " + *problem);
  }
  return next;
}

CorrectionOutcome RunCorrectionLoop(const CandidateSql& candidate, const CanonicalQuery& cq,
                                    const PromptBundle& bundle, const DatabaseHandle& db,
                                    ModelClient& model, int max_rounds,
                                    const AssessmentSettings& settings, RequestTrace* trace) {
  CorrectionOutcome outcome;
  CandidateSql current = candidate;   // last parsable candidate
  CandidateSql attempted = candidate;  // what the next correction sees
  bool pending_execution = true;
  std::vector<ExecutionFeedback> feedback;
  for (;;) {
    if (pending_execution) {
      ExecutionResult run = Execute(current.sql, db, settings.timeout, settings.preview_rows);
      ++outcome.executions;
      if (run.feedback) {
        feedback = {*run.feedback};
        outcome.result.reset();
      } else {
        feedback = Assess(*run.table, cq, model, settings, trace);
        outcome.result = std::move(run.table);
      }
      outcome.history.push_back({current, feedback});
    }
    if (feedback.empty()) {
      outcome.status =
          outcome.rounds_used == 0 ? CorrectionStatus::kClean : CorrectionStatus::kCorrected;
      break;
    }
    if (outcome.rounds_used >= max_rounds) {
      outcome.status = CorrectionStatus::kExhausted;
      break;
    }
    CandidateSql next;
    try {
      next = RequestCorrection(attempted, feedback, bundle, model, outcome.rounds_used + 2);
    } catch (const ModelError&) {
      if (trace) trace->Degraded("correct");
      outcome.status = CorrectionStatus::kExhausted;
      break;
    }
    ++outcome.rounds_used;
    attempted = next;
    if (auto problem = SqlProblem(next.sql)) {
      feedback = {{FeedbackKind::kSyntaxError, *problem, std::nullopt, {}}};
      outcome.history.push_back({next, feedback});
      pending_execution = false;
    } else {
      current = std::move(next);
      pending_execution = true;
    }
  }
  outcome.final = current;
  return outcome;
}

nlohmann::ordered_json ValueToJson(const Value& v) {
  const auto& s = v.storage();
  if (std::holds_alternative<std::monostate>(s)) return nullptr;
  if (auto* i = std::get_if<std::int64_t>(&s)) return *i;
  if (auto* d = std::get_if<double>(&s)) return *d;
  return std::get<std::string>(s);
}

nlohmann::ordered_json ToJson(const ExecutionFeedback& fb) {
  nlohmann::ordered_json j;
  j["kind"] = FeedbackKindName(fb.kind);
  j["message"] = fb.message;
  j["criterion"] = fb.criterion ? nlohmann::ordered_json(*fb.criterion) : nullptr;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : fb.rows_preview) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (const auto& v : r) row.push_back(ValueToJson(v));
    rows.push_back(std::move(row));
  }
  j["rows_preview"] = rows;
  return j;
}

nlohmann::ordered_json ToJson(const ResultTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : table.rows) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (const auto& v : r) row.push_back(ValueToJson(v));
    rows.push_back(std::move(row));
  }
  return {{"columns", table.columns}, {"rows", rows}, {"row_count", table.row_count}};
}

}  // namespace sqlinsight
