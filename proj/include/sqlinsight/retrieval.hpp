#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlinsight/knowledge.hpp"
#include "sqlinsight/model_client.hpp"

namespace sqlinsight {

struct CanonicalQuery {
  std::string original;
  std::string reformulated;
  std::string intent;
  std::vector<std::string> key_terms;

  bool operator==(const CanonicalQuery&) const = default;
};

struct ScoredExample {
  std::string id;
  double score = 0.0;
  DecomposedExample example;
};

struct ScoredInstruction {
  std::string id;
  double score = 0.0;
  Instruction instruction;
};

struct RetrievalResult {
  std::vector<ScoredExample> examples;
  std::vector<ScoredInstruction> instructions;
  SchemaRepresentation pruned_schema;
};

struct RetrievalSettings {
  std::size_t k_examples = 3;
  std::size_t k_instructions = 10;
  double lambda = 0.5;
  double tau_intent = 0.35;
  bool prune_per_table = false;
};

/// Records stage order and degraded stages for one request. `on_stage`, when
/// set, sees the partial retrieval result after each retrieval stage.
struct RequestTrace {
  std::vector<std::string> stages;
  std::vector<std::string> fallbacks;
  std::function<void(std::string_view, const RetrievalResult&)> on_stage;

  void Enter(std::string_view stage) { stages.emplace_back(stage); }
  void Degraded(std::string_view stage) { fallbacks.emplace_back(stage); }
};

/// Best partition by max(centroid cosine, best member cosine) when it
/// reaches `tau`; else a model-proposed label; else "general".
std::string ClassifyIntent(const std::string& nl, const KnowledgeSet& ks, ModelClient& model,
                           double tau = 0.35, RequestTrace* trace = nullptr);

/// Canonical rewrite of `nl`. Falls back to the original text when the model
/// fails or answers with nothing.
CanonicalQuery Reformulate(const std::string& nl, const KnowledgeSet& ks, ModelClient& model,
                           double tau = 0.35, RequestTrace* trace = nullptr);

std::vector<ScoredExample> RetrieveExamples(const CanonicalQuery& cq, const KnowledgeSet& ks,
                                            std::size_t k);

std::vector<ScoredInstruction> RetrieveInstructions(const CanonicalQuery& cq,
                                                    const std::vector<ScoredExample>& chosen,
                                                    const KnowledgeSet& ks, std::size_t k,
                                                    double lambda = 0.5);

/// Asks the model which tables/columns are irrelevant and drops them. Tables
/// used by the chosen examples are kept whole. Returns the input schema on
/// model failure or when nothing would remain.
SchemaRepresentation PruneSchema(const CanonicalQuery& cq,
                                 const std::vector<ScoredExample>& chosen,
                                 const SchemaRepresentation& schema, ModelClient& model,
                                 bool per_table = false, RequestTrace* trace = nullptr);

/// Examples, then instructions, then schema; each stage reads the previous.
RetrievalResult Retrieve(const CanonicalQuery& cq, const KnowledgeSet& ks, ModelClient& model,
                         const RetrievalSettings& settings, RequestTrace* trace = nullptr);

}  // namespace sqlinsight
