#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlinsight/model_client.hpp"

namespace sqlinsight {

/// Normalized clause strings of one SELECT scope. Two conventions carry
/// clauses the list layout has no slot for:
///   - joins[0] is the driving relation, written "FROM <relation>";
///     comma-joined relations appear as ", <relation>".
///   - HAVING conjuncts live in wheres with a "HAVING " prefix.
struct ClauseBundle {
  std::vector<std::string> selects_calcs;
  std::vector<std::string> joins;
  std::vector<std::string> wheres;
  std::vector<std::string> group_bys;
  std::vector<std::string> orders;
  std::vector<std::string> limits;

  bool operator==(const ClauseBundle&) const = default;
};

/// Per-branch view of a compound (UNION/EXCEPT/INTERSECT) scope. The merged
/// ClauseBundle is what gets published; this keeps recompose exact.
struct SetStructure {
  std::vector<ClauseBundle> branches;
  std::vector<std::string> operators;

  bool empty() const { return branches.empty(); }
  bool operator==(const SetStructure&) const = default;
};

struct CteBundle {
  std::string name;
  std::vector<std::string> columns;
  std::string materialized;
  ClauseBundle bundle;
  SetStructure set;

  bool operator==(const CteBundle&) const = default;
};

struct QuerySketch {
  bool recursive = false;
  std::vector<CteBundle> ctes;
  ClauseBundle final_bundle;
  SetStructure final_set;
  std::string source_sql;

  bool operator==(const QuerySketch&) const = default;
};

struct ExampleFeatures {
  std::vector<std::string> tables;
  std::size_t cte_count = 0;
  std::vector<std::string> cte_desc;

  bool operator==(const ExampleFeatures&) const = default;
};

/// A query example in hierarchically decomposed form.
struct DecomposedExample {
  std::string input_nl;
  std::vector<std::string> complex_terms;
  ExampleFeatures features;
  std::vector<ClauseBundle> cte_bundles;
  ClauseBundle final_bundle;
  std::string full_sql_query;

  bool operator==(const DecomposedExample&) const = default;
};

/// Rewrites a SELECT so that every derived table in a FROM clause becomes a
/// named WITH binding and nested WITH lists are flattened. Output is in
/// canonical normalized form. Idempotent.
std::string ReformatToCte(std::string_view sql);

/// Splits CTE-form SQL into one bundle per WITH binding plus the final
/// bundle. Input is passed through ReformatToCte first.
QuerySketch Decompose(std::string_view sql);

/// Reassembles a sketch into canonical SQL. Throws IrrecomposableSketch when
/// a fragment cannot be re-seated.
std::string Recompose(const QuerySketch& sketch);

/// Base relations (not CTE names) referenced by the query, first-seen order.
std::vector<std::string> ReferencedTables(std::string_view sql);

/// Computed SELECT outputs of the query, rendered "<ALIAS>: <expression>".
std::vector<std::string> ComplexTerms(const QuerySketch& sketch);

/// Adds natural-language descriptions. Falls back to template descriptions
/// ("CTE <name>: selects <cols> from <tables>") when the model returns
/// nothing usable or fails.
DecomposedExample Annotate(const QuerySketch& sketch,
                           const std::optional<std::string>& nl_hint,
                           ModelClient& model);

/// Checks the DecomposedExample invariants; returns the first violation.
std::optional<std::string> ValidateExample(const DecomposedExample& example);

/// JSON in the example-library layout: input_nl, complex_terms, features{tables, CTEs,
/// CTE_desc}, cte_<i>_columns..., final_columns, full_sql_query.
nlohmann::ordered_json ToJson(const DecomposedExample& example);
DecomposedExample ExampleFromJson(const nlohmann::ordered_json& doc);

nlohmann::ordered_json ToJson(const ClauseBundle& bundle);
ClauseBundle BundleFromJson(const nlohmann::ordered_json& doc);

/// Every clause string of every bundle, in CTE then field order.
std::vector<std::string> AllClauses(const DecomposedExample& example);

}  // namespace sqlinsight
