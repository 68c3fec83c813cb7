#pragma once

#include <functional>
#include <set>
#include <string>

#include "sqlinsight/sql/ast.hpp"

namespace sqlinsight::sql {

/// Depth-first traversal over every node reachable from a query, including
/// CTE bodies, derived tables and expression subqueries.
class Visitor {
 public:
  virtual ~Visitor() = default;
  /// Return false to skip the query's subtree.
  virtual bool EnterQuery(Query&) { return true; }
  virtual void LeaveQuery(Query&) {}
  virtual void OnTableRef(TableRef&) {}
  virtual void OnExpr(Expr&) {}
};

void Walk(Query& query, Visitor& visitor);
void Walk(Expr& expr, Visitor& visitor);

/// Qualifiers (first name part of multi-part column refs and qualified
/// stars) used anywhere inside the query.
std::set<std::string> CollectQualifiers(Query& query);

/// Every single-part relation name and CTE name mentioned anywhere.
std::set<std::string> CollectRelationNames(Query& query);

}  // namespace sqlinsight::sql
