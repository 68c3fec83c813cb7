#include "sqlinsight/sql/walk.hpp"

namespace sqlinsight::sql {
namespace {

void WalkOrder(std::vector<OrderItem>& items, Visitor& v) {
  for (OrderItem& item : items) Walk(*item.expr, v);
}

void WalkTableRef(TableRef& ref, Visitor& v) {
  v.OnTableRef(ref);
  if (ref.derived) Walk(*ref.derived, v);
}

void WalkCore(SelectCore& core, Visitor& v) {
  for (SelectItem& item : core.items) Walk(*item.expr, v);
  for (FromItem& from : core.from) {
    WalkTableRef(from.table, v);
    for (Join& join : from.joins) {
      WalkTableRef(join.table, v);
      if (join.on) Walk(*join.on, v);
    }
  }
  if (core.where) Walk(*core.where, v);
  for (ExprPtr& g : core.group_by) Walk(*g, v);
  if (core.having) Walk(*core.having, v);
}

}  // namespace

void Walk(Query& q, Visitor& v) {
  if (!v.EnterQuery(q)) return;
  for (Cte& cte : q.ctes) Walk(*cte.query, v);
  for (SelectCore& core : q.branches) WalkCore(core, v);
  WalkOrder(q.order_by, v);
  if (q.limit) Walk(*q.limit, v);
  if (q.offset) Walk(*q.offset, v);
  v.LeaveQuery(q);
}

void Walk(Expr& e, Visitor& v) {
  v.OnExpr(e);
  for (ExprPtr& arg : e.args) Walk(*arg, v);
  if (e.subquery) Walk(*e.subquery, v);
  if (e.filter) Walk(*e.filter, v);
  if (e.over) {
    for (ExprPtr& p : e.over->partition_by) Walk(*p, v);
    WalkOrder(e.over->order_by, v);
  }
}

std::set<std::string> CollectQualifiers(Query& query) {
  struct Collector : Visitor {
    std::set<std::string> out;
    void OnExpr(Expr& e) override {
      if (e.kind == ExprKind::kColumn && e.name_parts.size() >= 2) {
        out.insert(e.name_parts[e.name_parts.size() - 2]);
      } else if (e.kind == ExprKind::kStar && !e.name_parts.empty()) {
        out.insert(e.name_parts.back());
      }
    }
  } collector;
  Walk(query, collector);
  return collector.out;
}

std::set<std::string> CollectRelationNames(Query& query) {
  struct Collector : Visitor {
    std::set<std::string> out;
    bool EnterQuery(Query& q) override {
      for (const Cte& cte : q.ctes) out.insert(cte.name);
      return true;
    }
    void OnTableRef(TableRef& ref) override {
      if (!ref.name_parts.empty()) out.insert(ref.name_parts.back());
    }
  } collector;
  Walk(query, collector);
  return collector.out;
}

}  // namespace sqlinsight::sql
