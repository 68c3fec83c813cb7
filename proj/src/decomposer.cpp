#include "sqlinsight/decomposer.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <utility>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/sql/parser.hpp"
#include "sqlinsight/sql/printer.hpp"
#include "sqlinsight/sql/walk.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

using sql::Cte;
using sql::Expr;
using sql::ExprKind;
using sql::Query;
using sql::QueryPtr;
using sql::SelectCore;
using sql::TableRef;

std::string StripQuotes(const std::string& name) {
  if (name.size() >= 2 && name.front() == '"' && name.back() == '"') {
    return sql::ToUpperAscii(name.substr(1, name.size() - 2));
  }
  return name;
}

// Renames single-part relation references according to `renames`, honouring
// shadowing by inner WITH lists. A renamed reference without alias keeps the
// old name as alias when that name is used as a qualifier.
class RenameVisitor : public sql::Visitor {
 public:
  RenameVisitor(std::map<std::string, std::string> renames,
                std::set<std::string> qualifiers)
      : qualifiers_(std::move(qualifiers)) {
    scopes_.push_back(std::move(renames));
  }

  bool EnterQuery(Query& q) override {
    auto scope = scopes_.back();
    for (const Cte& cte : q.ctes) scope.erase(cte.name);
    scopes_.push_back(std::move(scope));
    return true;
  }

  void LeaveQuery(Query&) override { scopes_.pop_back(); }

  void OnTableRef(TableRef& ref) override {
    if (ref.name_parts.size() != 1) return;
    const auto& scope = scopes_.back();
    auto it = scope.find(ref.name_parts[0]);
    if (it == scope.end()) return;
    if (ref.alias.empty() && qualifiers_.count(ref.name_parts[0])) {
      ref.alias = ref.name_parts[0];
    }
    ref.name_parts[0] = it->second;
  }

 private:
  std::vector<std::map<std::string, std::string>> scopes_;
  std::set<std::string> qualifiers_;
};

void ApplyRenames(Query& body, const std::map<std::string, std::string>& renames) {
  if (renames.empty()) return;
  RenameVisitor visitor(renames, sql::CollectQualifiers(body));
  // The body's own WITH list has already been detached; walk it as a scope.
  sql::Walk(body, visitor);
}

class Hoister {
 public:
  explicit Hoister(Query& root) : root_(root), used_(sql::CollectRelationNames(root)) {}

  void Run() {
    std::vector<Cte> top = std::move(root_.ctes);
    root_.ctes.clear();
    for (Cte& cte : top) ProcessBinding(std::move(cte));
    HoistDerived(root_);
    root_.ctes = std::move(out_);
    root_.recursive = root_.recursive || recursive_;
  }

 private:
  std::string NextGeneratedName() {
    while (true) {
      std::string name = "CTE_" + std::to_string(++counter_);
      if (used_.insert(name).second) return name;
    }
  }

  std::string UniqueName(const std::string& base) {
    if (used_.insert(base).second) return base;
    for (int i = 2;; ++i) {
      std::string name = base + "_" + std::to_string(i);
      if (used_.insert(name).second) return name;
    }
  }

  // Flattens the binding's nested WITH list and hoists its derived tables,
  // emitting them ahead of the binding itself.
  void FlattenContents(Query& body, const std::string& prefix) {
    if (!body.ctes.empty()) {
      if (body.recursive) recursive_ = true;
      std::vector<Cte> nested = std::move(body.ctes);
      body.ctes.clear();
      std::map<std::string, std::string> renames;
      for (Cte& inner : nested) {
        std::string new_name = UniqueName(StripQuotes(prefix) + "_" + StripQuotes(inner.name));
        if (body.recursive) renames[inner.name] = new_name;
        ApplyRenames(*inner.query, renames);
        renames[inner.name] = new_name;
        inner.name = new_name;
        ProcessBinding(std::move(inner));
      }
      ApplyRenames(body, renames);
    }
    HoistDerived(body);
  }

  void ProcessBinding(Cte cte) {
    FlattenContents(*cte.query, cte.name);
    out_.push_back(std::move(cte));
  }

  void HoistDerived(Query& query) {
    std::set<std::string> qualifiers;
    bool have_qualifiers = false;
    auto hoist = [&](TableRef& ref) {
      if (!ref.IsDerived()) return;
      if (!have_qualifiers) {
        qualifiers = sql::CollectQualifiers(query);
        have_qualifiers = true;
      }
      Cte cte;
      cte.query = std::move(ref.derived);
      cte.columns = std::move(ref.column_aliases);
      FlattenContents(*cte.query, ref.alias.empty() ? "SUBQUERY" : ref.alias);
      cte.name = NextGeneratedName();
      ref.derived.reset();
      ref.column_aliases.clear();
      ref.name_parts = {cte.name};
      if (!ref.alias.empty() && !qualifiers.count(ref.alias)) ref.alias.clear();
      out_.push_back(std::move(cte));
    };
    for (SelectCore& core : query.branches) {
      for (sql::FromItem& from : core.from) {
        hoist(from.table);
        for (sql::Join& join : from.joins) hoist(join.table);
      }
    }
  }

  Query& root_;
  std::set<std::string> used_;
  std::vector<Cte> out_;
  int counter_ = 0;
  bool recursive_ = false;
};

void AppendUnique(std::vector<std::string>& list, std::string value) {
  if (value.empty()) return;
  if (std::find(list.begin(), list.end(), value) == list.end()) {
    list.push_back(std::move(value));
  }
}

void SplitConjuncts(const Expr& e, std::vector<const Expr*>& out) {
  if (e.kind == ExprKind::kBinary && e.text == "AND") {
    SplitConjuncts(*e.args[0], out);
    SplitConjuncts(*e.args[1], out);
    return;
  }
  out.push_back(&e);
}

ClauseBundle CoreBundle(const SelectCore& core) {
  ClauseBundle b;
  for (std::size_t i = 0; i < core.items.size(); ++i) {
    std::string item = sql::Print(core.items[i]);
    if (i == 0 && core.distinct) item = "DISTINCT " + item;
    if (i == 0 && core.all) item = "ALL " + item;
    AppendUnique(b.selects_calcs, std::move(item));
  }
  for (std::size_t i = 0; i < core.from.size(); ++i) {
    const sql::FromItem& from = core.from[i];
    AppendUnique(b.joins, (i == 0 ? "FROM " : ", ") + sql::Print(from.table));
    for (const sql::Join& join : from.joins) AppendUnique(b.joins, sql::Print(join));
  }
  if (core.where) {
    std::vector<const Expr*> parts;
    SplitConjuncts(*core.where, parts);
    for (const Expr* p : parts) AppendUnique(b.wheres, sql::Print(*p));
  }
  for (const auto& g : core.group_by) AppendUnique(b.group_bys, sql::Print(*g));
  if (core.having) {
    std::vector<const Expr*> parts;
    SplitConjuncts(*core.having, parts);
    for (const Expr* p : parts) AppendUnique(b.wheres, "HAVING " + sql::Print(*p));
  }
  return b;
}

void MergeInto(ClauseBundle& into, const ClauseBundle& from) {
  for (const auto& s : from.selects_calcs) AppendUnique(into.selects_calcs, s);
  for (const auto& s : from.joins) AppendUnique(into.joins, s);
  for (const auto& s : from.wheres) AppendUnique(into.wheres, s);
  for (const auto& s : from.group_bys) AppendUnique(into.group_bys, s);
  for (const auto& s : from.orders) AppendUnique(into.orders, s);
  for (const auto& s : from.limits) AppendUnique(into.limits, s);
}

void QueryBundle(const Query& q, ClauseBundle& bundle, SetStructure& set) {
  if (q.branches.size() == 1) {
    bundle = CoreBundle(q.branches[0]);
  } else {
    for (const SelectCore& core : q.branches) {
      set.branches.push_back(CoreBundle(core));
      MergeInto(bundle, set.branches.back());
    }
    set.operators = q.set_ops;
  }
  for (const auto& o : q.order_by) AppendUnique(bundle.orders, sql::Print(o));
  if (q.limit) {
    std::string limit = "LIMIT " + sql::Print(*q.limit);
    if (q.offset) limit += " OFFSET " + sql::Print(*q.offset);
    AppendUnique(bundle.limits, std::move(limit));
  }
}

std::string JoinStrings(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

bool StartsWith(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// A lone OR predicate would bind differently once joined with AND.
std::string GuardConjunct(const std::string& predicate, std::size_t count) {
  if (count < 2) return predicate;
  try {
    sql::ExprPtr e = sql::ParseExpression(predicate);
    if (e->kind == ExprKind::kBinary && e->text == "OR") return "(" + predicate + ")";
  } catch (const ParseError& err) {
    throw IrrecomposableSketch("predicate '" + predicate + "' does not parse: " + err.what());
  }
  return predicate;
}

std::string CoreText(const ClauseBundle& b, const std::string& scope) {
  if (b.selects_calcs.empty()) {
    throw IrrecomposableSketch(scope + ": bundle has no SELECT entries");
  }
  std::string out = "SELECT " + JoinStrings(b.selects_calcs, ", ");
  for (std::size_t i = 0; i < b.joins.size(); ++i) {
    const std::string& j = b.joins[i];
    bool is_from = StartsWith(j, "FROM ");
    if ((i == 0) != is_from) {
      throw IrrecomposableSketch(scope + ": join entry '" + j +
                                 "' cannot be placed (the first entry must be the FROM relation)");
    }
    if (i == 0) {
      out += " " + j;
    } else if (StartsWith(j, ",")) {
      out += j;
    } else {
      out += " " + j;
    }
  }
  std::vector<std::string> where;
  std::vector<std::string> having;
  for (const auto& w : b.wheres) {
    if (StartsWith(w, "HAVING ")) {
      having.push_back(w.substr(7));
    } else {
      where.push_back(w);
    }
  }
  if (!where.empty()) {
    std::vector<std::string> guarded;
    for (const auto& w : where) guarded.push_back(GuardConjunct(w, where.size()));
    out += " WHERE " + JoinStrings(guarded, " AND ");
  }
  if (!b.group_bys.empty()) out += " GROUP BY " + JoinStrings(b.group_bys, ", ");
  if (!having.empty()) {
    std::vector<std::string> guarded;
    for (const auto& h : having) guarded.push_back(GuardConjunct(h, having.size()));
    out += " HAVING " + JoinStrings(guarded, " AND ");
  }
  return out;
}

std::string ScopeText(const ClauseBundle& bundle, const SetStructure& set,
                      const std::string& scope) {
  std::string out;
  if (set.empty()) {
    out = CoreText(bundle, scope);
  } else {
    if (set.operators.size() + 1 != set.branches.size()) {
      throw IrrecomposableSketch(scope + ": set operators do not match branches");
    }
    for (std::size_t i = 0; i < set.branches.size(); ++i) {
      if (i) out += " " + set.operators[i - 1] + " ";
      out += CoreText(set.branches[i], scope + " branch " + std::to_string(i + 1));
    }
  }
  if (!bundle.orders.empty()) out += " ORDER BY " + JoinStrings(bundle.orders, ", ");
  if (bundle.limits.size() > 1) {
    throw IrrecomposableSketch(scope + ": more than one LIMIT entry");
  }
  if (!bundle.limits.empty()) {
    if (!StartsWith(bundle.limits[0], "LIMIT ")) {
      throw IrrecomposableSketch(scope + ": limit entry '" + bundle.limits[0] +
                                 "' must start with LIMIT");
    }
    out += " " + bundle.limits[0];
  }
  return out;
}

struct CteSummary {
  std::vector<std::string> columns;
  std::vector<std::string> relations;
};

// Output column labels and FROM relations of one scope, for template text.
CteSummary Summarize(const Query& q) {
  CteSummary s;
  for (const SelectCore& core : q.branches) {
    for (const auto& item : core.items) {
      AppendUnique(s.columns, item.alias.empty() ? sql::Print(*item.expr) : item.alias);
    }
    for (const auto& from : core.from) {
      if (!from.table.IsDerived()) AppendUnique(s.relations, sql::PrintName(from.table.name_parts));
      for (const auto& join : from.joins) {
        if (!join.table.IsDerived()) AppendUnique(s.relations, sql::PrintName(join.table.name_parts));
      }
    }
  }
  return s;
}

std::string TemplateDescription(const std::string& name, const CteSummary& s) {
  std::string text = "CTE " + name + ": selects " + JoinStrings(s.columns, ", ");
  if (!s.relations.empty()) text += " from " + JoinStrings(s.relations, ", ");
  return text;
}

std::vector<std::string> StringList(const nlohmann::ordered_json& v) {
  std::vector<std::string> out;
  if (!v.is_array()) return out;
  for (const auto& e : v) {
    if (e.is_string()) out.push_back(e.get<std::string>());
  }
  return out;
}

}  // namespace

std::string ReformatToCte(std::string_view sql_text) {
  QueryPtr q = sql::ParseSelect(sql_text);
  Hoister(*q).Run();
  return sql::Print(*q);
}

QuerySketch Decompose(std::string_view sql_text) {
  QuerySketch sketch;
  sketch.source_sql = ReformatToCte(sql_text);
  QueryPtr q = sql::ParseSelect(sketch.source_sql);
  sketch.recursive = q->recursive;
  for (const Cte& cte : q->ctes) {
    CteBundle cb;
    cb.name = cte.name;
    cb.columns = cte.columns;
    cb.materialized = cte.materialized;
    QueryBundle(*cte.query, cb.bundle, cb.set);
    sketch.ctes.push_back(std::move(cb));
  }
  QueryBundle(*q, sketch.final_bundle, sketch.final_set);
  return sketch;
}

std::string Recompose(const QuerySketch& sketch) {
  std::string text;
  std::set<std::string> names;
  if (!sketch.ctes.empty()) {
    text = sketch.recursive ? "WITH RECURSIVE " : "WITH ";
    for (std::size_t i = 0; i < sketch.ctes.size(); ++i) {
      const CteBundle& cte = sketch.ctes[i];
      if (cte.name.empty() || !names.insert(cte.name).second) {
        throw IrrecomposableSketch("CTE names must be unique and non-empty: '" + cte.name + "'");
      }
      if (i) text += ", ";
      text += cte.name;
      if (!cte.columns.empty()) text += "(" + JoinStrings(cte.columns, ", ") + ")";
      text += " AS ";
      if (!cte.materialized.empty()) text += cte.materialized + " ";
      text += "(" + ScopeText(cte.bundle, cte.set, "CTE " + cte.name) + ")";
    }
    text += " ";
  }
  text += ScopeText(sketch.final_bundle, sketch.final_set, "final");
  try {
    return sql::NormalizeSql(text);
  } catch (const ParseError& e) {
    throw IrrecomposableSketch(std::string("recomposed SQL does not parse: ") + e.what());
  }
}

std::vector<std::string> ReferencedTables(std::string_view sql_text) {
  QueryPtr q = sql::ParseSelect(sql_text);
  struct Collector : sql::Visitor {
    std::vector<std::set<std::string>> scopes{{}};
    std::vector<std::string> out;
    bool EnterQuery(Query& query) override {
      auto s = scopes.back();
      for (const Cte& cte : query.ctes) s.insert(cte.name);
      scopes.push_back(std::move(s));
      return true;
    }
    void LeaveQuery(Query&) override { scopes.pop_back(); }
    void OnTableRef(TableRef& ref) override {
      if (ref.name_parts.empty()) return;
      if (ref.name_parts.size() == 1 && scopes.back().count(ref.name_parts[0])) return;
      AppendUnique(out, sql::PrintName(ref.name_parts));
    }
  } collector;
  sql::Walk(*q, collector);
  return collector.out;
}

std::vector<std::string> ComplexTerms(const QuerySketch& sketch) {
  QueryPtr q = sql::ParseSelect(sketch.source_sql);
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto scan = [&](const Query& query) {
    for (const SelectCore& core : query.branches) {
      for (const auto& item : core.items) {
        if (item.alias.empty()) continue;
        ExprKind k = item.expr->kind;
        if (k == ExprKind::kColumn || k == ExprKind::kLiteral || k == ExprKind::kStar) continue;
        if (!seen.insert(item.alias).second) continue;
        out.push_back(item.alias + ": " + sql::Print(*item.expr));
      }
    }
  };
  for (const Cte& cte : q->ctes) scan(*cte.query);
  scan(*q);
  return out;
}

DecomposedExample Annotate(const QuerySketch& sketch,
                           const std::optional<std::string>& nl_hint,
                           ModelClient& model) {
  QueryPtr q = sql::ParseSelect(sketch.source_sql);

  DecomposedExample ex;
  ex.full_sql_query = sketch.source_sql;
  ex.features.tables = ReferencedTables(sketch.source_sql);
  ex.features.cte_count = sketch.ctes.size();
  for (const CteBundle& cte : sketch.ctes) ex.cte_bundles.push_back(cte.bundle);
  ex.final_bundle = sketch.final_bundle;

  std::string prompt =
      "Describe the SQL query below for a text-to-SQL example library.\n"
      "Respond with a JSON object with keys:\n"
      "  \"input_nl\": the natural-language question the query answers,\n"
      "  \"cte_desc\": one short description per CTE, in order (" +
      std::to_string(sketch.ctes.size()) +
      " entries),\n"
      "  \"complex_terms\": complex calculations, each as '<TERM>: <definition>, "
      "its SQL representation is <sql>'.\n";
  if (nl_hint) prompt += "\nThe question is: " + *nl_hint + "\n";
  prompt += "\n### SQL\n\n" + sketch.source_sql + "\n";

  nlohmann::ordered_json reply;
  try {
    std::string text = StripCodeFences(model.Complete(prompt, ModelRole::kAnnotate));
    if (!text.empty()) {
      reply = nlohmann::ordered_json::parse(text, nullptr, false);
      if (reply.is_discarded() || !reply.is_object()) reply = nlohmann::ordered_json::object();
    }
  } catch (const ModelError&) {
    reply = nlohmann::ordered_json::object();
  }

  if (nl_hint) {
    ex.input_nl = *nl_hint;
  } else if (reply.contains("input_nl") && reply["input_nl"].is_string() &&
             !reply["input_nl"].get<std::string>().empty()) {
    ex.input_nl = reply["input_nl"].get<std::string>();
  } else {
    CteSummary final_summary = Summarize(*q);
    ex.input_nl = "Select " + JoinStrings(final_summary.columns, ", ");
    if (!final_summary.relations.empty()) {
      ex.input_nl += " from " + JoinStrings(final_summary.relations, ", ");
    }
  }

  std::vector<std::string> descs =
      reply.contains("cte_desc") ? StringList(reply["cte_desc"]) : std::vector<std::string>{};
  for (std::size_t i = 0; i < sketch.ctes.size(); ++i) {
    if (i < descs.size() && !descs[i].empty()) {
      ex.features.cte_desc.push_back(descs[i]);
    } else {
      ex.features.cte_desc.push_back(
          TemplateDescription(sketch.ctes[i].name, Summarize(*q->ctes[i].query)));
    }
  }

  std::vector<std::string> terms =
      reply.contains("complex_terms") ? StringList(reply["complex_terms"]) : std::vector<std::string>{};
  std::erase_if(terms, [](const std::string& t) { return t.empty(); });
  ex.complex_terms = terms.empty() ? ComplexTerms(sketch) : terms;
  return ex;
}

std::vector<std::string> AllClauses(const DecomposedExample& example) {
  std::vector<std::string> out;
  auto add = [&](const ClauseBundle& b) {
    for (const auto* list : {&b.selects_calcs, &b.joins, &b.wheres, &b.group_bys,
                             &b.orders, &b.limits}) {
      out.insert(out.end(), list->begin(), list->end());
    }
  };
  for (const auto& b : example.cte_bundles) add(b);
  add(example.final_bundle);
  return out;
}

std::optional<std::string> ValidateExample(const DecomposedExample& ex) {
  if (ex.features.cte_count != ex.cte_bundles.size()) {
    return "CTEs count does not match the number of cte bundles";
  }
  if (ex.features.cte_desc.size() != ex.cte_bundles.size()) {
    return "CTE_desc must have one entry per CTE";
  }
  std::string normalized;
  std::vector<std::string> tables;
  try {
    normalized = sql::NormalizeSql(ex.full_sql_query);
    tables = ReferencedTables(ex.full_sql_query);
  } catch (const Error& e) {
    return std::string("full_sql_query does not parse: ") + e.what();
  }
  for (const auto& t : ex.features.tables) {
    if (std::find(tables.begin(), tables.end(), sql::NormalizeFragment(t)) == tables.end()) {
      return "table " + t + " is not referenced by full_sql_query";
    }
  }
  const std::string token_form = sql::NormalizeFragment(normalized);
  auto check = [&](const ClauseBundle& b) -> std::optional<std::string> {
    for (const auto* list : {&b.selects_calcs, &b.joins, &b.wheres, &b.group_bys,
                             &b.orders, &b.limits}) {
      std::set<std::string> seen;
      for (const auto& s : *list) {
        if (s.empty()) return "empty clause string";
        if (!seen.insert(s).second) return "duplicate clause string '" + s + "'";
        if (normalized.find(s) == std::string::npos &&
            token_form.find(sql::NormalizeFragment(s)) == std::string::npos) {
          return "clause '" + s + "' does not occur in full_sql_query";
        }
      }
    }
    return std::nullopt;
  };
  for (const auto& b : ex.cte_bundles) {
    if (auto err = check(b)) return err;
  }
  return check(ex.final_bundle);
}

nlohmann::ordered_json ToJson(const ClauseBundle& b) {
  nlohmann::ordered_json j;
  j["SELECTs/CALCs"] = b.selects_calcs;
  j["JOINs"] = b.joins;
  j["WHEREs"] = b.wheres;
  j["GROUP_BYs"] = b.group_bys;
  j["ORDERs"] = b.orders;
  j["LIMITs"] = b.limits;
  return j;
}

ClauseBundle BundleFromJson(const nlohmann::ordered_json& j) {
  ClauseBundle b;
  auto get = [&](const char* key, std::vector<std::string>& into) {
    if (j.contains(key)) into = j.at(key).get<std::vector<std::string>>();
  };
  get("SELECTs/CALCs", b.selects_calcs);
  get("JOINs", b.joins);
  get("WHEREs", b.wheres);
  get("GROUP_BYs", b.group_bys);
  get("ORDERs", b.orders);
  get("LIMITs", b.limits);
  return b;
}

nlohmann::ordered_json ToJson(const DecomposedExample& ex) {
  nlohmann::ordered_json j;
  j["input_nl"] = ex.input_nl;
  j["complex_terms"] = ex.complex_terms;
  j["features"] = {
      {"tables", ex.features.tables},
      {"CTEs", ex.features.cte_count},
      {"CTE_desc", ex.features.cte_desc},
  };
  for (std::size_t i = 0; i < ex.cte_bundles.size(); ++i) {
    j["cte_" + std::to_string(i + 1) + "_columns"] = ToJson(ex.cte_bundles[i]);
  }
  j["final_columns"] = ToJson(ex.final_bundle);
  j["full_sql_query"] = ex.full_sql_query;
  return j;
}

DecomposedExample ExampleFromJson(const nlohmann::ordered_json& j) {
  try {
    DecomposedExample ex;
    ex.input_nl = j.at("input_nl").get<std::string>();
    ex.complex_terms = j.at("complex_terms").get<std::vector<std::string>>();
    const auto& f = j.at("features");
    ex.features.tables = f.at("tables").get<std::vector<std::string>>();
    ex.features.cte_count = f.at("CTEs").get<std::size_t>();
    ex.features.cte_desc = f.at("CTE_desc").get<std::vector<std::string>>();
    for (std::size_t i = 0; i < ex.features.cte_count; ++i) {
      ex.cte_bundles.push_back(BundleFromJson(j.at("cte_" + std::to_string(i + 1) + "_columns")));
    }
    ex.final_bundle = BundleFromJson(j.at("final_columns"));
    ex.full_sql_query = j.at("full_sql_query").get<std::string>();
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed example object: ") + e.what());
  }
}

}  // namespace sqlinsight
