#include "sqlinsight/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

using TermVector = std::map<std::string, double>;

TermVector UnitVector(std::string_view text) {
  TermVector v;
  for (auto& t : WordTokens(text)) v[std::move(t)] += 1.0;
  double norm = 0.0;
  for (const auto& [t, n] : v) norm += n * n;
  norm = std::sqrt(norm);
  for (auto& [t, n] : v) n /= norm;
  return v;
}

double Cosine(const TermVector& a, const TermVector& b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [t, n] : a) {
    na += n * n;
    auto it = b.find(t);
    if (it != b.end()) dot += n * it->second;
  }
  for (const auto& [t, n] : b) nb += n * n;
  if (dot <= 0.0 || na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::string SanitizeLabel(const std::string& reply) {
  std::string first = Trim(reply.substr(0, reply.find('\n')));
  std::string out;
  for (char c : first) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      out += static_cast<char>(std::tolower(u));
    } else if (!out.empty() && out.back() != '_') {
      out += '_';
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

std::string StripReply(std::string text) {
  text = Trim(text);
  if (text.size() >= 2 && (text.front() == '"' || text.front() == '\'') &&
      text.back() == text.front()) {
    text = Trim(text.substr(1, text.size() - 2));
  }
  return CollapseWhitespace(text);
}

std::string InstructionText(const Instruction& instr) {
  return instr.sql_snippet ? instr.text + " " + *instr.sql_snippet : instr.text;
}

std::string ExampleContext(const DecomposedExample& ex) {
  std::string out = ex.input_nl;
  for (const auto& term : ex.complex_terms) out += " " + term;
  return out;
}

std::set<std::string> ProtectedTables(const std::vector<ScoredExample>& chosen) {
  std::set<std::string> out;
  for (const auto& ex : chosen) {
    for (const auto& t : ex.example.features.tables) out.insert(sql::ToUpperAscii(t));
  }
  return out;
}

std::string PrunePrompt(const CanonicalQuery& cq, const std::vector<ScoredExample>& chosen,
                        const SchemaRepresentation& schema) {
  std::string prompt =
      "Identify schema elements that are irrelevant to the question below.\n"
      "List one element per line as TABLE or TABLE.COLUMN. Answer NONE when every\n"
      "element may be needed.\n\n### Question\n\n" +
      cq.reformulated + "\n\n### Tables used by similar examples\n\n";
  std::set<std::string> used;
  for (const auto& ex : chosen) {
    for (const auto& t : ex.example.features.tables) used.insert(t);
  }
  if (used.empty()) prompt += "(none)\n";
  for (const auto& t : used) prompt += "- " + t + "\n";
  prompt += "\n### Schema Representation\n\n" + RenderSchema(schema);
  return prompt;
}

// Elements the model named, upper-cased. Unknown names are ignored.
void CollectPruned(const std::string& reply, const SchemaRepresentation& schema,
                   std::set<std::string>& tables, std::set<std::string>& columns) {
  std::istringstream in(reply);
  std::string line;
  while (std::getline(in, line)) {
    std::string item = Trim(line);
    while (!item.empty() && (item.front() == '-' || item.front() == '*')) item = Trim(item.substr(1));
    while (!item.empty() && (item.back() == ',' || item.back() == '.')) item.pop_back();
    item = sql::ToUpperAscii(item);
    if (item.empty() || item == "NONE") continue;
    auto dot = item.find('.');
    const TableRepr* t = schema.FindTable(item.substr(0, dot));
    if (!t) continue;
    if (dot == std::string::npos) {
      tables.insert(sql::ToUpperAscii(t->name));
      continue;
    }
    std::string col = item.substr(dot + 1);
    for (const auto& c : t->columns) {
      if (sql::ToUpperAscii(c.name) == col) columns.insert(sql::ToUpperAscii(t->name) + "." + col);
    }
  }
}

}  // namespace

std::string ClassifyIntent(const std::string& nl, const KnowledgeSet& ks, ModelClient& model,
                           double tau, RequestTrace* trace) {
  const TermVector query = UnitVector(nl);
  std::string best;
  double best_score = -1.0;
  for (const auto& [label, ids] : ks.partitions) {
    if (ids.empty()) continue;
    TermVector centroid;
    double member_best = 0.0;
    for (const auto& id : ids) {
      auto it = ks.examples.find(id);
      if (it == ks.examples.end()) continue;
      for (const auto& [t, n] : UnitVector(it->second.input_nl)) centroid[t] += n;
      member_best = std::max(member_best, Similarity(nl, it->second.input_nl));
    }
    double score = std::max(Cosine(query, centroid), member_best);
    if (score > best_score) {
      best_score = score;
      best = label;
    }
  }
  if (!best.empty() && best_score >= tau) return best;

  std::string prompt =
      "Give a short snake_case label for the intent of the question below (for\n"
      "example ranking_change or trend_over_time). Reuse a known label when it fits.\n\n";
  prompt += "### Known labels\n\n";
  if (ks.partitions.empty()) prompt += "(none)\n";
  for (const auto& [label, ids] : ks.partitions) prompt += "- " + label + "\n";
  prompt += "\n### Question\n\n" + nl + "\n";
  try {
    std::string label = SanitizeLabel(model.Complete(prompt, ModelRole::kIntent));
    if (!label.empty()) return label;
  } catch (const ModelError&) {
  }
  if (trace) trace->Degraded("intent");
  return "general";
}

CanonicalQuery Reformulate(const std::string& nl, const KnowledgeSet& ks, ModelClient& model,
                           double tau, RequestTrace* trace) {
  CanonicalQuery cq;
  cq.original = nl;
  const std::string prompt =
      "Rewrite the question below as one imperative sentence that states the\n"
      "metrics, filters and timeframes explicitly. Answer with the sentence only.\n\n"
      "### Question\n\n" +
      nl + "\n";
  try {
    cq.reformulated = StripReply(model.Complete(prompt, ModelRole::kReformulate));
  } catch (const ModelError&) {
    cq.reformulated.clear();
  }
  if (cq.reformulated.empty()) {
    cq.reformulated = nl;
    if (trace) trace->Degraded("reformulate");
  }
  cq.intent = ClassifyIntent(cq.reformulated, ks, model, tau, trace);

  std::set<std::string> seen;
  for (const auto* text : {&cq.original, &cq.reformulated}) {
    for (auto& term : KeyTerms(*text)) {
      if (seen.insert(term).second) cq.key_terms.push_back(std::move(term));
    }
  }
  return cq;
}

std::vector<ScoredExample> RetrieveExamples(const CanonicalQuery& cq, const KnowledgeSet& ks,
                                            std::size_t k) {
  std::vector<std::string> candidates;
  auto part = ks.partitions.find(cq.intent);
  if (part != ks.partitions.end() && !part->second.empty()) {
    candidates = part->second;
  } else {
    for (const auto& [id, ex] : ks.examples) candidates.push_back(id);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<ScoredExample> scored;
  for (const auto& id : candidates) {
    auto it = ks.examples.find(id);
    if (it == ks.examples.end()) continue;
    double score = std::max(Similarity(cq.reformulated, it->second.input_nl),
                            Similarity(cq.original, it->second.input_nl));
    scored.push_back({id, score, it->second});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

std::vector<ScoredInstruction> RetrieveInstructions(const CanonicalQuery& cq,
                                                    const std::vector<ScoredExample>& chosen,
                                                    const KnowledgeSet& ks, std::size_t k,
                                                    double lambda) {
  std::vector<const Instruction*> candidates;
  for (const auto& [id, instr] : ks.instructions) {
    if (instr.intents.empty() ||
        std::find(instr.intents.begin(), instr.intents.end(), cq.intent) != instr.intents.end()) {
      candidates.push_back(&instr);
    }
  }
  if (candidates.empty()) {
    for (const auto& [id, instr] : ks.instructions) candidates.push_back(&instr);
  }

  std::vector<ScoredInstruction> scored;
  for (const Instruction* instr : candidates) {
    const std::string text = InstructionText(*instr);
    double example_term = 0.0;
    for (const auto& ex : chosen) {
      example_term = std::max(example_term, Similarity(ExampleContext(ex.example), text));
    }
    double score = lambda * Similarity(cq.reformulated, text) + (1.0 - lambda) * example_term;
    scored.push_back({instr->id, std::clamp(score, 0.0, 1.0), *instr});
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

SchemaRepresentation PruneSchema(const CanonicalQuery& cq,
                                 const std::vector<ScoredExample>& chosen,
                                 const SchemaRepresentation& schema, ModelClient& model,
                                 bool per_table, RequestTrace* trace) {
  std::set<std::string> pruned_tables;
  std::set<std::string> pruned_columns;
  try {
    if (per_table) {
      for (const auto& t : schema.tables) {
        SchemaRepresentation single;
        single.tables.push_back(t);
        CollectPruned(model.Complete(PrunePrompt(cq, chosen, single), ModelRole::kPrune), single,
                      pruned_tables, pruned_columns);
      }
    } else {
      CollectPruned(model.Complete(PrunePrompt(cq, chosen, schema), ModelRole::kPrune), schema,
                    pruned_tables, pruned_columns);
    }
  } catch (const ModelError&) {
    if (trace) trace->Degraded("prune");
    return schema;
  }

  const std::set<std::string> protect = ProtectedTables(chosen);
  std::set<std::string> keep;
  for (const auto& t : schema.tables) {
    const std::string name = sql::ToUpperAscii(t.name);
    if (protect.count(name)) {
      keep.insert(t.name);
      continue;
    }
    if (pruned_tables.count(name)) continue;
    std::vector<std::string> cols;
    for (const auto& c : t.columns) {
      if (!pruned_columns.count(name + "." + sql::ToUpperAscii(c.name))) cols.push_back(c.name);
    }
    if (cols.size() == t.columns.size()) {
      keep.insert(t.name);
    } else {
      for (const auto& c : cols) keep.insert(t.name + "." + c);
    }
  }
  if (keep.empty()) {
    if (trace) trace->Degraded("prune");
    return schema;
  }
  return FilterSchema(schema, keep);
}

RetrievalResult Retrieve(const CanonicalQuery& cq, const KnowledgeSet& ks, ModelClient& model,
                         const RetrievalSettings& settings, RequestTrace* trace) {
  RetrievalResult rr;
  auto stage = [&](std::string_view name) {
    if (!trace) return;
    trace->Enter(name);
    if (trace->on_stage) trace->on_stage(name, rr);
  };
  rr.examples = RetrieveExamples(cq, ks, settings.k_examples);
  stage("examples");
  rr.instructions =
      RetrieveInstructions(cq, rr.examples, ks, settings.k_instructions, settings.lambda);
  stage("instructions");
  rr.pruned_schema = ks.schema.empty()
                         ? ks.schema
                         : PruneSchema(cq, rr.examples, ks.schema, model,
                                       settings.prune_per_table, trace);
  stage("schema");
  return rr;
}

}  // namespace sqlinsight
