#include "sqlinsight/generation.hpp"

#include <regex>
#include <set>
#include <sstream>

#include "sqlinsight/errors.hpp"
#include "sqlinsight/sql/lexer.hpp"
#include "sqlinsight/sql/parser.hpp"
#include "sqlinsight/text.hpp"

namespace sqlinsight {
namespace {

std::set<std::string> IdentifierWords(const std::string& text) {
  static const std::regex kWord(R"([A-Za-z_][A-Za-z0-9_]*)");
  std::set<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kWord); it != std::sregex_iterator();
       ++it) {
    out.insert(sql::ToUpperAscii(it->str()));
  }
  return out;
}

std::vector<std::string> StepRefs(const PlanStep& step, const RetrievalResult& rr) {
  std::string text = step.description;
  if (step.pseudo_sql) text += " " + *step.pseudo_sql;
  const auto words = IdentifierWords(text);
  std::vector<std::string> refs;
  for (const auto& t : rr.pruned_schema.tables) {
    if (words.count(sql::ToUpperAscii(t.name))) refs.push_back(t.name);
  }
  for (const auto& t : rr.pruned_schema.tables) {
    for (const auto& c : t.columns) {
      if (words.count(sql::ToUpperAscii(c.name))) refs.push_back(t.name + "." + c.name);
    }
  }
  static const std::regex kInstructionRef(R"([Ii]nstruction\s+#?(\d+))");
  std::set<std::string> ids;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), kInstructionRef);
       it != std::sregex_iterator(); ++it) {
    std::size_t n = std::stoul((*it)[1].str());
    if (n >= 1 && n <= rr.instructions.size()) ids.insert(rr.instructions[n - 1].id);
  }
  for (const auto& instr : rr.instructions) {
    if (words.count(sql::ToUpperAscii(instr.id))) ids.insert(instr.id);
  }
  for (const auto& instr : rr.instructions) {
    if (ids.count(instr.id)) refs.push_back(instr.id);
  }
  return refs;
}

std::string PlanText(const CoTPlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const std::string number = std::to_string(i + 1) + ". ";
    out += number + plan.steps[i].description + "\n";
    if (plan.steps[i].pseudo_sql) {
      out += std::string(number.size(), ' ') + "pseudo-SQL: " + *plan.steps[i].pseudo_sql + "\n";
    }
  }
  return out;
}

std::string InstructionsText(const RetrievalResult& rr) {
  std::vector<const Instruction*> items;
  for (const auto& s : rr.instructions) items.push_back(&s.instruction);
  return RenderInstructions(items);
}

}  // namespace

std::string PromptBundle::Text() const {
  std::string out;
  for (const auto& s : sections) {
    std::string body = s.body;
    while (!body.empty() && body.back() == '\n') body.pop_back();
    out += s.heading + "\n\n" + body + "\n\n";
  }
  return out;
}

CoTPlan ParsePlan(const std::string& text, const RetrievalResult& rr) {
  static const std::regex kNumbered(R"(^\s*(\d+)[.)]\s+(.*)$)");
  CoTPlan plan;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, kNumbered)) {
      plan.steps.push_back({Trim(m[2].str()), std::nullopt, {}});
    } else if (!plan.steps.empty() && !Trim(line).empty()) {
      plan.steps.back().description += " " + Trim(line);
    }
  }
  for (auto& step : plan.steps) {
    std::string& d = step.description;
    d = CollapseWhitespace(d);
    if (!d.empty() && d.back() == ']') {
      auto open = d.rfind('[');
      if (open != std::string::npos) {
        std::string pseudo = Trim(d.substr(open + 1, d.size() - open - 2));
        d = Trim(d.substr(0, open));
        if (!pseudo.empty()) step.pseudo_sql = pseudo;
      }
    }
    if (d.empty() && step.pseudo_sql) d = *step.pseudo_sql;
  }
  std::erase_if(plan.steps, [](const PlanStep& s) { return s.description.empty(); });
  for (auto& step : plan.steps) step.refs = StepRefs(step, rr);
  return plan;
}

CoTPlan BuildPlan(const CanonicalQuery& cq, const RetrievalResult& rr, ModelClient& model,
                  RequestTrace* trace) {
  std::string prompt =
      "Write a short numbered plan for answering the question with SQL over the\n"
      "schema below. One step per line, formatted \"<n>. <step>\". When a step maps\n"
      "to a SQL fragment, add it in square brackets at the end of the line.\n\n";
  prompt += "### Input Query\n\n" + cq.reformulated + "\n\n";
  prompt += "### Schema Representation\n\n" + RenderSchema(rr.pruned_schema) + "\n";
  const std::string instructions = InstructionsText(rr);
  prompt += "### Intent-specific Instructions:\n\n" + (instructions.empty() ? "(none)\n" : instructions);
  prompt += "\n### Similar Questions\n\n";
  if (rr.examples.empty()) prompt += "(none)\n";
  for (const auto& ex : rr.examples) prompt += "- " + ex.example.input_nl + "\n";

  CoTPlan plan;
  try {
    plan = ParsePlan(model.Complete(prompt, ModelRole::kPlan), rr);
  } catch (const ModelError&) {
    plan.steps.clear();
  }
  if (plan.steps.empty()) {
    if (trace) trace->Degraded("plan");
    plan.steps.push_back({kFallbackStep, std::nullopt, {}});
  }
  return plan;
}

CoTPlan AugmentWithPseudoSql(const CoTPlan& plan, const std::vector<DecomposedExample>& examples,
                             double threshold) {
  std::vector<std::string> clauses;
  for (const auto& ex : examples) {
    for (auto& c : AllClauses(ex)) clauses.push_back(std::move(c));
  }
  CoTPlan out = plan;
  if (clauses.empty()) return out;
  for (auto& step : out.steps) {
    if (step.pseudo_sql) continue;
    double best = 0.0;
    const std::string* pick = nullptr;
    for (const auto& clause : clauses) {
      double s = Similarity(step.description, clause);
      if (s > best) {
        best = s;
        pick = &clause;
      }
    }
    if (pick && best >= threshold) step.pseudo_sql = *pick;
  }
  return out;
}

PromptBundle AssemblePrompt(const CanonicalQuery& cq, const RetrievalResult& rr,
                            const CoTPlan& plan) {
  auto or_none = [](std::string body) { return body.empty() ? std::string("(none)") : body; };
  std::string examples;
  for (const auto& ex : rr.examples) {
    if (!examples.empty()) examples += "\n\n";
    examples += ToJson(ex.example).dump(4);
  }
  PromptBundle bundle;
  bundle.sections = {
      {"### Input Query", or_none(cq.reformulated)},
      {"### Schema Representation", or_none(RenderSchema(rr.pruned_schema))},
      {"### Intent-specific Instructions:", or_none(InstructionsText(rr))},
      {"### Example Decompositions", or_none(examples)},
      {"### Reasoning Plan", or_none(PlanText(plan))},
  };
  return bundle;
}

std::string CleanModelSql(const std::string& text) {
  std::string out = StripCodeFences(text);
  while (!out.empty() && (out.back() == ';' || std::isspace(static_cast<unsigned char>(out.back())))) {
    out.pop_back();
  }
  return out;
}

std::optional<std::string> SqlProblem(const std::string& sql_text) {
  if (Trim(sql_text).empty()) return std::string("empty answer");
  try {
    sql::ParseSelect(sql_text);
    return std::nullopt;
  } catch (const Error& e) {
    return std::string(e.what());
  }
}

CandidateSql GenerateSql(const PromptBundle& bundle, const CoTPlan& plan, ModelClient& model) {
  const std::string base = bundle.Text() +
                           "### Task\n\nWrite one SQL SELECT statement (WITH clauses allowed) "
                           "that answers the input query. Return only the SQL.\n";
  CandidateSql candidate;
  candidate.plan = plan;
  candidate.role = ModelRole::kGenerate;
  candidate.sql = CleanModelSql(model.Complete(base, ModelRole::kGenerate));
  auto problem = SqlProblem(candidate.sql);
  if (!problem) return candidate;

  const std::string reask = base + "\n### Previous Answer\n\n" + candidate.sql +
                            "\n\n### Parse Error\n\n" + *problem +
                            "\n\nReturn one corrected SQL SELECT statement only.\n";
  candidate.attempt = 2;
  candidate.sql = CleanModelSql(model.Complete(reask, ModelRole::kGenerate));
  problem = SqlProblem(candidate.sql);
  if (problem) throw UnparsableGeneration("model output is not a single SELECT: " + *problem);
  return candidate;
}

nlohmann::ordered_json ToJson(const CoTPlan& plan) {
  nlohmann::ordered_json steps = nlohmann::ordered_json::array();
  for (const auto& s : plan.steps) {
    nlohmann::ordered_json step;
    step["description"] = s.description;
    step["pseudo_sql"] = s.pseudo_sql ? nlohmann::ordered_json(*s.pseudo_sql) : nullptr;
    step["refs"] = s.refs;
    steps.push_back(std::move(step));
  }
  return {{"steps", steps}};
}

}  // namespace sqlinsight
