#include "sqlinsight/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace sqlinsight {
namespace {

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

const std::set<std::string, std::less<>>& Stopwords() {
  static const std::set<std::string, std::less<>> kWords = {
      "a",     "about", "above",  "after", "again", "all",    "also",  "am",    "an",
      "and",   "any",   "are",    "as",    "at",    "be",     "been",  "being", "below",
      "both",  "but",   "by",     "can",   "could", "did",    "do",    "does",  "doing",
      "down",  "during", "each",  "either", "every", "few",   "for",   "from",  "further",
      "get",   "give",  "had",    "has",   "have",  "having", "he",    "her",   "here",
      "hers",  "him",   "his",    "how",   "i",     "if",     "in",    "into",  "is",
      "it",    "its",   "itself", "just",  "list",  "me",     "more",  "most",  "my",
      "no",    "nor",   "not",    "now",   "of",    "off",    "on",    "once",  "only",
      "or",    "other", "our",    "ours",  "out",   "over",   "own",   "per",   "please",
      "same",  "she",   "should", "show",  "so",    "some",   "such",  "than",  "that",
      "the",   "their", "them",   "then",  "there", "these",  "they",  "this",  "those",
      "through", "to",  "too",    "under", "until", "up",     "us",    "very",  "was",
      "we",    "were",  "what",   "when",  "where", "which",  "while", "who",   "whom",
      "why",   "will",  "with",   "within", "would", "you",   "your",  "yours",
  };
  return kWords;
}

}  // namespace

std::vector<std::string> WordTokens(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (IsWordChar(c)) {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (c == '-' && !current.empty() && i + 1 < text.size() && IsWordChar(text[i + 1])) {
      current += '-';
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

bool IsStopword(std::string_view token) { return Stopwords().count(token) > 0; }

std::vector<std::string> KeyTerms(std::string_view text) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& tok : WordTokens(text)) {
    if (IsStopword(tok)) continue;
    if (seen.insert(tok).second) out.push_back(std::move(tok));
  }
  return out;
}

double Similarity(std::string_view a, std::string_view b) {
  std::map<std::string, double> ta;
  std::map<std::string, double> tb;
  for (auto& t : WordTokens(a)) ta[std::move(t)] += 1.0;
  for (auto& t : WordTokens(b)) tb[std::move(t)] += 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [tok, n] : ta) {
    na += n * n;
    auto it = tb.find(tok);
    if (it != tb.end()) dot += n * it->second;
  }
  for (const auto& [tok, n] : tb) nb += n * n;
  if (dot == 0.0) return 0.0;
  // Equal multisets give exactly 1 despite rounding in the norms.
  if (ta == tb) return 1.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::string Trim(std::string_view text) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  bool pending = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending = !out.empty();
    } else {
      if (pending) out += ' ';
      pending = false;
      out += c;
    }
  }
  return out;
}

std::string StripCodeFences(std::string_view text) {
  std::string out = Trim(text);
  if (out.rfind("```", 0) != 0) return out;
  out = out.substr(3);
  auto close = out.rfind("```");
  if (close != std::string::npos) out = out.substr(0, close);
  auto nl = out.find('\n');
  std::string first = out.substr(0, nl);
  if (nl != std::string::npos && first.find(' ') == std::string::npos) {
    out = out.substr(nl + 1);
  } else {
    auto sp = first.find(' ');
    std::string tag;
    for (char c : first.substr(0, sp)) tag += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    static const std::set<std::string> kTags = {"sql", "sqlite", "postgres", "postgresql",
                                                "mysql", "tsql", "plsql", "ansi"};
    if (sp != std::string::npos && kTags.count(tag)) out = out.substr(sp + 1);
  }
  return Trim(out);
}

}  // namespace sqlinsight
