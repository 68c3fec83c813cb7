#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sqlinsight {

/// Lowercase word tokens: runs of [a-z0-9], keeping internal hyphens
/// ("quarter-over-quarter"). Underscores and other punctuation split.
std::vector<std::string> WordTokens(std::string_view text);

bool IsStopword(std::string_view token);

/// Content tokens with stopwords removed, deduplicated, first-seen order.
std::vector<std::string> KeyTerms(std::string_view text);

/// Cosine similarity of term-frequency vectors over WordTokens. Symmetric,
/// in [0, 1], 0 when either side has no tokens.
double Similarity(std::string_view a, std::string_view b);

/// Trims ASCII whitespace at both ends.
std::string Trim(std::string_view text);

/// Collapses whitespace runs to one space and trims.
std::string CollapseWhitespace(std::string_view text);

/// Removes a surrounding markdown code fence (```lang ... ```) and trims.
std::string StripCodeFences(std::string_view text);

}  // namespace sqlinsight
