#pragma once

// Extracting a chosen action from a free-text model reply.

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tqre::harness {

enum class ParseFailure { OutOfRange, NoInteger, RefusalPhrase };

inline std::string_view to_string(ParseFailure f) {
  switch (f) {
    case ParseFailure::OutOfRange: return "out-of-range";
    case ParseFailure::NoInteger: return "no-integer";
    case ParseFailure::RefusalPhrase: return "refusal-phrase";
  }
  return "";
}

struct ParsedChoice {
  std::optional<int> action;
  ParseFailure failure = ParseFailure::NoInteger;  // meaningful only without an action

  bool ok() const { return action.has_value(); }
};

namespace detail {

struct IntToken {
  long long value;
  std::size_t pos;
  std::size_t end;
};

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Integers not glued to letters or decimals: "row 2." yields 2, "x2", "2nd" and "1.5" yield nothing.
inline std::vector<IntToken> standalone_integers(std::string_view s) {
  std::vector<IntToken> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    std::size_t start = i;
    const bool neg = start > 0 && s[start - 1] == '-' && (start < 2 || !word_char(s[start - 2]));
    if (neg) --start;
    const bool glued_before = start > 0 && (word_char(s[start - 1]) || s[start - 1] == '.');
    const bool glued_after =
        j < s.size() && (word_char(s[j]) || (s[j] == '.' && j + 1 < s.size() &&
                                             std::isdigit(static_cast<unsigned char>(s[j + 1]))));
    if (!glued_before && !glued_after) {
      const std::string_view digits = s.substr(i, j - i);
      long long v = digits.size() > 9 ? 1000000000LL : std::stoll(std::string(digits));
      out.push_back({neg ? -v : v, start, j});
    }
    i = j;
  }
  return out;
}

// "row 2", "Column: 1", "col #0", "row number 1"
inline std::vector<IntToken> anchored_answers(std::string_view text) {
  std::vector<IntToken> out;
  const std::string t = lower(text);
  for (const std::string_view kw : {"row", "column", "col"}) {
    for (std::size_t at = t.find(kw); at != std::string::npos; at = t.find(kw, at + 1)) {
      if (at > 0 && word_char(t[at - 1])) continue;
      std::size_t k = at + kw.size();
      if (k < t.size() && word_char(t[k])) continue;  // "rows", "columns", "colour"
      auto skip = [&] {
        while (k < t.size() && (t[k] == ' ' || t[k] == ':' || t[k] == '#' || t[k] == '*')) ++k;
      };
      skip();
      if (t.compare(k, 6, "number") == 0) {
        k += 6;
        skip();
      }
      std::size_t j = k;
      while (j < t.size() && std::isdigit(static_cast<unsigned char>(t[j]))) ++j;
      if (j == k || j - k > 9) continue;
      if (j < t.size() && (word_char(t[j]) || (t[j] == '.' && j + 1 < t.size() &&
                                               std::isdigit(static_cast<unsigned char>(t[j + 1])))))
        continue;
      out.push_back({std::stoll(t.substr(k, j - k)), k, j});
    }
  }
  return out;
}

// A line holding only a number, allowing markdown emphasis, punctuation and an "answer:" label.
inline std::optional<long long> bare_line_answer(std::string_view line) {
  std::string l = lower(line);
  for (const std::string_view label : {"final answer", "answer", "choice"}) {
    const auto p = l.find(label);
    if (p != std::string::npos) {
      const std::string before = l.substr(0, p);
      if (std::all_of(before.begin(), before.end(), [](char c) { return !word_char(c); }))
        l = l.substr(p + label.size());
      break;
    }
  }
  const auto toks = standalone_integers(l);
  if (toks.size() != 1) return std::nullopt;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i >= toks[0].pos && i < toks[0].end) continue;
    if (word_char(l[i])) return std::nullopt;
  }
  return toks[0].value;
}

inline bool has_refusal_phrase(std::string_view text) {
  const std::string t = lower(text);
  for (const std::string_view p : {"cannot", "can't", "can not", "unable to", "won't", "will not", "sorry",
                                   "as an ai", "not able to", "decline", "refuse"})
    if (t.find(p) != std::string::npos) return true;
  return false;
}

}  // namespace detail

// Chosen action in [0, n_actions). Anchored answers ("row 2", a line that is
// just "2") win over loose integers; among either kind the last in range wins.
inline ParsedChoice parse_choice(std::string_view text, int n_actions) {
  auto in_range = [&](long long v) { return v >= 0 && v < n_actions; };
  std::optional<long long> pick;
  std::size_t pick_pos = 0;
  auto consider = [&](long long v, std::size_t pos) {
    if (in_range(v) && (!pick || pos >= pick_pos)) {
      pick = v;
      pick_pos = pos;
    }
  };

  for (const auto& a : detail::anchored_answers(text)) consider(a.value, a.pos);

  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (auto v = detail::bare_line_answer(line)) consider(*v, start);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (pick) return {static_cast<int>(*pick), {}};

  const auto toks = detail::standalone_integers(text);
  for (auto it = toks.rbegin(); it != toks.rend(); ++it)
    if (in_range(it->value)) return {static_cast<int>(it->value), {}};

  if (detail::has_refusal_phrase(text)) return {std::nullopt, ParseFailure::RefusalPhrase};
  return {std::nullopt, toks.empty() ? ParseFailure::NoInteger : ParseFailure::OutOfRange};
}

}  // namespace tqre::harness
