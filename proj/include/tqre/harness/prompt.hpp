#pragma once

// Prompt construction for the evaluation harness: the vanilla and
// chain-of-thought user prompts for each game kind, optionally prefixed by a
// demographic persona preamble.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "tqre/error.hpp"
#include "tqre/games.hpp"

namespace tqre::harness {

enum class PersonaField {
  AgeBand,
  Gender,
  Education,
  MaritalStatus,
  LivingArea,
  SexualOrientation,
  Disability,
  Race,
  Religion,
  PoliticalAffiliation,
};

inline constexpr std::array<PersonaField, 10> kPersonaFields{
    PersonaField::AgeBand,           PersonaField::Gender,     PersonaField::Education,
    PersonaField::MaritalStatus,     PersonaField::LivingArea, PersonaField::SexualOrientation,
    PersonaField::Disability,        PersonaField::Race,       PersonaField::Religion,
    PersonaField::PoliticalAffiliation};

inline std::string_view field_name(PersonaField f) {
  switch (f) {
    case PersonaField::AgeBand: return "age_band";
    case PersonaField::Gender: return "gender";
    case PersonaField::Education: return "education";
    case PersonaField::MaritalStatus: return "marital_status";
    case PersonaField::LivingArea: return "living_area";
    case PersonaField::SexualOrientation: return "sexual_orientation";
    case PersonaField::Disability: return "disability";
    case PersonaField::Race: return "race";
    case PersonaField::Religion: return "religion";
    case PersonaField::PoliticalAffiliation: return "political_affiliation";
  }
  return "";
}

inline const std::vector<std::string>& field_options(PersonaField f) {
  static const std::array<std::vector<std::string>, 10> options{{
      {"15-24", "25-34", "35-44", "45-54", "55-64", "65+"},
      {"male", "female"},
      {"below lower secondary", "lower secondary", "upper secondary", "short-cycle tertiary", "bachelor",
       "graduate"},
      {"never married", "married", "widowed", "divorced"},
      {"rural", "urban"},
      {"heterosexual", "homosexual", "bisexual", "asexual"},
      {"physically-disabled", "able-bodied"},
      {"African", "Hispanic", "Asian", "Caucasian"},
      {"Jewish", "Christian", "Atheist", "Other Religious"},
      {"lifelong Democrat", "lifelong Republican", "Barack Obama supporter", "Donald Trump supporter"},
  }};
  return options[static_cast<std::size_t>(f)];
}

inline std::optional<PersonaField> field_from_name(std::string_view name) {
  for (auto f : kPersonaFields)
    if (field_name(f) == name) return f;
  return std::nullopt;
}

// Socio-demographic profile; every field is optional.
struct Persona {
  std::array<std::optional<std::string>, 10> values;

  const std::optional<std::string>& get(PersonaField f) const { return values[static_cast<std::size_t>(f)]; }
  Persona& set(PersonaField f, std::string v) {
    values[static_cast<std::size_t>(f)] = std::move(v);
    return *this;
  }
  bool empty() const {
    for (const auto& v : values)
      if (v) return false;
    return true;
  }

  // Empty when every present value is one of its group's options.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    for (auto f : kPersonaFields) {
      const auto& v = get(f);
      if (!v) continue;
      const auto& opts = field_options(f);
      if (std::find(opts.begin(), opts.end(), *v) == opts.end())
        out.push_back(std::string(field_name(f)) + ": '" + *v + "' is not a listed option");
    }
    return out;
  }

  void check() const {
    const auto v = violations();
    if (!v.empty()) throw DomainError("invalid persona: " + v.front());
  }

  friend bool operator==(const Persona&, const Persona&) = default;
};

namespace detail {

// "a", "a and b", "a, b, and c"
inline std::string join_clauses(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) {
      if (parts.size() == 2)
        out += " and ";
      else
        out += i + 1 == parts.size() ? ", and " : ", ";
    }
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// Fills the persona template, dropping the clauses whose fields are absent.
inline std::string build_persona_preamble(const Persona& p) {
  p.check();
  if (p.empty()) return "";
  using F = PersonaField;
  std::vector<std::string> sentences;

  if (p.get(F::AgeBand) || p.get(F::Gender) || p.get(F::Education) || p.get(F::MaritalStatus) ||
      p.get(F::LivingArea)) {
    std::string s = "Imagine a ";
    if (p.get(F::AgeBand)) s += *p.get(F::AgeBand) + " year old ";
    s += p.get(F::Gender) ? *p.get(F::Gender) : "person";
    if (p.get(F::Education)) s += " with a " + *p.get(F::Education) + " degree";
    std::vector<std::string> who;
    if (p.get(F::MaritalStatus)) who.push_back("is " + *p.get(F::MaritalStatus));
    if (p.get(F::LivingArea)) who.push_back("lives in a " + *p.get(F::LivingArea) + " area");
    if (!who.empty()) s += ", who " + detail::join_clauses(who);
    sentences.push_back(s + ".");
  }

  std::vector<std::string> identity;
  std::vector<std::string> self;
  if (p.get(F::SexualOrientation)) self.push_back("identifies as " + *p.get(F::SexualOrientation));
  if (p.get(F::Disability)) self.push_back("is " + *p.get(F::Disability));
  if (!self.empty()) identity.push_back(detail::join_clauses(self));
  if (p.get(F::Race)) identity.push_back((identity.empty() ? "is of " : "of ") + *p.get(F::Race) + " descent");
  if (p.get(F::Religion)) identity.push_back("adheres to " + *p.get(F::Religion) + " beliefs");
  if (p.get(F::PoliticalAffiliation)) identity.push_back("supports " + *p.get(F::PoliticalAffiliation) + " policies");
  if (!identity.empty()) sentences.push_back("This individual " + detail::join_clauses(identity) + ".");

  sentences.push_back(
      "Consider the risk preferences and decision-making processes of a person with these characteristics.");
  std::string out;
  for (const auto& s : sentences) out += (out.empty() ? "" : " ") + s;
  return out;
}

enum class Variant { Vanilla, Cot, Persona, PersonaCot };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Cot: return "cot";
    case Variant::Persona: return "persona";
    case Variant::PersonaCot: return "persona_cot";
  }
  return "";
}

inline Variant variant_from_string(std::string_view s) {
  for (auto v : {Variant::Vanilla, Variant::Cot, Variant::Persona, Variant::PersonaCot})
    if (to_string(v) == s) return v;
  throw DomainError("unknown prompt variant '" + std::string(s) + "'");
}

inline bool uses_persona(Variant v) { return v == Variant::Persona || v == Variant::PersonaCot; }
inline bool uses_cot(Variant v) { return v == Variant::Cot || v == Variant::PersonaCot; }

struct PromptSpec {
  GameSpec game;
  Role role = Role::Row;
  Variant variant = Variant::Vanilla;
  Persona persona;  // used only by the persona variants
};

// Payoff as written in a prompt: integers without a decimal point.
inline std::string format_number(double v) {
  std::ostringstream os;
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    os << static_cast<long long>(v);
  } else {
    os.precision(15);
    os << v;
  }
  return os.str();
}

// [[(10, -10), (0, 5), (-5, 8)], [(-10, 10), (5, 0), (8, -5)], ...]
inline std::string render_matrix(const PayoffMatrix& m) {
  std::string out = "[";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += i ? ", [" : "[";
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += "(" + format_number(m.at(i, j).row) + ", " + format_number(m.at(i, j).col) + ")";
    }
    out += "]";
  }
  return out + "]";
}

namespace detail {

// "0 and 1", "0, 1, and 2"
inline std::string action_list(std::size_t n) {
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < n; ++i) parts.push_back(std::to_string(i));
  if (n == 2) return parts[0] + " and " + parts[1];
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i == 0 ? "" : (i + 1 == n ? ", and " : ", ")) + parts[i];
  return out;
}

inline std::string percent(double p) {
  const double pct = std::round(p * 100.0 * 1e9) / 1e9;
  return format_number(pct);
}

struct RoleLines {
  std::string you, other, payoff, pick;
};

inline RoleLines role_lines(Role role, std::size_t rows, std::size_t cols) {
  if (role == Role::Row)
    return {"Now you are player one. You have to pick a row number x from row " + action_list(rows) + ".",
            "Then there will be a player two who will pick column number y from column " + action_list(cols) + ".",
            "Your payoff will be the first value in location (x, y).", "row"};
  return {"Now you are player two. You have to pick a column number y from column " + action_list(cols) + ".",
          "Then there will be a player one who will pick row number x from row " + action_list(rows) + ".",
          "Your payoff will be the second value in location (x, y).", "column"};
}

inline constexpr std::string_view kAssistant = "You are an assistant who helps to make a choice in a game.";
inline constexpr std::string_view kMaximize =
    "You should make choices based on the idea of maximizing the number you get from a matrix.";

}  // namespace detail

// The game description and closing instruction, without any persona preamble.
inline std::string build_task_prompt(const PromptSpec& spec) {
  const GameSpec& g = spec.game;
  if (!g.role_legal(spec.role))
    throw RoleUnsupported("game '" + g.id + "': only the first mover acts in a sequential game");
  const auto rl = detail::role_lines(spec.role, g.row_actions(), g.col_actions());
  std::vector<std::string> lines;

  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Sequential>) {
          lines.push_back("Now you are player one. You are the first player to pick. You have to pick a row number x "
                          "from row " +
                          detail::action_list(g.row_actions()) + ".");
          lines.push_back("Then there will be a player two who will pick column number y from column " +
                          detail::action_list(g.col_actions()) + " based on your decision.");
          lines.push_back(rl.payoff);
          lines.push_back("Assume the matrix is " + render_matrix(*g.matrix) + ".");
        } else if constexpr (std::is_same_v<K, Signaling>) {
          lines.emplace_back(detail::kMaximize);
          lines.insert(lines.end(), {rl.you, rl.other, rl.payoff});
          if (spec.role == Role::Row) {
            lines.push_back("The true matrix that determines the payoff is Matrix: " + render_matrix(k.trueMatrix) + ".");
            lines.push_back("However, the matrix player two will be seeing is Matrix: " + render_matrix(k.fakeMatrix) +
                            ".");
          } else {
            lines.push_back(
                "The matrix you will be seeing is different from the true matrix, but you have to make your best "
                "selection based on your guess and the matrix you see.");
            lines.push_back("The matrix is " + render_matrix(k.fakeMatrix) + ".");
          }
        } else if constexpr (std::is_same_v<K, Bayesian>) {
          lines.emplace_back(detail::kAssistant);
          lines.emplace_back(detail::kMaximize);
          lines.insert(lines.end(), {rl.you, rl.other, rl.payoff});
          lines.push_back("With a " + detail::percent(k.p) + " percent chance, you will be facing Matrix: " +
                          render_matrix(k.typeA) + ".");
          lines.push_back("With a " + detail::percent(1.0 - k.p) + " percent chance, you will be facing Matrix: " +
                          render_matrix(k.typeB) + ".");
        } else {
          lines.emplace_back(detail::kAssistant);
          lines.emplace_back(detail::kMaximize);
          lines.insert(lines.end(), {rl.you, rl.other, rl.payoff});
          lines.push_back("Assume the matrix is " + render_matrix(*g.matrix));
        }
      },
      g.kind);

  if (uses_cot(spec.variant)) {
    lines.push_back("To decide, analyze the possible outcomes based on maximizing your payoff.");
    lines.push_back("Explain your reasoning step by step and then provide only the " + rl.pick +
                    " number you picked as the final answer.");
  } else {
    lines.push_back("Please only give me a result of the " + rl.pick +
                    " number you picked, do not include any thinking process.");
  }

  std::string body;
  for (const auto& l : lines) body += (body.empty() ? "" : "\n") + l;
  return body;
}

inline std::string prompt_preamble(const PromptSpec& spec) {
  return uses_persona(spec.variant) ? build_persona_preamble(spec.persona) : std::string();
}

inline std::string build_prompt(const PromptSpec& spec) {
  const auto pre = prompt_preamble(spec);
  const auto body = build_task_prompt(spec);
  return pre.empty() ? body : pre + "\n" + body;
}

}  // namespace tqre::harness
