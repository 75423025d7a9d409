#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tqre/error.hpp"

namespace tqre {

struct Cell {
  double row = 0.0;  // payoff to the row player
  double col = 0.0;  // payoff to the column player

  friend bool operator==(const Cell&, const Cell&) = default;
};

// Bimatrix of payoffs. Rows are the row player's actions, columns the column
// player's. Ragged input is representable so that validate() can report it;
// every other consumer assumes a rectangular matrix.
class PayoffMatrix {
 public:
  PayoffMatrix() = default;
  explicit PayoffMatrix(std::vector<std::vector<Cell>> cells) : cells_(std::move(cells)) {}
  PayoffMatrix(std::initializer_list<std::initializer_list<Cell>> rows) {
    for (const auto& r : rows) cells_.emplace_back(r);
  }

  std::size_t rows() const { return cells_.size(); }
  std::size_t cols() const { return cells_.empty() ? 0 : cells_.front().size(); }

  const Cell& at(std::size_t i, std::size_t j) const { return cells_.at(i).at(j); }
  Cell& at(std::size_t i, std::size_t j) { return cells_.at(i).at(j); }

  const std::vector<std::vector<Cell>>& cells() const { return cells_; }

  bool rectangular() const {
    for (const auto& r : cells_)
      if (r.size() != cols()) return false;
    return true;
  }

  bool same_shape(const PayoffMatrix& other) const {
    return rectangular() && other.rectangular() && rows() == other.rows() &&
           cols() == other.cols();
  }

  friend bool operator==(const PayoffMatrix&, const PayoffMatrix&) = default;

 private:
  std::vector<std::vector<Cell>> cells_;
};

enum class Role { Row, Column };

inline std::string_view to_string(Role r) { return r == Role::Row ? "row" : "col"; }

inline Role role_from_string(std::string_view s) {
  if (s == "row") return Role::Row;
  if (s == "col" || s == "column") return Role::Column;
  throw DomainError("unknown role '" + std::string(s) + "'");
}

struct Simultaneous {};

// Row player moves first; the column player observes the row before choosing.
struct Sequential {};

// Nature draws typeA with probability p, typeB otherwise; neither player
// observes the draw.
struct Bayesian {
  double p = 0.5;
  PayoffMatrix typeA;
  PayoffMatrix typeB;
};

// The sender (row) is paid by trueMatrix; the receiver (column) only sees
// fakeMatrix.
struct Signaling {
  PayoffMatrix trueMatrix;
  PayoffMatrix fakeMatrix;
};

using GameKind = std::variant<Simultaneous, Sequential, Bayesian, Signaling>;

struct GameSpec {
  std::string id;
  GameKind kind;
  std::optional<PayoffMatrix> matrix;  // absent for Bayesian and Signaling
  std::string label;

  bool is_sequential() const { return std::holds_alternative<Sequential>(kind); }

  bool role_legal(Role role) const { return !(is_sequential() && role == Role::Column); }

  // Shape of the game as the players see it.
  std::size_t row_actions() const;
  std::size_t col_actions() const;
  std::size_t actions(Role role) const { return role == Role::Row ? row_actions() : col_actions(); }

  std::vector<Role> legal_roles() const {
    if (is_sequential()) return {Role::Row};
    return {Role::Row, Role::Column};
  }
};

inline std::string_view kind_name(const GameKind& k) {
  switch (k.index()) {
    case 0: return "simultaneous";
    case 1: return "sequential";
    case 2: return "bayesian";
    default: return "signaling";
  }
}

namespace detail {
inline const PayoffMatrix& shape_source(const GameSpec& g) {
  if (const auto* b = std::get_if<Bayesian>(&g.kind)) return b->typeA;
  if (const auto* s = std::get_if<Signaling>(&g.kind)) return s->trueMatrix;
  if (!g.matrix) throw DomainError("game '" + g.id + "' has no matrix");
  return *g.matrix;
}
}  // namespace detail

inline std::size_t GameSpec::row_actions() const { return detail::shape_source(*this).rows(); }
inline std::size_t GameSpec::col_actions() const { return detail::shape_source(*this).cols(); }

// The complete-information matrix a player of `role` effectively faces.
inline PayoffMatrix effective_matrix(const GameSpec& game, Role role) {
  if (!game.role_legal(role))
    throw RoleUnsupported("game '" + game.id + "': only the first mover acts in a sequential game");
  return std::visit(
      [&](const auto& k) -> PayoffMatrix {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Bayesian>) {
          if (!k.typeA.same_shape(k.typeB))
            throw DomainError("game '" + game.id + "': Bayesian type matrices differ in shape");
          PayoffMatrix out = k.typeA;
          for (std::size_t i = 0; i < out.rows(); ++i)
            for (std::size_t j = 0; j < out.cols(); ++j) {
              const Cell& a = k.typeA.at(i, j);
              const Cell& b = k.typeB.at(i, j);
              out.at(i, j) = {k.p * a.row + (1.0 - k.p) * b.row, k.p * a.col + (1.0 - k.p) * b.col};
            }
          return out;
        } else if constexpr (std::is_same_v<K, Signaling>) {
          return role == Role::Row ? k.trueMatrix : k.fakeMatrix;
        } else {
          if (!game.matrix) throw DomainError("game '" + game.id + "' has no matrix");
          return *game.matrix;
        }
      },
      game.kind);
}

struct Violation {
  std::string game_id;
  std::string code;  // "dimension mismatch", "non-finite payoff", ...
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

namespace detail {
inline void check_matrix(const std::string& id, const std::string& what, const PayoffMatrix& m,
                         ValidationReport& out) {
  if (!m.rectangular()) {
    out.push_back({id, "dimension mismatch", what + ": rows differ in length"});
  } else if (m.rows() < 2 || m.cols() < 2) {
    out.push_back({id, "too few actions", what + ": each player needs at least two actions"});
  }
  for (const auto& r : m.cells())
    for (const auto& c : r)
      if (!std::isfinite(c.row) || !std::isfinite(c.col)) {
        out.push_back({id, "non-finite payoff", what});
        return;
      }
}
}  // namespace detail

inline ValidationReport validate(const GameSpec& game) {
  ValidationReport out;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Bayesian>) {
          if (!(k.p >= 0.0 && k.p <= 1.0))
            out.push_back({game.id, "prior out of range", "p must lie in [0, 1]"});
          detail::check_matrix(game.id, "typeA", k.typeA, out);
          detail::check_matrix(game.id, "typeB", k.typeB, out);
          if (k.typeA.rectangular() && k.typeB.rectangular() && !k.typeA.same_shape(k.typeB))
            out.push_back({game.id, "dimension mismatch", "typeA and typeB differ in shape"});
        } else if constexpr (std::is_same_v<K, Signaling>) {
          detail::check_matrix(game.id, "trueMatrix", k.trueMatrix, out);
          detail::check_matrix(game.id, "fakeMatrix", k.fakeMatrix, out);
          if (k.trueMatrix.rectangular() && k.fakeMatrix.rectangular() &&
              !k.trueMatrix.same_shape(k.fakeMatrix))
            out.push_back({game.id, "dimension mismatch", "trueMatrix and fakeMatrix differ in shape"});
        } else {
          if (!game.matrix)
            out.push_back({game.id, "missing matrix", "simultaneous and sequential games need a matrix"});
          else
            detail::check_matrix(game.id, "matrix", *game.matrix, out);
        }
      },
      game.kind);
  return out;
}

inline ValidationReport validate(std::span<const GameSpec> games) {
  ValidationReport out;
  std::set<std::string> seen;
  for (const auto& g : games) {
    auto r = validate(g);
    out.insert(out.end(), r.begin(), r.end());
    if (!seen.insert(g.id).second) out.push_back({g.id, "duplicate id", ""});
  }
  return out;
}

// Game library used for the evaluations: three stake variants each of a
// zero-sum game, a stag hunt and a prisoner's dilemma; a sequential game;
// the Bayesian coordination pair at two priors; the signaling pair; and the
// Stahl-Wilson game 10.
inline std::vector<GameSpec> builtin_library() {
  const PayoffMatrix bayes_type1{{{10, 10}, {5, 2}}, {{7, 5}, {3, 3}}};
  const PayoffMatrix bayes_type2{{{8, 8}, {6, 3}}, {{5, 4}, {2, 2}}};

  std::vector<GameSpec> lib;
  auto simple = [&](std::string id, std::string label, PayoffMatrix m) {
    lib.push_back({std::move(id), Simultaneous{}, std::move(m), std::move(label)});
  };

  simple("competitive/base", "competitive/base",
         {{{10, -10}, {0, 5}, {-5, 8}}, {{-10, 10}, {5, 0}, {8, -5}}, {{0, 0}, {5, -5}, {-5, 5}}});
  simple("competitive/high-stake", "competitive/high-stake",
         {{{20, -20}, {0, 10}, {-10, 15}}, {{-20, 20}, {10, 0}, {15, -10}}, {{0, 0}, {10, -10}, {-10, 10}}});
  simple("competitive/low-stake", "competitive/low-stake",
         {{{3, -3}, {0, 1}, {-1, 2}}, {{-3, 3}, {1, 0}, {2, -1}}, {{0, 0}, {1, -1}, {-1, 1}}});

  simple("stag-hunt/base", "cooperation/base", {{{8, 8}, {0, 7}}, {{7, 0}, {5, 5}}});
  simple("stag-hunt/high-payoff", "cooperation/high-payoff", {{{20, 20}, {0, 7}}, {{7, 0}, {5, 5}}});
  simple("stag-hunt/asymmetric", "cooperation/asymmetric-payoff", {{{12, 8}, {0, 7}}, {{7, 0}, {5, 5}}});

  simple("prisoners-dilemma/base", "mixed-motive/base", {{{3, 3}, {0, 5}}, {{5, 0}, {1, 1}}});
  simple("prisoners-dilemma/high-punishment", "mixed-motive/high-punishment",
         {{{10, 10}, {0, 15}}, {{15, 0}, {-5, 5}}});
  simple("prisoners-dilemma/low-punishment", "mixed-motive/low-punishment",
         {{{3, 3}, {0, 4}}, {{4, 0}, {2, 2}}});

  lib.push_back({"sequential/base", Sequential{},
                 PayoffMatrix{{{0, 5}, {0, 3}, {0, 0}}, {{5, 2}, {3, 3}, {-1, -1}}, {{2, 4}, {4, 3}, {0, -2}}},
                 "sequential/base"});

  lib.push_back({"bayesian/p0.5", Bayesian{0.5, bayes_type1, bayes_type2}, std::nullopt, "bayesian/p=0.5"});
  lib.push_back({"bayesian/p0.9", Bayesian{0.9, bayes_type1, bayes_type2}, std::nullopt, "bayesian/p=0.9"});

  lib.push_back({"signaling/base",
                 Signaling{PayoffMatrix{{{5, 5}, {2, 1}}, {{3, 2}, {1, 0}}},
                           PayoffMatrix{{{4, 4}, {6, 3}}, {{2, 3}, {1, 2}}}},
                 std::nullopt, "signaling/base"});

  simple("sw10/base", "sw10",
         {{{47, 47}, {51, 44}, {28, 43}}, {{44, 51}, {11, 11}, {43, 91}}, {{43, 28}, {91, 43}, {11, 11}}});
  return lib;
}

inline const GameSpec* find_game(std::span<const GameSpec> games, std::string_view id) {
  for (const auto& g : games)
    if (g.id == id) return &g;
  return nullptr;
}

// Family prefix of a library id ("competitive/base" -> "competitive").
inline std::string game_family(std::string_view id) {
  auto slash = id.find('/');
  return std::string(id.substr(0, slash));
}

}  // namespace tqre
