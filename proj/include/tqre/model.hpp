#pragma once

// Truncated quantal response forward model.
//
// A player of level k (k ~ Poisson(tau), truncated at K) believes opponents
// are drawn from levels 0..k-1 with weights proportional to the Poisson
// weights, computes expected payoffs against that mixed belief, and chooses by
// a logit rule with precision gamma * k. Level 0 therefore plays uniformly.
// The population prediction is the Poisson mixture of the level strategies.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tqre/error.hpp"
#include "tqre/games.hpp"

namespace tqre {

struct TqreParams {
  double tau = 1.0;    // mean reasoning depth
  double gamma = 1.0;  // precision slope; level k uses gamma * k
  int K = 64;          // truncation level

  double precision(int level) const { return gamma * level; }

  void check() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("tau must be a finite value >= 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be a finite value >= 0");
    if (K < 1) throw DomainError("truncation level K must be >= 1");
  }
};

// Truncated, renormalized Poisson weights f_0..f_K, evaluated in log space.
inline std::vector<double> poisson_weights(double tau, int K) {
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("poisson_weights: tau must be >= 0");
  if (K < 1) throw DomainError("poisson_weights: K must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(K) + 1, 0.0);
  if (tau == 0.0) {
    w[0] = 1.0;
    return w;
  }
  std::vector<double> logf(w.size());
  const double log_tau = std::log(tau);
  for (int k = 0; k <= K; ++k) logf[k] = k * log_tau - tau - std::lgamma(k + 1.0);
  const double top = *std::max_element(logf.begin(), logf.end());
  double z = 0.0;
  for (double lf : logf) z += std::exp(lf - top);
  const double log_norm = top + std::log(z);
  for (int k = 0; k <= K; ++k) w[k] = std::exp(logf[k] - log_norm);
  return w;
}

// Level strategies for both players plus the mixing weights.
struct LevelTable {
  std::vector<std::vector<double>> row;  // row[h] = level-h strategy of the row player
  std::vector<std::vector<double>> col;
  std::vector<double> weights;           // renormalized Poisson weights, size K+1
};

struct Prediction {
  std::string game_id;
  Role role = Role::Row;
  std::vector<double> probs;
};

namespace detail {

using Ladder = std::vector<std::vector<double>>;

// Payoffs of one player laid out own-action-major: value(a, b) is the payoff
// when the player takes a and the opponent takes b.
struct OwnPayoffs {
  std::size_t own = 0;
  std::size_t opp = 0;
  std::vector<double> values;
  double operator()(std::size_t a, std::size_t b) const { return values[a * opp + b]; }
};

inline void require_rectangular(const PayoffMatrix& m) {
  if (!m.rectangular() || m.rows() < 1 || m.cols() < 1)
    throw DomainError("payoff matrix must be rectangular and non-empty");
}

inline OwnPayoffs row_payoffs(const PayoffMatrix& m) {
  OwnPayoffs p{m.rows(), m.cols(), std::vector<double>(m.rows() * m.cols())};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) p.values[i * p.opp + j] = m.at(i, j).row;
  return p;
}

inline OwnPayoffs col_payoffs(const PayoffMatrix& m) {
  OwnPayoffs p{m.cols(), m.rows(), std::vector<double>(m.rows() * m.cols())};
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) p.values[j * p.opp + i] = m.at(i, j).col;
  return p;
}

inline void logit(std::span<const double> utility, double lambda, std::span<double> out) {
  const double top = *std::max_element(utility.begin(), utility.end());
  double z = 0.0;
  for (std::size_t a = 0; a < utility.size(); ++a) {
    out[a] = std::exp(lambda * (utility[a] - top));
    z += out[a];
  }
  for (double& p : out) p /= z;
}

// Incrementally maintained mixture of an opponent's levels 0..k-1.
class BeliefAccumulator {
 public:
  explicit BeliefAccumulator(std::size_t actions) : sum_(actions, 0.0), belief_(actions) {}

  void add(const std::vector<double>& strategy, double weight) {
    for (std::size_t a = 0; a < sum_.size(); ++a) sum_[a] += weight * strategy[a];
    mass_ += weight;
  }

  const std::vector<double>& belief() {
    for (std::size_t a = 0; a < sum_.size(); ++a) belief_[a] = sum_[a] / mass_;
    return belief_;
  }

 private:
  std::vector<double> sum_;
  std::vector<double> belief_;
  double mass_ = 0.0;
};

inline std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / n); }

inline void respond(const OwnPayoffs& u, const std::vector<double>& belief, double lambda,
                    std::vector<double>& utility, std::vector<double>& out) {
  for (std::size_t a = 0; a < u.own; ++a) {
    double eu = 0.0;
    for (std::size_t b = 0; b < u.opp; ++b) eu += belief[b] * u(a, b);
    utility[a] = eu;
  }
  out.resize(u.own);
  logit(utility, lambda, out);
}

// Jointly builds both players' ladders on one bimatrix.
inline std::pair<Ladder, Ladder> build_ladders(const OwnPayoffs& u_row, const OwnPayoffs& u_col,
                                               std::span<const double> w, double gamma) {
  const int K = static_cast<int>(w.size()) - 1;
  Ladder row(K + 1), col(K + 1);
  row[0] = uniform(u_row.own);
  col[0] = uniform(u_col.own);
  BeliefAccumulator about_col(u_col.own), about_row(u_row.own);
  about_col.add(col[0], w[0]);
  about_row.add(row[0], w[0]);
  std::vector<double> eu_row(u_row.own), eu_col(u_col.own);
  for (int k = 1; k <= K; ++k) {
    respond(u_row, about_col.belief(), gamma * k, eu_row, row[k]);
    respond(u_col, about_row.belief(), gamma * k, eu_col, col[k]);
    about_col.add(col[k], w[k]);
    about_row.add(row[k], w[k]);
  }
  return {std::move(row), std::move(col)};
}

// Ladder of a player whose opponent's ladder is fixed in advance.
inline Ladder build_response_ladder(const OwnPayoffs& u, const Ladder& opponent,
                                    std::span<const double> w, double gamma) {
  const int K = static_cast<int>(w.size()) - 1;
  Ladder own(K + 1);
  own[0] = uniform(u.own);
  BeliefAccumulator about_opp(u.opp);
  about_opp.add(opponent[0], w[0]);
  std::vector<double> eu(u.own);
  for (int k = 1; k <= K; ++k) {
    respond(u, about_opp.belief(), gamma * k, eu, own[k]);
    about_opp.add(opponent[k], w[k]);
  }
  return own;
}

inline std::vector<double> mix(const Ladder& ladder, std::span<const double> w) {
  std::vector<double> p(ladder.front().size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k)
    for (std::size_t a = 0; a < p.size(); ++a) p[a] += w[k] * ladder[k][a];
  return p;
}

}  // namespace detail

inline LevelTable level_table(const PayoffMatrix& matrix, const TqreParams& params) {
  params.check();
  detail::require_rectangular(matrix);
  LevelTable t;
  t.weights = poisson_weights(params.tau, params.K);
  std::tie(t.row, t.col) = detail::build_ladders(detail::row_payoffs(matrix), detail::col_payoffs(matrix),
                                                 t.weights, params.gamma);
  return t;
}

// Variant in which the column player reasons on `opponent_matrix` (both
// players' ladders on that matrix), while the row player's utilities come from
// `matrix`. The returned col ladder is the one computed on `opponent_matrix`.
inline LevelTable level_table(const PayoffMatrix& matrix, const TqreParams& params,
                              const PayoffMatrix& opponent_matrix) {
  params.check();
  detail::require_rectangular(matrix);
  if (!matrix.same_shape(opponent_matrix))
    throw DomainError("level_table: opponent matrix differs in shape from the primary matrix");
  LevelTable t;
  t.weights = poisson_weights(params.tau, params.K);
  auto ladders = detail::build_ladders(detail::row_payoffs(opponent_matrix),
                                       detail::col_payoffs(opponent_matrix), t.weights, params.gamma);
  t.col = std::move(ladders.second);
  t.row = detail::build_response_ladder(detail::row_payoffs(matrix), t.col, t.weights, params.gamma);
  return t;
}

// First-mover prediction in a sequential game. The responder sees the chosen
// row x; a level-h responder plays logit(gamma * h) over its own payoffs in
// row x. A level-k first mover mixes responder levels h < k by the Poisson
// weights and logit-responds to the resulting expected payoff of each row.
inline Prediction predict_sequential(const PayoffMatrix& matrix, const TqreParams& params) {
  params.check();
  detail::require_rectangular(matrix);
  const std::size_t m = matrix.rows(), n = matrix.cols();
  const auto w = poisson_weights(params.tau, params.K);
  const int K = params.K;

  // conditional[x * n + y] accumulates the weighted responder mixture.
  std::vector<double> conditional(m * n, 0.0);
  double mass = 0.0;
  std::vector<double> responder(n), u2(n);
  auto add_responder_level = [&](int h) {
    for (std::size_t x = 0; x < m; ++x) {
      for (std::size_t y = 0; y < n; ++y) u2[y] = matrix.at(x, y).col;
      detail::logit(u2, params.gamma * h, responder);
      for (std::size_t y = 0; y < n; ++y) conditional[x * n + y] += w[h] * responder[y];
    }
    mass += w[h];
  };

  std::vector<double> p(m, 0.0);
  for (std::size_t x = 0; x < m; ++x) p[x] = w[0] / m;
  add_responder_level(0);
  std::vector<double> utility(m), sigma(m);
  for (int k = 1; k <= K; ++k) {
    for (std::size_t x = 0; x < m; ++x) {
      double eu = 0.0;
      for (std::size_t y = 0; y < n; ++y) eu += conditional[x * n + y] / mass * matrix.at(x, y).row;
      utility[x] = eu;
    }
    detail::logit(utility, params.gamma * k, sigma);
    for (std::size_t x = 0; x < m; ++x) p[x] += w[k] * sigma[x];
    add_responder_level(k);
  }
  return {"", Role::Row, std::move(p)};
}

struct RolePredictions {
  std::vector<double> row;
  std::vector<double> col;  // empty for sequential games
};

// Predictions for every legal role of `game`, sharing one ladder computation.
inline RolePredictions predict_roles(const GameSpec& game, const TqreParams& params) {
  params.check();
  RolePredictions out;
  if (game.is_sequential()) {
    out.row = predict_sequential(effective_matrix(game, Role::Row), params).probs;
    return out;
  }
  if (const auto* s = std::get_if<Signaling>(&game.kind)) {
    const LevelTable t = level_table(s->trueMatrix, params, s->fakeMatrix);
    out.row = detail::mix(t.row, t.weights);
    out.col = detail::mix(t.col, t.weights);
    return out;
  }
  const LevelTable t = level_table(effective_matrix(game, Role::Row), params);
  out.row = detail::mix(t.row, t.weights);
  out.col = detail::mix(t.col, t.weights);
  return out;
}

inline Prediction predict(const GameSpec& game, const TqreParams& params, Role role) {
  if (!game.role_legal(role))
    throw RoleUnsupported("game '" + game.id + "': only the first mover acts in a sequential game");
  auto both = predict_roles(game, params);
  return {game.id, role, role == Role::Row ? std::move(both.row) : std::move(both.col)};
}

}  // namespace tqre
