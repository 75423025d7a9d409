#pragma once

// Brute-force reference for the forward model, written against the model's
// defining formulas and sharing no code with include/tqre/model.hpp. Every
// level recomputes its belief from scratch, weights come from explicit
// factorials, and all arithmetic runs in long double.

#include <cmath>
#include <vector>

#include "tqre/games.hpp"  // data types only

namespace oracle {

using Real = long double;
using Strategy = std::vector<Real>;

inline std::vector<Real> truncated_poisson(Real tau, int K) {
  std::vector<Real> f(K + 1);
  Real total = 0;
  for (int k = 0; k <= K; ++k) {
    Real factorial = 1;
    for (int i = 2; i <= k; ++i) factorial *= i;
    Real power = 1;
    for (int i = 0; i < k; ++i) power *= tau;
    f[k] = power * std::exp(-tau) / factorial;
    total += f[k];
  }
  for (auto& x : f) x /= total;
  return f;
}

inline Strategy logit_choice(const std::vector<Real>& eu, Real lambda) {
  // Shifting by the largest utility leaves the ratios unchanged.
  Real best = eu[0];
  for (Real u : eu) best = std::max(best, u);
  Strategy p(eu.size());
  Real denom = 0;
  for (std::size_t a = 0; a < eu.size(); ++a) denom += std::exp(lambda * (eu[a] - best));
  for (std::size_t a = 0; a < eu.size(); ++a) p[a] = std::exp(lambda * (eu[a] - best)) / denom;
  return p;
}

// belief of a level-k player about an opponent with strategies levels[0..k-1]
inline Strategy marginal_belief(const std::vector<Strategy>& levels, const std::vector<Real>& f, int k) {
  Real norm = 0;
  for (int l = 0; l < k; ++l) norm += f[l];
  Strategy belief(levels[0].size(), 0);
  for (int h = 0; h < k; ++h) {
    const Real W = f[h] / norm;
    for (std::size_t a = 0; a < belief.size(); ++a) belief[a] += W * levels[h][a];
  }
  return belief;
}

// u[i][j] payoff to the player choosing i when the opponent chooses j.
using Payoff = std::vector<std::vector<Real>>;

inline Payoff row_view(const tqre::PayoffMatrix& m) {
  Payoff u(m.rows(), std::vector<Real>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) u[i][j] = m.at(i, j).row;
  return u;
}

inline Payoff col_view(const tqre::PayoffMatrix& m) {
  Payoff u(m.cols(), std::vector<Real>(m.rows()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) u[j][i] = m.at(i, j).col;
  return u;
}

inline Strategy level_strategy(const Payoff& u, const std::vector<Strategy>& opponent_levels,
                               const std::vector<Real>& f, Real gamma, int k) {
  if (k == 0) return Strategy(u.size(), Real(1) / u.size());
  const Strategy belief = marginal_belief(opponent_levels, f, k);
  std::vector<Real> eu(u.size(), 0);
  for (std::size_t a = 0; a < u.size(); ++a)
    for (std::size_t b = 0; b < belief.size(); ++b) eu[a] += belief[b] * u[a][b];
  return logit_choice(eu, gamma * k);
}

struct Levels {
  std::vector<Strategy> row, col;
  std::vector<Real> f;
};

inline Levels all_levels(const tqre::PayoffMatrix& m, Real tau, Real gamma, int K) {
  Levels L;
  L.f = truncated_poisson(tau, K);
  const Payoff ur = row_view(m), uc = col_view(m);
  for (int k = 0; k <= K; ++k) {
    Strategy r = level_strategy(ur, L.col, L.f, gamma, k);
    Strategy c = level_strategy(uc, L.row, L.f, gamma, k);
    L.row.push_back(r);
    L.col.push_back(c);
  }
  return L;
}

inline Strategy population(const std::vector<Strategy>& levels, const std::vector<Real>& f) {
  Strategy p(levels[0].size(), 0);
  for (std::size_t k = 0; k < f.size(); ++k)
    for (std::size_t a = 0; a < p.size(); ++a) p[a] += f[k] * levels[k][a];
  return p;
}

inline Strategy sequential_first_mover(const tqre::PayoffMatrix& m, Real tau, Real gamma, int K) {
  const auto f = truncated_poisson(tau, K);
  const std::size_t rows = m.rows(), cols = m.cols();
  // responder level h reply to row x
  auto reply = [&](int h, std::size_t x) {
    std::vector<Real> u(cols);
    for (std::size_t y = 0; y < cols; ++y) u[y] = m.at(x, y).col;
    return logit_choice(u, gamma * h);
  };
  std::vector<Strategy> mover;
  for (int k = 0; k <= K; ++k) {
    if (k == 0) {
      mover.push_back(Strategy(rows, Real(1) / rows));
      continue;
    }
    Real norm = 0;
    for (int l = 0; l < k; ++l) norm += f[l];
    std::vector<Real> eu(rows, 0);
    for (std::size_t x = 0; x < rows; ++x)
      for (int h = 0; h < k; ++h) {
        const Strategy r = reply(h, x);
        for (std::size_t y = 0; y < cols; ++y) eu[x] += f[h] / norm * r[y] * m.at(x, y).row;
      }
    mover.push_back(logit_choice(eu, gamma * k));
  }
  return population(mover, f);
}

inline tqre::PayoffMatrix expected_matrix(const tqre::Bayesian& b) {
  std::vector<std::vector<tqre::Cell>> cells(b.typeA.rows());
  for (std::size_t i = 0; i < b.typeA.rows(); ++i)
    for (std::size_t j = 0; j < b.typeA.cols(); ++j) {
      const auto& x = b.typeA.at(i, j);
      const auto& y = b.typeB.at(i, j);
      cells[i].push_back({b.p * x.row + (1 - b.p) * y.row, b.p * x.col + (1 - b.p) * y.col});
    }
  return tqre::PayoffMatrix(cells);
}

// Population prediction for `role` (true = row player).
inline Strategy predict(const tqre::GameSpec& g, Real tau, Real gamma, int K, bool row_player) {
  if (std::holds_alternative<tqre::Sequential>(g.kind)) return sequential_first_mover(*g.matrix, tau, gamma, K);
  if (const auto* s = std::get_if<tqre::Signaling>(&g.kind)) {
    const Levels fake = all_levels(s->fakeMatrix, tau, gamma, K);
    if (!row_player) return population(fake.col, fake.f);
    const Payoff ur = row_view(s->trueMatrix);
    std::vector<Strategy> sender;
    for (int k = 0; k <= K; ++k) sender.push_back(level_strategy(ur, fake.col, fake.f, gamma, k));
    return population(sender, fake.f);
  }
  tqre::PayoffMatrix m;
  if (const auto* b = std::get_if<tqre::Bayesian>(&g.kind))
    m = expected_matrix(*b);
  else
    m = *g.matrix;
  const Levels L = all_levels(m, tau, gamma, K);
  return population(row_player ? L.row : L.col, L.f);
}

}  // namespace oracle
