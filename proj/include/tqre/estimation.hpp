#pragma once

// Maximum-likelihood estimation of (tau, gamma) from observed choice counts.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tqre/error.hpp"
#include "tqre/games.hpp"
#include "tqre/model.hpp"

namespace tqre {

struct ChoiceCounts {
  std::string game_id;
  Role role = Role::Row;
  std::vector<long long> counts;

  long long n_trials() const {
    long long n = 0;
    for (auto c : counts) n += c;
    return n;
  }
};

struct FitConfig {
  double tau_min = 1e-6;
  double tau_max = 10.0;
  double gamma_min = 0.0;
  double gamma_max = 60.0;
  int tau_points = 40;
  int gamma_points = 40;
  int refine_starts = 3;
  int refine_iterations = 1000;
  double refine_tolerance = 1e-9;
  int K = 64;

  void check() const {
    if (!(tau_min > 0.0 && tau_min < tau_max)) throw DomainError("fit config: need 0 < tau_min < tau_max");
    if (!(gamma_min >= 0.0 && gamma_min < gamma_max)) throw DomainError("fit config: need 0 <= gamma_min < gamma_max");
    if (tau_points < 2 || gamma_points < 2) throw DomainError("fit config: grid must be at least 2x2");
    if (refine_starts < 1 || refine_iterations < 1 || !(refine_tolerance > 0.0))
      throw DomainError("fit config: bad refinement settings");
    if (K < 1) throw DomainError("fit config: K must be >= 1");
  }

  // Log-spaced between the bounds.
  std::vector<double> tau_grid() const {
    std::vector<double> g(tau_points);
    const double a = std::log(tau_min), b = std::log(tau_max);
    for (int i = 0; i < tau_points; ++i) g[i] = std::exp(a + (b - a) * i / (tau_points - 1));
    g.front() = tau_min;
    g.back() = tau_max;
    return g;
  }

  // Linear up to a pivot, log-spaced above it: dense where choice is noisy,
  // sparse where the logit is already near best response.
  std::vector<double> gamma_grid() const {
    const double pivot = std::min(2.0, gamma_max);
    const int linear = (pivot > gamma_min && pivot < gamma_max) ? gamma_points / 2 : gamma_points;
    std::vector<double> g;
    const double lin_hi = linear == gamma_points ? gamma_max : pivot;
    for (int i = 0; i < linear; ++i) g.push_back(gamma_min + (lin_hi - gamma_min) * i / (linear - 1));
    const int logs = gamma_points - linear;
    for (int i = 1; i <= logs; ++i) g.push_back(pivot * std::pow(gamma_max / pivot, double(i) / logs));
    g.back() = gamma_max;
    return g;
  }
};

struct FitResult {
  double tau_hat = 0.0;
  double gamma_hat = 0.0;
  double mll = 0.0;       // mean log-likelihood per trial
  double baseline = 0.0;  // uniform-play mean log-likelihood per trial
  bool converged = false;
  int n_evaluations = 0;
};

struct ProfilePoint {
  double tau = 0.0;
  double gamma = 0.0;
  double mll = 0.0;
};

inline constexpr double kZeroProbabilityLogLik = -1e18;

inline void check_counts(const GameSpec& game, std::span<const ChoiceCounts> counts) {
  for (const auto& c : counts) {
    if (!c.game_id.empty() && c.game_id != game.id)
      throw DomainError("counts for game '" + c.game_id + "' given for game '" + game.id + "'");
    if (!game.role_legal(c.role))
      throw RoleUnsupported("game '" + game.id + "': only the first mover acts in a sequential game");
    if (c.counts.size() != game.actions(c.role))
      throw DimensionMismatch("game '" + game.id + "': " + std::string(to_string(c.role)) + " counts have " +
                        std::to_string(c.counts.size()) + " entries, expected " +
                        std::to_string(game.actions(c.role)));
    for (auto x : c.counts)
      if (x < 0) throw DomainError("counts must be nonnegative");
  }
}

namespace detail {

inline double counts_loglik(const std::vector<long long>& counts, const std::vector<double>& p) {
  double ll = 0.0;
  for (std::size_t a = 0; a < counts.size(); ++a) {
    if (counts[a] == 0) continue;
    if (!(p[a] > 0.0)) return kZeroProbabilityLogLik;
    ll += static_cast<double>(counts[a]) * std::log(p[a]);
  }
  return ll;
}

inline double loglik_unchecked(const GameSpec& game, std::span<const ChoiceCounts> counts,
                               const TqreParams& params) {
  const auto pred = predict_roles(game, params);
  double ll = 0.0;
  for (const auto& c : counts) {
    const double part = counts_loglik(c.counts, c.role == Role::Row ? pred.row : pred.col);
    if (part == kZeroProbabilityLogLik) return kZeroProbabilityLogLik;
    ll += part;
  }
  return ll;
}

}  // namespace detail

// Sum over entries and actions of count * ln p.
inline double log_likelihood(const GameSpec& game, std::span<const ChoiceCounts> counts,
                             const TqreParams& params) {
  check_counts(game, counts);
  return detail::loglik_unchecked(game, counts, params);
}

// Mean log-likelihood per trial of uniform random play.
inline double chance_baseline(const GameSpec& game, std::span<const Role> roles_observed) {
  if (roles_observed.empty()) throw DomainError("chance_baseline: no roles observed");
  bool row = false, col = false;
  for (Role r : roles_observed) {
    if (!game.role_legal(r))
      throw RoleUnsupported("game '" + game.id + "': only the first mover acts in a sequential game");
    (r == Role::Row ? row : col) = true;
  }
  double b = 0.0;
  if (row) b -= std::log(static_cast<double>(game.row_actions()));
  if (col) b -= std::log(static_cast<double>(game.col_actions()));
  return b;
}

inline double chance_baseline(const GameSpec& game, std::initializer_list<Role> roles) {
  return chance_baseline(game, std::span<const Role>(roles.begin(), roles.size()));
}

namespace detail {

// Likelihood surface over (ln tau, gamma) inside the configured box.
class Objective {
 public:
  Objective(const GameSpec& game, std::span<const ChoiceCounts> counts, const FitConfig& config)
      : game_(game), counts_(counts), config_(config) {
    double n = 0.0, uniform = 0.0;
    for (const auto& c : counts) {
      n += static_cast<double>(c.n_trials());
      uniform -= static_cast<double>(c.n_trials()) * std::log(static_cast<double>(c.counts.size()));
    }
    mean_trials_ = n / static_cast<double>(counts.size());
    baseline_ = uniform / mean_trials_;
    lo_ = {std::log(config.tau_min), config.gamma_min};
    hi_ = {std::log(config.tau_max), config.gamma_max};
  }

  using Point = std::array<double, 2>;  // (ln tau, gamma)

  Point clamp(Point x) const {
    for (int d = 0; d < 2; ++d) x[d] = std::clamp(x[d], lo_[d], hi_[d]);
    return x;
  }

  static double tau_of(const Point& x) { return std::exp(x[0]); }

  // Mean log-likelihood per trial at (tau, gamma).
  double mll(double tau, double gamma) {
    ++evaluations_;
    return loglik_unchecked(game_, counts_, {tau, gamma, config_.K}) / mean_trials_;
  }

  double at(const Point& x) { return mll(tau_of(x), x[1]); }

  const Point& lo() const { return lo_; }
  const Point& hi() const { return hi_; }
  double baseline() const { return baseline_; }
  int evaluations() const { return evaluations_; }

 private:
  const GameSpec& game_;
  std::span<const ChoiceCounts> counts_;
  const FitConfig& config_;
  double mean_trials_ = 1.0;
  double baseline_ = 0.0;
  Point lo_{}, hi_{};
  int evaluations_ = 0;
};

struct Candidate {
  double tau, gamma, mll;
};

struct SimplexResult {
  Objective::Point x;
  double value;
  bool converged;
};

// Box-projected Nelder-Mead maximizer.
inline SimplexResult nelder_mead(Objective& obj, Objective::Point start, Objective::Point step,
                                 int max_iterations, double tolerance) {
  using Point = Objective::Point;
  std::array<Point, 3> v{start, start, start};
  for (int d = 0; d < 2; ++d) {
    Point p = start;
    p[d] += step[d];
    if (p[d] > obj.hi()[d]) p[d] = start[d] - step[d];
    v[d + 1] = obj.clamp(p);
  }
  std::array<double, 3> f{};
  for (int i = 0; i < 3; ++i) f[i] = obj.at(v[i]);

  auto lerp = [&](const Point& a, const Point& b, double t) {
    return obj.clamp(Point{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
  };

  bool converged = false;
  for (int it = 0; it < max_iterations; ++it) {
    // order best (largest) first
    std::array<int, 3> idx{0, 1, 2};
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return f[a] > f[b]; });
    const std::array<Point, 3> vs{v[idx[0]], v[idx[1]], v[idx[2]]};
    const std::array<double, 3> fs{f[idx[0]], f[idx[1]], f[idx[2]]};
    v = vs;
    f = fs;

    double diameter = 0.0;
    for (int i = 1; i < 3; ++i)
      for (int d = 0; d < 2; ++d) diameter = std::max(diameter, std::abs(v[i][d] - v[0][d]));
    if (diameter < tolerance) {
      converged = true;
      break;
    }

    const Point centroid{(v[0][0] + v[1][0]) / 2, (v[0][1] + v[1][1]) / 2};
    const Point reflected = lerp(centroid, v[2], -1.0);
    const double fr = obj.at(reflected);
    if (fr > f[0]) {
      const Point expanded = lerp(centroid, v[2], -2.0);
      const double fe = obj.at(expanded);
      if (fe > fr) {
        v[2] = expanded;
        f[2] = fe;
      } else {
        v[2] = reflected;
        f[2] = fr;
      }
      continue;
    }
    if (fr > f[1]) {
      v[2] = reflected;
      f[2] = fr;
      continue;
    }
    const bool outside = fr > f[2];
    const Point contracted = outside ? lerp(centroid, reflected, 0.5) : lerp(centroid, v[2], 0.5);
    const double fc = obj.at(contracted);
    if (fc > std::max(fr, f[2]) || (!outside && fc >= f[2])) {
      v[2] = contracted;
      f[2] = fc;
      continue;
    }
    for (int i = 1; i < 3; ++i) {
      v[i] = lerp(v[0], v[i], 0.5);
      f[i] = obj.at(v[i]);
    }
  }
  int best = 0;
  for (int i = 1; i < 3; ++i)
    if (f[i] > f[best]) best = i;
  return {v[best], f[best], converged};
}

// True when the point is interior, or when it sits on the box edge and
// nudging it inward does not improve the likelihood.
inline bool boundary_dominates(Objective& obj, const Objective::Point& x, double value, double tolerance) {
  bool ok = true;
  for (int d = 0; d < 2; ++d) {
    const double span = obj.hi()[d] - obj.lo()[d];
    const double nudge = 1e-4 * span;
    for (double edge : {obj.lo()[d], obj.hi()[d]}) {
      if (std::abs(x[d] - edge) > 1e-12 * std::max(1.0, span)) continue;
      Objective::Point probe = x;
      probe[d] += edge == obj.lo()[d] ? nudge : -nudge;
      if (obj.at(probe) > value + tolerance) ok = false;
    }
  }
  return ok;
}

inline Candidate parsimonious_best(const std::vector<Candidate>& all, double tolerance) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : all) top = std::max(top, c.mll);
  const Candidate* pick = nullptr;
  for (const auto& c : all) {
    if (c.mll < top - tolerance) continue;
    if (!pick || c.tau < pick->tau || (c.tau == pick->tau && c.gamma < pick->gamma)) pick = &c;
  }
  return *pick;
}

inline void check_fit_input(const GameSpec& game, std::span<const ChoiceCounts> counts) {
  if (counts.empty()) throw DomainError("fit: no counts");
  check_counts(game, counts);
  for (const auto& c : counts)
    if (c.n_trials() < 1) throw DomainError("fit: every counts entry needs at least one trial");
}

}  // namespace detail

// Coarse grid over the box, then simplex refinement from the best grid points.
// Ties within refine_tolerance go to the smallest tau, then smallest gamma.
inline FitResult fit(const GameSpec& game, std::span<const ChoiceCounts> counts, const FitConfig& config = {}) {
  config.check();
  detail::check_fit_input(game, counts);
  detail::Objective obj(game, counts, config);

  const auto taus = config.tau_grid();
  const auto gammas = config.gamma_grid();
  std::vector<detail::Candidate> candidates;
  candidates.reserve(taus.size() * gammas.size() + config.refine_starts);
  for (double t : taus)
    for (double g : gammas) candidates.push_back({t, g, obj.mll(t, g)});

  std::vector<std::size_t> order(candidates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].mll > candidates[b].mll; });

  const double tau_step = (std::log(config.tau_max) - std::log(config.tau_min)) / (config.tau_points - 1);
  const int starts = std::min<int>(config.refine_starts, static_cast<int>(order.size()));
  bool refine_converged = false;
  double refine_best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    const auto& c = candidates[order[s]];
    const auto gi = static_cast<std::size_t>(std::lower_bound(gammas.begin(), gammas.end(), c.gamma) - gammas.begin());
    const double gamma_step = gi + 1 < gammas.size() ? gammas[gi + 1] - gammas[gi] : gammas[gi] - gammas[gi - 1];
    auto r = detail::nelder_mead(obj, {std::log(c.tau), c.gamma}, {tau_step, gamma_step}, config.refine_iterations,
                                 config.refine_tolerance);
    candidates.push_back({detail::Objective::tau_of(r.x), r.x[1], r.value});
    if (r.value > refine_best) {
      refine_best = r.value;
      refine_converged = r.converged;
    }
  }

  const auto best = detail::parsimonious_best(candidates, config.refine_tolerance);
  FitResult out;
  out.tau_hat = best.tau;
  out.gamma_hat = best.gamma;
  out.mll = best.mll;
  out.baseline = obj.baseline();
  out.converged = refine_converged &&
                  detail::boundary_dominates(obj, obj.clamp({std::log(best.tau), best.gamma}), best.mll,
                                             config.refine_tolerance);
  out.n_evaluations = obj.evaluations();
  return out;
}

// Profile likelihood: for each tau, the best gamma and its mean log-likelihood.
inline std::vector<ProfilePoint> profile_tau(const GameSpec& game, std::span<const ChoiceCounts> counts,
                                             std::span<const double> tau_grid, const FitConfig& config = {}) {
  config.check();
  detail::check_fit_input(game, counts);
  if (tau_grid.empty()) throw DomainError("profile_tau: empty tau grid");
  detail::Objective obj(game, counts, config);
  const auto gammas = config.gamma_grid();
  constexpr double kGolden = 0.6180339887498949;

  std::vector<ProfilePoint> out;
  for (double tau : tau_grid) {
    if (!(tau > 0.0)) throw DomainError("profile_tau: tau must be > 0");
    std::vector<double> values(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i) values[i] = obj.mll(tau, gammas[i]);

    std::vector<detail::Candidate> cands;
    for (std::size_t i = 0; i < gammas.size(); ++i) cands.push_back({tau, gammas[i], values[i]});

    // Golden-section search in the bracket around every local grid maximum.
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      const bool left_ok = i == 0 || values[i] >= values[i - 1];
      const bool right_ok = i + 1 == gammas.size() || values[i] >= values[i + 1];
      if (!left_ok || !right_ok) continue;
      double a = gammas[i == 0 ? 0 : i - 1], b = gammas[i + 1 == gammas.size() ? i : i + 1];
      double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
      double fc = obj.mll(tau, c), fd = obj.mll(tau, d);
      while (b - a > 1e-10 * std::max(1.0, b)) {
        if (fc >= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - kGolden * (b - a);
          fc = obj.mll(tau, c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + kGolden * (b - a);
          fd = obj.mll(tau, d);
        }
      }
      cands.push_back(fc >= fd ? detail::Candidate{tau, c, fc} : detail::Candidate{tau, d, fd});
    }
    const auto best = detail::parsimonious_best(cands, config.refine_tolerance);
    out.push_back({tau, best.gamma, best.mll});
  }
  return out;
}

}  // namespace tqre
