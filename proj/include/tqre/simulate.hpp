#pragma once

// Synthetic choice data from the forward model and parameter-recovery runs.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tqre/estimation.hpp"
#include "tqre/model.hpp"

namespace tqre {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based generator: draw i of a stream is a pure function of
// (key, i), so streams for different (game, role, replication) never depend
// on the order in which they are consumed.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next() { return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * counter_++); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  static std::uint64_t stream_key(std::uint64_t seed, std::string_view game_id, Role role,
                                  std::uint64_t replication) {
    std::uint64_t k = splitmix64(seed);
    k = splitmix64(k ^ fnv1a64(game_id));
    k = splitmix64(k ^ (role == Role::Row ? 0x1ULL : 0x2ULL));
    return splitmix64(k ^ replication);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline ChoiceCounts sample_from(const std::vector<double>& probs, long long n, CounterRng& rng) {
  std::vector<double> cdf(probs.size());
  double acc = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) cdf[a] = acc += probs[a];
  ChoiceCounts out;
  out.counts.assign(probs.size(), 0);
  for (long long i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    auto a = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    out.counts[std::min(a, probs.size() - 1)]++;
  }
  return out;
}

inline ChoiceCounts sample_choices(const GameSpec& game, const TqreParams& params, Role role, long long n,
                                   std::uint64_t seed, std::uint64_t replication = 0) {
  if (n < 1) throw DomainError("sample_choices: n must be >= 1");
  const auto pred = predict(game, params, role);
  CounterRng rng(CounterRng::stream_key(seed, game.id, role, replication));
  auto out = sample_from(pred.probs, n, rng);
  out.game_id = game.id;
  out.role = role;
  return out;
}

// Recovery tolerance grows with depth: the Poisson mixture flattens as tau grows.
inline double recovery_tolerance(double tau) { return std::max(0.2, 0.1 * tau); }

struct RecoveryRow {
  std::size_t point = 0;  // index into the parameter grid
  int replication = 0;
  TqreParams generating;
  FitResult fit;
  bool within_tolerance = false;
  bool at_edge = false;
};

struct RecoverySummary {
  TqreParams generating;
  double tolerance = 0.0;
  double bias = 0.0;                 // mean(tau_hat - tau)
  double mean_absolute_error = 0.0;  // mean |tau_hat - tau|
  double fraction_within = 0.0;
  double fraction_at_edge = 0.0;
  bool identifiable = true;          // false when most fits land on the box edge
};

struct RecoveryReport {
  std::vector<RecoveryRow> rows;  // ordered by (point, replication)
  std::vector<RecoverySummary> summary;
  int replications = 0;
  long long trials_per_rep = 0;
  std::uint64_t seed = 0;
};

inline bool fit_at_edge(const FitResult& f, const FitConfig& c) {
  auto near = [](double x, double edge, double scale) { return std::abs(x - edge) <= 1e-6 * scale; };
  return near(f.tau_hat, c.tau_min, c.tau_min) || near(f.tau_hat, c.tau_max, c.tau_max) ||
         near(f.gamma_hat, c.gamma_min, 1.0) || near(f.gamma_hat, c.gamma_max, c.gamma_max);
}

inline std::vector<RecoverySummary> summarize(const std::vector<RecoveryRow>& rows,
                                              const std::vector<TqreParams>& grid) {
  std::vector<RecoverySummary> out;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    RecoverySummary s;
    s.generating = grid[p];
    s.tolerance = recovery_tolerance(grid[p].tau);
    int n = 0, within = 0, edge = 0;
    for (const auto& r : rows) {
      if (r.point != p) continue;
      ++n;
      const double err = r.fit.tau_hat - r.generating.tau;
      s.bias += err;
      s.mean_absolute_error += std::abs(err);
      within += r.within_tolerance;
      edge += r.at_edge;
    }
    if (n > 0) {
      s.bias /= n;
      s.mean_absolute_error /= n;
      s.fraction_within = double(within) / n;
      s.fraction_at_edge = double(edge) / n;
    }
    s.identifiable = s.fraction_at_edge < 0.5;
    out.push_back(s);
  }
  return out;
}

// For each grid point and replication: sample counts for every legal role,
// fit, and compare. Deterministic in `seed`; `threads` only changes speed.
inline RecoveryReport recovery_experiment(const GameSpec& game, const std::vector<TqreParams>& grid,
                                          long long trials_per_rep, int reps, std::uint64_t seed,
                                          const FitConfig& config = {}, int threads = 1) {
  if (grid.empty()) throw DomainError("recovery_experiment: empty parameter grid");
  if (reps < 1) throw DomainError("recovery_experiment: reps must be >= 1");
  if (trials_per_rep < 1) throw DomainError("recovery_experiment: trials_per_rep must be >= 1");
  config.check();

  RecoveryReport report;
  report.replications = reps;
  report.trials_per_rep = trials_per_rep;
  report.seed = seed;
  report.rows.resize(grid.size() * static_cast<std::size_t>(reps));

  auto run_one = [&](std::size_t index) {
    const std::size_t p = index / reps;
    const int rep = static_cast<int>(index % reps);
    TqreParams gen = grid[p];
    gen.K = config.K;
    std::vector<ChoiceCounts> counts;
    const std::uint64_t stream = (static_cast<std::uint64_t>(p) << 32) | static_cast<std::uint64_t>(rep);
    for (Role r : game.legal_roles()) counts.push_back(sample_choices(game, gen, r, trials_per_rep, seed, stream));
    RecoveryRow row;
    row.point = p;
    row.replication = rep;
    row.generating = gen;
    row.fit = fit(game, counts, config);
    row.within_tolerance = std::abs(row.fit.tau_hat - gen.tau) <= recovery_tolerance(gen.tau);
    row.at_edge = fit_at_edge(row.fit, config);
    report.rows[index] = row;
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < report.rows.size();) run_one(i);
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  report.summary = summarize(report.rows, grid);
  return report;
}

inline void write_recovery_csv(std::ostream& os, const RecoveryReport& r) {
  os << "point,replication,tau,gamma,tau_hat,gamma_hat,mll,baseline,converged,within_tolerance,at_edge\n";
  os.precision(17);
  for (const auto& row : r.rows)
    os << row.point << ',' << row.replication << ',' << row.generating.tau << ',' << row.generating.gamma << ','
       << row.fit.tau_hat << ',' << row.fit.gamma_hat << ',' << row.fit.mll << ',' << row.fit.baseline << ','
       << (row.fit.converged ? 1 : 0) << ',' << (row.within_tolerance ? 1 : 0) << ',' << (row.at_edge ? 1 : 0)
       << '\n';
}

inline nlohmann::json recovery_summary_json(const RecoveryReport& r) {
  nlohmann::json j;
  j["replications"] = r.replications;
  j["trials_per_rep"] = r.trials_per_rep;
  j["seed"] = r.seed;
  j["tolerance_rule"] = "max(0.2, 0.1 * tau)";
  j["points"] = nlohmann::json::array();
  for (const auto& s : r.summary)
    j["points"].push_back({{"tau", s.generating.tau},
                           {"gamma", s.generating.gamma},
                           {"tolerance", s.tolerance},
                           {"bias", s.bias},
                           {"mean_absolute_error", s.mean_absolute_error},
                           {"fraction_within", s.fraction_within},
                           {"fraction_at_edge", s.fraction_at_edge},
                           {"identifiable", s.identifiable}});
  return j;
}

}  // namespace tqre
