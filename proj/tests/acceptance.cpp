// Acceptance checks, one PASS/FAIL line per criterion. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli_runner.hpp"
#include "oracle/brute_force_model.hpp"
#include "oracle/normal_equations.hpp"
#include "stub/stub_model.hpp"
#include "tqre/analysis.hpp"
#include "tqre/estimation.hpp"
#include "tqre/harness/prompt.hpp"
#include "tqre/io.hpp"
#include "tqre/model.hpp"
#include "tqre/simulate.hpp"

namespace fs = std::filesystem;
using namespace tqre;

namespace {

constexpr double kTaus[] = {0.01, 0.5, 1, 2, 4, 8};
constexpr double kGammas[] = {0, 0.1, 1, 5, 50};

const std::vector<GameSpec>& lib() {
  static const auto games = builtin_library();
  return games;
}

const GameSpec& game(const std::string& id) { return *find_game(lib(), id); }

// Every fit made below, for the likelihood-floor check.
std::vector<FitResult> g_fits;

FitResult tracked_fit(const GameSpec& g, std::span<const ChoiceCounts> c, const FitConfig& cfg = {}) {
  auto r = fit(g, c, cfg);
  g_fits.push_back(r);
  return r;
}

struct Check {
  bool ok = true;
  std::ostringstream why;
  void require(bool cond, const std::string& msg) {
    if (!cond && ok) why << msg;
    ok = ok && cond;
  }
};

// ---- 1
Check chance_baselines() {
  Check c;
  const double both4 = chance_baseline(game("prisoners-dilemma/base"), {Role::Row, Role::Column});
  const double both9 = chance_baseline(game("competitive/base"), {Role::Row, Role::Column});
  const double seq3 = chance_baseline(game("sequential/base"), {Role::Row});
  c.require(std::abs(both4 + std::log(4.0)) <= 1e-9, "2x2 both-role");
  c.require(std::abs(both9 + std::log(9.0)) <= 1e-9, "3x3 both-role");
  c.require(std::abs(seq3 + std::log(3.0)) <= 1e-9, "sequential 3-row");
  char buf[128];
  std::snprintf(buf, sizeof buf, " (%.9f, %.9f, %.9f)", both4, both9, seq3);
  c.why << buf;
  return c;
}

// ---- 2
Check forward_oracle() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  int n = 0;
  for (const auto& g : lib())
    for (Role r : g.legal_roles())
      for (double tau : kTaus)
        for (double gamma : kGammas) {
          const auto p = predict(g, {tau, gamma, 64}, r).probs;
          const auto ref = oracle::predict(g, tau, gamma, 64, r == Role::Row);
          c.require(p.size() == ref.size(), g.id + " size");
          for (std::size_t a = 0; a < p.size() && a < ref.size(); ++a)
            worst = std::max(worst, std::abs(p[a] - static_cast<double>(ref[a])));
          ++n;
        }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(worst <= 1e-12, "entry error above 1e-12");
  c.require(secs < 10.0, "over 10 s");
  c.why << " (" << n << " predictions, max error " << worst << ", " << secs << " s)";
  return c;
}

// ---- 3
Check normalization_and_limits() {
  Check c;
  double sum_err = 0, lim_err = 0;
  for (const auto& g : lib())
    for (Role r : g.legal_roles()) {
      const double u = 1.0 / g.actions(r);
      for (double tau : kTaus)
        for (double gamma : kGammas) {
          double s = 0;
          for (double p : predict(g, {tau, gamma, 64}, r).probs) s += p;
          sum_err = std::max(sum_err, std::abs(s - 1.0));
        }
      for (double tau : kTaus)
        for (double p : predict(g, {tau, 0.0, 64}, r).probs) lim_err = std::max(lim_err, std::abs(p - u));
      for (double gamma : kGammas)
        for (double p : predict(g, {1e-8, gamma, 64}, r).probs) lim_err = std::max(lim_err, std::abs(p - u));
    }
  c.require(sum_err <= 1e-12, "sum off by more than 1e-12");
  c.require(lim_err <= 1e-6, "limit off by more than 1e-6");
  c.why << " (sum error " << sum_err << ", limit error " << lim_err << ")";
  return c;
}

// ---- 4
Check dominance() {
  Check c;
  const auto& pd = game("prisoners-dilemma/base");
  for (double tau : {0.0, 0.01, 0.5, 1.0, 2.0, 4.0, 8.0})
    for (double gamma : {0.0, 0.1, 1.0, 5.0, 50.0}) {
      const auto p = predict(pd, {tau, gamma, 64}, Role::Row).probs;
      c.require(p[1] >= p[0], "weak order violated");
      if (tau > 0 && gamma > 0) c.require(p[1] > p[0], "strict order violated");
    }
  return c;
}

// ---- 5
Check recovery() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<TqreParams> grid{{0.5, 1.0, 64}, {1.5, 1.0, 64}, {3.0, 0.5, 64}};
  const auto report = recovery_experiment(game("competitive/base"), grid, 5000, 20, 2024);
  for (const auto& row : report.rows) g_fits.push_back(row.fit);
  for (const auto& s : report.summary) {
    const double tol = s.generating.tau == 3.0 ? 0.3 : 0.2;
    int within = 0, n = 0;
    for (const auto& row : report.rows)
      if (row.generating.tau == s.generating.tau) {
        ++n;
        within += std::abs(row.fit.tau_hat - s.generating.tau) <= tol;
      }
    const double frac = double(within) / n;
    c.require(frac >= 0.9, "recovery below 90%");
    c.why << " tau=" << s.generating.tau << ":" << within << "/" << n;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.require(secs < 300, "over 5 minutes");
  c.why << " (" << secs << " s)";
  return c;
}

// ---- 7
Check bayesian_degeneracy() {
  Check c;
  GameSpec b = game("bayesian/p0.5");
  std::get<Bayesian>(b.kind).p = 1.0;
  const GameSpec plain{"typeA", Simultaneous{}, std::get<Bayesian>(b.kind).typeA, ""};
  for (double tau : kTaus)
    for (double gamma : kGammas)
      for (Role r : {Role::Row, Role::Column})
        c.require(predict(b, {tau, gamma, 64}, r).probs == predict(plain, {tau, gamma, 64}, r).probs,
                  "not bit-identical");
  return c;
}

// ---- 8
Check golden_prompts() {
  Check c;
  harness::Persona persona;
  using F = harness::PersonaField;
  persona.set(F::AgeBand, "25-34")
      .set(F::Gender, "female")
      .set(F::Education, "bachelor")
      .set(F::MaritalStatus, "married")
      .set(F::LivingArea, "urban")
      .set(F::SexualOrientation, "heterosexual")
      .set(F::Disability, "able-bodied")
      .set(F::Race, "Asian")
      .set(F::Religion, "Christian")
      .set(F::PoliticalAffiliation, "lifelong Democrat");
  const fs::path root = fs::path(TQRE_TEST_DATA_DIR) / "prompts";
  int n = 0;
  for (const auto& g : lib())
    for (Role r : g.legal_roles())
      for (auto v : {harness::Variant::Vanilla, harness::Variant::Cot, harness::Variant::Persona,
                     harness::Variant::PersonaCot}) {
        const auto file = root / g.id / std::string(to_string(r)) / (std::string(harness::to_string(v)) + ".txt");
        const auto want = cli::slurp(file);
        const auto got = harness::build_prompt({g, r, v, persona});
        c.require(!want.empty() && got == want, "mismatch at " + file.string());
        if (harness::uses_cot(v)) c.require(got.find("Explain your reasoning step by step") != std::string::npos, "CoT");
        if (harness::uses_persona(v)) c.require(got.rfind("Imagine a 25-34 year old", 0) == 0, "persona opening");
        ++n;
      }
  c.why << " (" << n << " prompts)";
  return c;
}

// ---- 9
Check stub_pipeline() {
  Check c;
  stub::Script br;  // level-1 best responses to uniform play on competitive/base
  br.replies["row"] = {"0"};
  br.replies["col"] = {"2"};
  stub::Script unif;
  unif.uniform = true;
  unif.seed = 11;
  stub::Server best(br), noise(unif);
  best.start();
  noise.start();

  const auto dir = cli::scratch("acceptance");
  nlohmann::json cfg{{"endpoints",
                      {{{"name", "best-response"}, {"url", best.url()}, {"model", "stub"}},
                       {{"name", "uniform"}, {"url", noise.url()}, {"model", "stub"}}}},
                     {"games", {"competitive/base"}},
                     {"trials", 30},
                     {"parallelism", 4}};
  std::ofstream(dir / "run.json") << cfg.dump();
  const auto run = cli::run("run '" + (dir / "run.json").string() + "' -o '" + (dir / "out").string() + "'");
  c.require(run.code == 0, "run exited " + std::to_string(run.code));
  std::ifstream in(dir / "out" / "results.csv");
  std::vector<ResultRow> rows;
  try {
    rows = read_results_csv(in);
  } catch (const std::exception& e) {
    c.require(false, e.what());
  }
  double t_best = std::nan(""), t_unif = std::nan("");
  for (const auto& r : rows) {
    g_fits.push_back(r.fit);
    (r.model == "best-response" ? t_best : t_unif) = r.fit.tau_hat;
  }
  c.require(t_best > t_unif, "best-response tau not above uniform tau");
  const auto report = cli::run("report --results '" + (dir / "out" / "results.csv").string() + "' --format csv");
  c.require(report.code == 0 && report.out.find("best-response") != std::string::npos, "report failed");
  c.why << " (tau best-response " << t_best << ", uniform " << t_unif << ")";
  return c;
}

// ---- 6 (runs after the others so it sees their fits)
Check likelihood_floor() {
  Check c;
  std::vector<ChoiceCounts> uniform{{"competitive/base", Role::Row, {10, 10, 10}},
                                    {"competitive/base", Role::Column, {10, 10, 10}}};
  const FitConfig cfg;
  const auto u = tracked_fit(game("competitive/base"), uniform, cfg);
  c.require(std::abs(u.mll - u.baseline) <= 1e-6, "uniform counts off baseline");
  c.require(u.tau_hat == cfg.tau_min, "uniform tau not at the parsimony bound");
  int below = 0;
  for (const auto& f : g_fits)
    if (!(f.mll >= f.baseline - 1e-9)) ++below;
  c.require(below == 0, std::to_string(below) + " fits below baseline");
  c.why << " (" << g_fits.size() << " fits checked)";
  return c;
}

analysis::DesignMatrix design(const Eigen::MatrixXd& X) {
  analysis::DesignMatrix d;
  d.values = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) d.col_labels.push_back("x" + std::to_string(j));
  for (Eigen::Index i = 0; i < X.rows(); ++i) d.row_labels.push_back(std::to_string(i));
  return d;
}

// ---- 10
Check ols_oracle() {
  Check c;
  std::mt19937_64 rng(99);
  std::normal_distribution<double> z;
  double worst = 0;
  for (int s = 0; s < 25; ++s) {
    Eigen::MatrixXd X(50, 4);
    Eigen::VectorXd y(50);
    oracle::Matrix Xo(50, std::vector<long double>(4));
    std::vector<long double> yo(50);
    for (int i = 0; i < 50; ++i) {
      X(i, 0) = 1.0;
      for (int j = 1; j < 4; ++j) X(i, j) = z(rng);
      y(i) = 0.5 - X(i, 1) + 2 * X(i, 2) + 0.1 * X(i, 3) + z(rng);
      for (int j = 0; j < 4; ++j) Xo[i][j] = X(i, j);
      yo[i] = y(i);
    }
    const auto r = analysis::fit_ols(design(X), y);
    const auto ref = oracle::normal_equations(Xo, yo);
    for (int j = 0; j < 4; ++j)
      worst = std::max(worst, std::abs(r.beta[j] - double(ref[j])) / std::max(1.0, std::abs(double(ref[j]))));
  }
  c.require(worst <= 1e-8, "relative error above 1e-8");
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd y(4);
  y << 1, 3, 5, 7;
  const auto e = analysis::fit_ols(design(X), y);
  c.require(std::abs(e.beta[0] - 1) <= 1e-12 && std::abs(e.beta[1] - 2) <= 1e-12, "exact fit beta");
  c.require(e.residual_variance <= 1e-20, "exact fit residual variance");
  c.why << " (max relative error " << worst << ")";
  return c;
}

}  // namespace

int main() {
  struct Item {
    int id;
    const char* what;
    std::function<Check()> run;
  };
  const std::vector<Item> items{
      {1, "chance baselines", chance_baselines},
      {2, "forward model matches brute-force oracle", forward_oracle},
      {3, "normalization and uniform limits", normalization_and_limits},
      {4, "strict-dominance monotonicity", dominance},
      {5, "parameter recovery", recovery},
      {7, "Bayesian p=1 equals type A", bayesian_degeneracy},
      {8, "golden prompts", golden_prompts},
      {9, "stub pipeline discriminates", stub_pipeline},
      {10, "OLS matches normal equations", ols_oracle},
      {6, "likelihood floor", likelihood_floor},
  };
  std::vector<std::string> lines(11);
  int failed = 0;
  for (const auto& it : items) {
    Check c;
    try {
      c = it.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.why << " threw: " << e.what();
    }
    failed += !c.ok;
    lines[it.id] = std::string(c.ok ? "PASS" : "FAIL") + " " + std::to_string(it.id) + " " + it.what + c.why.str();
  }
  for (int i = 1; i <= 10; ++i) std::printf("%s\n", lines[i].c_str());
  return failed == 0 ? 0 : 1;
}
