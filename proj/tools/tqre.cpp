// Command-line front end: fitting, simulation, baselines, live sessions,
// persona regressions and result tables.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "tqre/analysis.hpp"
#include "tqre/estimation.hpp"
#include "tqre/games_json.hpp"
#include "tqre/harness/session.hpp"
#include "tqre/io.hpp"
#include "tqre/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tqre;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNetwork = 4;

// Library plus any games loaded from --games files.
struct GameSource {
  std::vector<std::string> files;

  std::vector<GameSpec> load() const {
    auto games = builtin_library();
    for (const auto& f : files) {
      auto extra = load_games(f);
      games.insert(games.end(), extra.begin(), extra.end());
    }
    const auto report = validate(std::span<const GameSpec>(games));
    if (!report.empty()) {
      const auto& v = report.front();
      throw DomainError("invalid game '" + v.game_id + "': " + v.code + " (" + v.detail + ")");
    }
    return games;
  }

  GameSpec find(const std::string& id) const {
    const auto games = load();
    const auto* g = find_game(games, id);
    if (!g) throw DomainError("unknown game '" + id + "'");
    return *g;
  }
};

std::vector<Role> parse_roles(const std::string& s, const GameSpec& g) {
  if (s == "both" || s == "all" || s.empty()) return g.legal_roles();
  const Role r = role_from_string(s);
  if (!g.role_legal(r)) throw RoleUnsupported("role '" + s + "' does not act in '" + g.id + "'");
  return {r};
}

struct FitFlags {
  FitConfig cfg;

  void add(CLI::App* sub) {
    sub->add_option("--tau-min", cfg.tau_min, "Lower bound for tau")->capture_default_str();
    sub->add_option("--tau-max", cfg.tau_max, "Upper bound for tau")->capture_default_str();
    sub->add_option("--gamma-max", cfg.gamma_max, "Upper bound for gamma")->capture_default_str();
    sub->add_option("--tau-points", cfg.tau_points, "Grid points along tau")->capture_default_str();
    sub->add_option("--gamma-points", cfg.gamma_points, "Grid points along gamma")->capture_default_str();
    sub->add_option("--levels", cfg.K, "Truncation level K of the depth distribution")->capture_default_str();
  }
};

FitConfig fit_config_from_json(const json& j, FitConfig c = {}) {
  c.tau_min = j.value("tau_min", c.tau_min);
  c.tau_max = j.value("tau_max", c.tau_max);
  c.gamma_min = j.value("gamma_min", c.gamma_min);
  c.gamma_max = j.value("gamma_max", c.gamma_max);
  c.tau_points = j.value("tau_points", c.tau_points);
  c.gamma_points = j.value("gamma_points", c.gamma_points);
  c.refine_starts = j.value("refine_starts", c.refine_starts);
  c.K = j.value("K", c.K);
  c.check();
  return c;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw DomainError("malformed JSON in '" + path + "': " + ex.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw DomainError("cannot write '" + p.string() + "'");
  return out;
}

// ---------------------------------------------------------------- fit

int cmd_fit(const GameSource& src, const std::string& counts_path, const std::string& game_override,
            const FitConfig& cfg) {
  const auto file = load_counts(counts_path);
  const auto game = src.find(game_override.empty() ? file.game : game_override);
  auto entries = file.entries;
  for (auto& e : entries) e.game_id = game.id;
  const auto r = fit(game, entries, cfg);
  std::cout << fit_to_json(r).dump() << '\n';
  std::cout << "tau_hat,gamma_hat,mll,baseline,converged\n"
            << exact(r.tau_hat) << ',' << exact(r.gamma_hat) << ',' << exact(r.mll) << ',' << exact(r.baseline) << ','
            << (r.converged ? 1 : 0) << '\n';
  return kOk;
}

// ---------------------------------------------------------------- baseline

int cmd_baseline(const GameSource& src, const std::string& game_id, const std::string& roles) {
  const auto game = src.find(game_id);
  const auto rs = parse_roles(roles, game);
  std::printf("%.3f\n", chance_baseline(game, rs));
  return kOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const GameSource& src, const std::string& game_id, const std::string& roles, double tau,
                 double gamma, int K, long long n, std::uint64_t seed, const std::string& out) {
  const auto game = src.find(game_id);
  CountsFile file{game.id, {}};
  for (Role r : parse_roles(roles, game)) file.entries.push_back(sample_choices(game, {tau, gamma, K}, r, n, seed));
  const auto text = counts_to_json(file).dump(2);
  if (out.empty()) {
    std::cout << text << '\n';
  } else {
    open_out(out) << text << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------- recover

std::vector<TqreParams> parse_grid(const std::string& spec, int K) {
  std::vector<TqreParams> grid;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw DomainError("grid point '" + item + "' is not tau:gamma");
    try {
      grid.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)), K});
    } catch (const std::logic_error&) {
      throw DomainError("grid point '" + item + "' is not tau:gamma");
    }
  }
  if (grid.empty()) throw DomainError("empty grid");
  return grid;
}

int cmd_recover(const GameSource& src, const std::string& game_id, const std::string& grid_spec, long long n,
                int reps, std::uint64_t seed, int threads, const FitConfig& cfg, const std::string& out_dir) {
  const auto game = src.find(game_id);
  const auto report = recovery_experiment(game, parse_grid(grid_spec, cfg.K), n, reps, seed, cfg, threads);
  const fs::path dir(out_dir);
  {
    auto csv = open_out(dir / "recovery.csv");
    write_recovery_csv(csv, report);
  }
  auto summary = recovery_summary_json(report);
  summary["game"] = game.id;
  open_out(dir / "recovery_summary.json") << summary.dump(2) << '\n';
  for (const auto& s : report.summary)
    std::printf("tau=%g gamma=%g within=%.2f bias=%+.4f edge=%.2f%s\n", s.generating.tau, s.generating.gamma,
                s.fraction_within, s.bias, s.fraction_at_edge, s.identifiable ? "" : " (unidentifiable)");
  return kOk;
}

// ---------------------------------------------------------------- run

struct RunConfig {
  std::vector<harness::Endpoint> endpoints;
  std::vector<std::string> games;
  std::string roles = "all";
  std::vector<harness::Variant> variants{harness::Variant::Vanilla};
  std::vector<harness::Persona> personas;
  int trials = 30;
  int parallelism = 4;
  std::string output_dir = "tqre-out";
  FitConfig fit;
  std::uint64_t seed = 0;
};

RunConfig run_config_from_json(const json& j, const std::vector<GameSpec>& library) {
  RunConfig c;
  try {
    for (const auto& e : j.at("endpoints")) c.endpoints.push_back(harness::endpoint_from_json(e));
    if (c.endpoints.empty()) throw DomainError("run config: no endpoints");
    const auto& games = j.value("games", json("all"));
    if (games.is_string() && games.get<std::string>() == "all") {
      for (const auto& g : library) c.games.push_back(g.id);
    } else {
      c.games = games.get<std::vector<std::string>>();
    }
    for (const auto& id : c.games)
      if (!find_game(library, id)) throw DomainError("run config: unknown game '" + id + "'");
    c.roles = j.value("roles", c.roles);
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j["variants"]) c.variants.push_back(harness::variant_from_string(v.get<std::string>()));
    }
    for (const auto& p : j.value("personas", json::array())) c.personas.push_back(harness::persona_from_json(p));
    c.trials = j.value("trials", c.trials);
    c.parallelism = j.value("parallelism", c.parallelism);
    c.output_dir = j.value("output_dir", c.output_dir);
    if (j.contains("fit")) c.fit = fit_config_from_json(j["fit"]);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& ex) {
    throw DomainError(std::string("malformed run config: ") + ex.what());
  }
  if (c.trials < 1) throw DomainError("run config: trials must be >= 1");
  if (c.parallelism < 1) throw DomainError("run config: parallelism must be >= 1");
  for (auto v : c.variants)
    if (harness::uses_persona(v) && c.personas.empty())
      throw DomainError("run config: persona variants need a 'personas' list");
  return c;
}

// Directory-safe form of an identifier: game ids keep their slash as a subdirectory.
std::string path_part(std::string s) {
  for (char& ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' || ch == '/')) ch = '_';
  return s;
}

int cmd_run(const GameSource& src, const std::string& config_path, const std::string& out_override) {
  const auto library = src.load();
  auto cfg = run_config_from_json(read_json_file(config_path), library);
  if (!out_override.empty()) cfg.output_dir = out_override;
  const fs::path root(cfg.output_dir);

  std::vector<ResultRow> results;
  long long exhausted = 0;
  for (const auto& ep : cfg.endpoints)
    for (auto variant : cfg.variants) {
      const std::size_t persona_runs = harness::uses_persona(variant) ? cfg.personas.size() : 1;
      for (std::size_t pi = 0; pi < persona_runs; ++pi) {
        std::string label(harness::to_string(variant));
        if (harness::uses_persona(variant)) label += ":" + std::to_string(pi);
        for (const auto& game_id : cfg.games) {
          const GameSpec& game = *find_game(library, game_id);
          std::vector<harness::TrialRecord> records;
          for (Role r : parse_roles(cfg.roles, game)) {
            harness::PromptSpec spec{game, r, variant, {}};
            if (harness::uses_persona(variant)) spec.persona = cfg.personas[pi];
            auto recs = harness::run_session(ep, spec, cfg.trials, cfg.parallelism);
            records.insert(records.end(), recs.begin(), recs.end());
          }
          const auto agg = harness::aggregate(records, game);
          for (const auto& r : records) exhausted += r.parse_status == harness::ParseStatus::RetryExhausted;
          if (!agg.warning().empty())
            std::cerr << ep.name << " " << game.id << " " << label << ": " << agg.warning() << '\n';

          std::string variant_dir = label;
          std::replace(variant_dir.begin(), variant_dir.end(), ':', '-');
          const fs::path dir = root / path_part(ep.name) / variant_dir / path_part(game.id);
          {
            auto out = open_out(dir / "trials.jsonl");
            harness::write_jsonl(out, records);
          }
          CountsFile counts{game.id, agg.counts};
          open_out(dir / "counts.json") << counts_to_json(counts).dump(2) << '\n';

          ResultRow row{ep.name, game.id, label, {}, agg.ok};
          std::vector<ChoiceCounts> usable;
          for (const auto& c : agg.counts)
            if (c.n_trials() > 0) usable.push_back(c);
          if (usable.empty()) {
            row.fit.tau_hat = row.fit.gamma_hat = row.fit.mll = std::nan("");
            row.fit.baseline = chance_baseline(game, game.legal_roles());
          } else {
            row.fit = fit(game, usable, cfg.fit);
          }
          results.push_back(row);
        }
      }
    }

  {
    auto out = open_out(root / "results.csv");
    write_results_csv(out, results);
  }
  json manifest{{"config", fs::absolute(config_path).string()}, {"seed", cfg.seed}, {"trials", cfg.trials}};
  open_out(root / "run.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << results.size() << " fits to " << (root / "results.csv").string() << '\n';
  if (exhausted > 0) {
    std::cerr << exhausted << " trials failed after all retries\n";
    return kNetwork;
  }
  return kOk;
}

// ---------------------------------------------------------------- regress

std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open results file '" + path + "'");
  return read_results_csv(in);
}

int cmd_regress(const std::string& results_path, const std::string& personas_path, const std::string& model,
                bool pool_games, const std::string& out) {
  const auto rows = load_results(results_path);
  const auto pj = read_json_file(personas_path);
  const json& plist = pj.is_object() ? pj.at("personas") : pj;
  std::vector<harness::Persona> personas;
  for (const auto& p : plist) personas.push_back(harness::persona_from_json(p));

  // persona index -> depths (one per game)
  std::map<std::size_t, std::vector<std::pair<std::string, double>>> depth;
  for (const auto& r : rows) {
    if (!model.empty() && r.model != model) continue;
    const auto colon = r.variant.find(':');
    if (colon == std::string::npos || !r.fit.converged) continue;
    const auto idx = static_cast<std::size_t>(std::stoul(r.variant.substr(colon + 1)));
    if (idx >= personas.size()) throw DomainError("results refer to persona " + std::to_string(idx));
    depth[idx].push_back({r.game, r.fit.tau_hat});
  }
  std::vector<analysis::Observation> obs;
  for (const auto& [idx, list] : depth) {
    if (pool_games) {
      double s = 0;
      for (const auto& [g, t] : list) s += t;
      obs.push_back({personas[idx], s / list.size(), "persona" + std::to_string(idx)});
    } else {
      for (const auto& [g, t] : list) obs.push_back({personas[idx], t, "persona" + std::to_string(idx) + "/" + g});
    }
  }
  if (obs.empty()) throw InsufficientData("no converged persona fits to regress");
  const auto enc = analysis::encode_personas(obs);
  const auto reg = analysis::fit_ols(enc.X, enc.y);
  std::ostringstream csv;
  analysis::write_coefficients_csv(csv, reg);
  if (out.empty()) {
    std::cout << csv.str();
  } else {
    open_out(out) << csv.str();
  }
  for (const auto& d : reg.dropped) std::cerr << "dropped collinear column: " << d << '\n';
  return kOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& results_path, const std::string& table, const std::string& format,
               const std::string& variant, const std::string& out) {
  const auto rows = load_results(results_path);
  std::set<std::string> variants;
  for (const auto& r : rows)
    if (variant.empty() || r.variant == variant) variants.insert(r.variant);
  analysis::FitTable fits;
  for (const auto& r : rows) {
    if (!variant.empty() && r.variant != variant) continue;
    const auto key = variants.size() > 1 ? r.model + " (" + r.variant + ")" : r.model;
    fits[key][r.game] = r.fit;
  }
  if (fits.empty()) throw DomainError("no results to report");
  if (format != "md" && format != "csv") throw DomainError("--format must be md or csv");
  const auto text = analysis::render_table(fits, analysis::table_kind_from_string(table),
                                           format == "csv" ? analysis::TableFormat::Csv : analysis::TableFormat::Markdown);
  if (out.empty()) {
    std::cout << text;
  } else {
    open_out(out) << text;
  }
  return kOk;
}

// ---------------------------------------------------------------- prompts

int cmd_prompts(const GameSource& src, const std::string& out_dir, const std::string& persona_path) {
  harness::Persona persona;
  if (!persona_path.empty()) persona = harness::persona_from_json(read_json_file(persona_path));
  int n = 0;
  for (const auto& g : src.load())
    for (Role r : g.legal_roles())
      for (auto v : {harness::Variant::Vanilla, harness::Variant::Cot, harness::Variant::Persona,
                     harness::Variant::PersonaCot}) {
        const fs::path p = fs::path(out_dir) / path_part(g.id) / std::string(to_string(r)) /
                           (std::string(harness::to_string(v)) + ".txt");
        open_out(p) << harness::build_prompt({g, r, v, persona});
        ++n;
      }
  std::cout << "wrote " << n << " prompts under " << out_dir << '\n';
  return kOk;
}

int cmd_games(const GameSource& src) {
  for (const auto& g : src.load()) {
    std::cout << g.id << '\t' << kind_name(g.kind) << '\t' << g.row_actions() << 'x' << g.col_actions() << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimate strategic reasoning depth from choice data"};
  app.require_subcommand(1);
  GameSource src;
  app.add_option("--games", src.files, "Extra game library JSON files")->check(CLI::ExistingFile);

  std::string game_id, roles, counts_path, out, config_path, results_path, personas_path, model, table = "tau",
                                                                                                 format = "md",
                                                                                                 variant;
  double tau = 1.0, gamma = 1.0;
  long long n = 30;
  std::uint64_t seed = 0;
  int reps = 20, threads = 1;
  std::string grid = "0.5:1,1.5:1,3:0.5";
  bool pool = false;
  FitFlags ff;

  auto* fit_cmd = app.add_subcommand("fit", "Fit (tau, gamma) to a counts.json file");
  fit_cmd->add_option("counts,--counts", counts_path, "counts.json")->required();
  fit_cmd->add_option("--game", game_id, "Game id (defaults to the file's)");
  ff.add(fit_cmd);

  auto* base_cmd = app.add_subcommand("baseline", "Mean log-likelihood of uniform play");
  base_cmd->add_option("--game", game_id)->required();
  base_cmd->add_option("--roles", roles, "row, col or both")->default_str("both");

  auto* sim_cmd = app.add_subcommand("simulate", "Sample choice counts from the model");
  sim_cmd->add_option("--game", game_id)->required();
  sim_cmd->add_option("--roles", roles, "row, col or both")->default_str("both");
  sim_cmd->add_option("--tau", tau)->capture_default_str();
  sim_cmd->add_option("--gamma", gamma)->capture_default_str();
  sim_cmd->add_option("-n,--trials", n)->capture_default_str();
  sim_cmd->add_option("--seed", seed)->capture_default_str();
  sim_cmd->add_option("-o,--out", out, "Output counts.json (stdout if absent)");
  ff.add(sim_cmd);

  auto* rec_cmd = app.add_subcommand("recover", "Parameter-recovery experiment");
  rec_cmd->add_option("--game", game_id)->required();
  rec_cmd->add_option("--grid", grid, "Comma-separated tau:gamma points")->capture_default_str();
  rec_cmd->add_option("-n,--trials", n, "Trials per role per replication")->capture_default_str();
  rec_cmd->add_option("--reps", reps)->capture_default_str();
  rec_cmd->add_option("--seed", seed)->capture_default_str();
  rec_cmd->add_option("--threads", threads)->capture_default_str();
  rec_cmd->add_option("-o,--out", out, "Output directory")->required();
  ff.add(rec_cmd);

  auto* run_cmd = app.add_subcommand("run", "Query endpoints, aggregate and fit");
  run_cmd->add_option("config,--config", config_path, "Run configuration JSON")->required();
  run_cmd->add_option("-o,--out", out, "Output directory (overrides the config)");

  auto* reg_cmd = app.add_subcommand("regress", "Regress persona fits on demographic indicators");
  reg_cmd->add_option("--results", results_path)->required();
  reg_cmd->add_option("--personas", personas_path, "JSON list of personas, or a run config")->required();
  reg_cmd->add_option("--model", model, "Restrict to one model");
  reg_cmd->add_flag("--pool-games", pool, "One observation per persona (mean over games)");
  reg_cmd->add_option("-o,--out", out, "Coefficient CSV (stdout if absent)");

  auto* rep_cmd = app.add_subcommand("report", "Render a model-by-game table");
  rep_cmd->add_option("--results", results_path)->required();
  rep_cmd->add_option("--table", table, "tau, gamma or mll")->capture_default_str();
  rep_cmd->add_option("--format", format, "md or csv")->capture_default_str();
  rep_cmd->add_option("--variant", variant, "Only this variant");
  rep_cmd->add_option("-o,--out", out);

  auto* pr_cmd = app.add_subcommand("prompts", "Write every prompt to a directory tree");
  pr_cmd->add_option("-o,--out", out)->required();
  pr_cmd->add_option("--persona", personas_path, "Persona JSON for the persona variants");

  auto* games_cmd = app.add_subcommand("games", "List available games");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*fit_cmd) return cmd_fit(src, counts_path, game_id, (ff.cfg.check(), ff.cfg));
    if (*base_cmd) return cmd_baseline(src, game_id, roles);
    if (*sim_cmd) return cmd_simulate(src, game_id, roles, tau, gamma, ff.cfg.K, n, seed, out);
    if (*rec_cmd) return cmd_recover(src, game_id, grid, n, reps, seed, threads, (ff.cfg.check(), ff.cfg), out);
    if (*run_cmd) return cmd_run(src, config_path, out);
    if (*reg_cmd) return cmd_regress(results_path, personas_path, model, pool, out);
    if (*rep_cmd) return cmd_report(results_path, table, format, variant, out);
    if (*pr_cmd) return cmd_prompts(src, out, personas_path);
    if (*games_cmd) return cmd_games(src);
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const RoleUnsupported& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
