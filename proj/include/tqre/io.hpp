#pragma once

// File formats shared by the command-line tools: counts.json and fit results.

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqre/error.hpp"
#include "tqre/estimation.hpp"

namespace tqre {

// { "game": id, "entries": [ { "role": "row"|"col", "counts": [ints] } ] }
struct CountsFile {
  std::string game;
  std::vector<ChoiceCounts> entries;
};

inline nlohmann::json counts_to_json(const CountsFile& f) {
  nlohmann::json j{{"game", f.game}, {"entries", nlohmann::json::array()}};
  for (const auto& e : f.entries) j["entries"].push_back({{"role", to_string(e.role)}, {"counts", e.counts}});
  return j;
}

inline CountsFile counts_from_json(const nlohmann::json& j) {
  try {
    CountsFile f;
    f.game = j.at("game").get<std::string>();
    for (const auto& e : j.at("entries")) {
      ChoiceCounts c;
      c.game_id = f.game;
      c.role = role_from_string(e.at("role").get<std::string>());
      c.counts = e.at("counts").get<std::vector<long long>>();
      f.entries.push_back(std::move(c));
    }
    return f;
  } catch (const nlohmann::json::exception& ex) {
    throw DomainError(std::string("malformed counts file: ") + ex.what());
  }
}

inline CountsFile load_counts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open counts file '" + path + "'");
  try {
    return counts_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& ex) {
    throw DomainError("malformed counts file '" + path + "': " + ex.what());
  }
}

inline nlohmann::json fit_to_json(const FitResult& r) {
  return {{"tau_hat", r.tau_hat},       {"gamma_hat", r.gamma_hat},     {"mll", r.mll},
          {"baseline", r.baseline},     {"converged", r.converged},     {"n_evaluations", r.n_evaluations}};
}

// Round-trip decimal text for a double.
inline std::string exact(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// One row of results.csv: a fit for (model, game, variant).
struct ResultRow {
  std::string model;
  std::string game;
  std::string variant;
  FitResult fit;
  long long n_effective = 0;
};

inline constexpr const char* kResultsHeader = "model,game,variant,tau_hat,gamma_hat,mll,baseline,converged,n_effective";

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kResultsHeader << '\n';
  for (const auto& r : rows)
    os << r.model << ',' << r.game << ',' << r.variant << ',' << exact(r.fit.tau_hat) << ',' << exact(r.fit.gamma_hat)
       << ',' << exact(r.fit.mll) << ',' << exact(r.fit.baseline) << ',' << (r.fit.converged ? 1 : 0) << ','
       << r.n_effective << '\n';
}

inline std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kResultsHeader) throw DomainError("results file has an unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
    if (c.size() != 9) throw DomainError("results row has " + std::to_string(c.size()) + " fields: " + line);
    try {
      ResultRow r;
      r.model = c[0];
      r.game = c[1];
      r.variant = c[2];
      r.fit.tau_hat = std::stod(c[3]);
      r.fit.gamma_hat = std::stod(c[4]);
      r.fit.mll = std::stod(c[5]);
      r.fit.baseline = std::stod(c[6]);
      r.fit.converged = c[7] == "1";
      r.n_effective = std::stoll(c[8]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DomainError("unreadable results row: " + line);
    }
  }
  return rows;
}

}  // namespace tqre
