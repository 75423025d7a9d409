#pragma once

// games.json reader/writer. A document is either one game object or an array
// of them:
//   { "id": "...", "kind": "simultaneous"|"sequential"|"bayesian"|"signaling",
//     "matrix": [[[u1,u2],...],...], "p": 0.5, "typeA": ..., "typeB": ...,
//     "trueMatrix": ..., "fakeMatrix": ..., "label": "..." }

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tqre/games.hpp"

namespace tqre {

inline nlohmann::json matrix_to_json(const PayoffMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : m.cells()) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : r) row.push_back({c.row, c.col});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline PayoffMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw DomainError("matrix must be an array of rows");
  std::vector<std::vector<Cell>> cells;
  for (const auto& r : j) {
    if (!r.is_array()) throw DomainError("matrix row must be an array of cells");
    std::vector<Cell> row;
    for (const auto& c : r) {
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        throw DomainError("matrix cell must be a two-element numeric array");
      row.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    cells.push_back(std::move(row));
  }
  return PayoffMatrix(std::move(cells));
}

inline nlohmann::json game_to_json(const GameSpec& g) {
  nlohmann::json j;
  j["id"] = g.id;
  j["kind"] = std::string(kind_name(g.kind));
  j["label"] = g.label;
  if (g.matrix) j["matrix"] = matrix_to_json(*g.matrix);
  if (const auto* b = std::get_if<Bayesian>(&g.kind)) {
    j["p"] = b->p;
    j["typeA"] = matrix_to_json(b->typeA);
    j["typeB"] = matrix_to_json(b->typeB);
  } else if (const auto* s = std::get_if<Signaling>(&g.kind)) {
    j["trueMatrix"] = matrix_to_json(s->trueMatrix);
    j["fakeMatrix"] = matrix_to_json(s->fakeMatrix);
  }
  return j;
}

inline GameSpec game_from_json(const nlohmann::json& j) {
  auto need = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw DomainError(std::string("game is missing '") + key + "'");
    return j.at(key);
  };
  GameSpec g;
  g.id = need("id").get<std::string>();
  g.label = j.value("label", g.id);
  const auto kind = need("kind").get<std::string>();
  if (kind == "simultaneous" || kind == "sequential") {
    if (kind == "simultaneous")
      g.kind = Simultaneous{};
    else
      g.kind = Sequential{};
    g.matrix = matrix_from_json(need("matrix"));
  } else if (kind == "bayesian") {
    g.kind = Bayesian{need("p").get<double>(), matrix_from_json(need("typeA")),
                      matrix_from_json(need("typeB"))};
  } else if (kind == "signaling") {
    g.kind = Signaling{matrix_from_json(need("trueMatrix")), matrix_from_json(need("fakeMatrix"))};
  } else {
    throw DomainError("unknown game kind '" + kind + "'");
  }
  return g;
}

inline std::vector<GameSpec> games_from_json(const nlohmann::json& j) {
  std::vector<GameSpec> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(game_from_json(e));
  } else {
    out.push_back(game_from_json(j));
  }
  return out;
}

inline std::vector<GameSpec> load_games(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open games file '" + path + "'");
  try {
    return games_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("games file '" + path + "': " + e.what());
  }
}

}  // namespace tqre
