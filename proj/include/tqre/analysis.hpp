#pragma once

// Demographic-shift regression of fitted depth on persona indicators, and
// model-by-game result tables.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

// <resolv.h> (pulled in by the HTTP client) defines _res, an identifier Eigen
// uses as a parameter name.
#pragma push_macro("_res")
#undef _res
#include <Eigen/Dense>
#pragma pop_macro("_res")

#include "tqre/error.hpp"
#include "tqre/estimation.hpp"
#include "tqre/harness/prompt.hpp"

namespace tqre::analysis {

using harness::Persona;
using harness::PersonaField;

// Binary column set to 1 when the persona's field takes one of `values`.
struct Indicator {
  std::string name;
  PersonaField field;
  std::vector<std::string> values;
};

struct Coding {
  std::vector<Indicator> indicators;
  std::map<std::string, std::string> reference;  // group -> reference category, for reporting
};

inline Coding default_coding() {
  using F = PersonaField;
  Coding c;
  c.indicators = {
      {"<25 years old", F::AgeBand, {"15-24"}},
      {">55 years old", F::AgeBand, {"65+"}},
      {"Female", F::Gender, {"female"}},
      {"Graduate Level", F::Education, {"graduate"}},
      {"Below Secondary", F::Education, {"below lower secondary", "lower secondary"}},
      {"Divorced", F::MaritalStatus, {"divorced"}},
      {"Married", F::MaritalStatus, {"married"}},
      {"Widowed", F::MaritalStatus, {"widowed"}},
      {"Rural", F::LivingArea, {"rural"}},
      {"Asexual", F::SexualOrientation, {"asexual"}},
      {"Bisexual", F::SexualOrientation, {"bisexual"}},
      {"Homosexual", F::SexualOrientation, {"homosexual"}},
      {"Physically Disabled", F::Disability, {"physically-disabled"}},
      {"African", F::Race, {"African"}},
      {"Asian", F::Race, {"Asian"}},
      {"Hispanic", F::Race, {"Hispanic"}},
      {"Atheist", F::Religion, {"Atheist"}},
      {"Christian", F::Religion, {"Christian"}},
      {"Jewish", F::Religion, {"Jewish"}},
      {"Obama Supporter", F::PoliticalAffiliation, {"Barack Obama supporter"}},
      {"Trump Supporter", F::PoliticalAffiliation, {"Donald Trump supporter"}},
      {"Republican", F::PoliticalAffiliation, {"lifelong Republican"}},
  };
  c.reference = {{"age_band", "25-34 to 55-64"},
                 {"gender", "male"},
                 {"education", "upper secondary, short-cycle tertiary, bachelor"},
                 {"marital_status", "never married"},
                 {"living_area", "urban"},
                 {"sexual_orientation", "heterosexual"},
                 {"disability", "able-bodied"},
                 {"race", "Caucasian"},
                 {"religion", "Other Religious"},
                 {"political_affiliation", "lifelong Democrat"}};
  return c;
}

inline constexpr const char* kIntercept = "Constant";

struct DesignMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd values;
  std::map<std::string, std::string> reference;
};

struct Observation {
  Persona persona;
  double depth = 0.0;  // fitted tau for this persona cell
  std::string id;      // defaults to the row index
};

struct Encoded {
  DesignMatrix X;
  Eigen::VectorXd y;
};

// Intercept first, then one column per indicator that is set in at least one row.
inline Encoded encode_personas(const std::vector<Observation>& obs, const Coding& coding = default_coding()) {
  if (obs.empty()) throw InsufficientData("encode_personas: no observations");
  for (const auto& o : obs) o.persona.check();

  std::vector<const Indicator*> present;
  for (const auto& ind : coding.indicators)
    for (const auto& o : obs) {
      const auto& v = o.persona.get(ind.field);
      if (v && std::find(ind.values.begin(), ind.values.end(), *v) != ind.values.end()) {
        present.push_back(&ind);
        break;
      }
    }

  Encoded e;
  const auto n = static_cast<Eigen::Index>(obs.size());
  e.X.values = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(present.size() + 1));
  e.X.col_labels.push_back(kIntercept);
  for (const auto* ind : present) e.X.col_labels.push_back(ind->name);
  e.X.reference = coding.reference;
  e.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs[static_cast<std::size_t>(i)];
    e.X.row_labels.push_back(o.id.empty() ? std::to_string(i) : o.id);
    e.X.values(i, 0) = 1.0;
    for (std::size_t j = 0; j < present.size(); ++j) {
      const auto& v = o.persona.get(present[j]->field);
      if (v && std::find(present[j]->values.begin(), present[j]->values.end(), *v) != present[j]->values.end())
        e.X.values(i, static_cast<Eigen::Index>(j + 1)) = 1.0;
    }
    e.y(i) = o.depth;
  }
  return e;
}

struct RegressionResult {
  std::vector<std::string> names;  // kept columns, in design order
  Eigen::VectorXd beta;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd p_values;  // two-sided, normal reference
  double residual_variance = 0.0;
  long n_observations = 0;
  std::vector<std::string> dropped;  // collinear columns, later duplicates first to go
};

inline double two_sided_p(double estimate, double se) {
  if (!(se > 0.0)) return estimate == 0.0 ? 1.0 : 0.0;
  return std::erfc(std::abs(estimate / se) / std::sqrt(2.0));
}

inline std::string stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

// Least squares through Householder QR. A column that lies in the span of the
// columns kept before it is dropped, so the first of any collinear set stays.
inline RegressionResult fit_ols(const DesignMatrix& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.values.rows(), p = X.values.cols();
  if (n != y.size()) throw DomainError("fit_ols: design has " + std::to_string(n) + " rows but response has " +
                                       std::to_string(y.size()));
  if (static_cast<Eigen::Index>(X.col_labels.size()) != p) throw DomainError("fit_ols: column labels do not match");
  if (!X.values.allFinite() || !y.allFinite()) throw DomainError("fit_ols: non-finite input");

  RegressionResult r;
  std::vector<Eigen::Index> kept;
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::VectorXd col = X.values.col(j);
    const double scale = std::max(1.0, col.norm());
    double resid = col.norm();
    if (!kept.empty()) {
      Eigen::MatrixXd K(n, static_cast<Eigen::Index>(kept.size()));
      for (std::size_t k = 0; k < kept.size(); ++k) K.col(static_cast<Eigen::Index>(k)) = X.values.col(kept[k]);
      const Eigen::HouseholderQR<Eigen::MatrixXd> qr(K);
      resid = (col - K * qr.solve(col)).norm();
    }
    if (resid <= 1e-10 * scale)
      r.dropped.push_back(X.col_labels[static_cast<std::size_t>(j)]);
    else
      kept.push_back(j);
  }

  const auto q = static_cast<Eigen::Index>(kept.size());
  if (n <= q)
    throw InsufficientData("fit_ols: " + std::to_string(n) + " observations for " + std::to_string(q) +
                           " independent columns");
  Eigen::MatrixXd K(n, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    K.col(k) = X.values.col(kept[static_cast<std::size_t>(k)]);
    r.names.push_back(X.col_labels[static_cast<std::size_t>(kept[static_cast<std::size_t>(k)])]);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(K);
  r.beta = qr.solve(y);
  const Eigen::VectorXd resid = y - K * r.beta;
  r.n_observations = static_cast<long>(n);
  r.residual_variance = resid.squaredNorm() / static_cast<double>(n - q);

  // (X'X)^-1 = R^-1 R^-T with X = QR.
  const Eigen::MatrixXd R = qr.matrixQR().topRows(q).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv = R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::MatrixXd cov = r.residual_variance * (Rinv * Rinv.transpose());
  r.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.p_values.resize(q);
  for (Eigen::Index k = 0; k < q; ++k) r.p_values(k) = two_sided_p(r.beta(k), r.std_errors(k));
  return r;
}

inline void write_coefficients_csv(std::ostream& os, const RegressionResult& r) {
  os << "name,estimate,std_error,p_value,stars\n";
  char buf[128];
  for (std::size_t k = 0; k < r.names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", r.beta(i), r.std_errors(i), r.p_values(i));
    const bool quote = r.names[k].find_first_of(",\"") != std::string::npos;
    os << (quote ? "\"" + r.names[k] + "\"" : r.names[k]) << ',' << buf << ',' << stars(r.p_values(i)) << '\n';
  }
}

// model -> game id -> fit
using FitTable = std::map<std::string, std::map<std::string, FitResult>>;

enum class TableKind { Tau, Gamma, Likelihood };
enum class TableFormat { Markdown, Csv };

inline TableKind table_kind_from_string(const std::string& s) {
  if (s == "tau") return TableKind::Tau;
  if (s == "gamma") return TableKind::Gamma;
  if (s == "mll" || s == "likelihood") return TableKind::Likelihood;
  throw DomainError("unknown table '" + s + "' (expected tau, gamma or mll)");
}

namespace detail {

inline double table_value(const FitResult& f, TableKind k) {
  switch (k) {
    case TableKind::Tau: return f.tau_hat;
    case TableKind::Gamma: return f.gamma_hat;
    case TableKind::Likelihood: return f.mll;
  }
  return f.tau_hat;
}

inline std::string three_decimals(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  return s == "-0.000" ? "0.000" : s;
}

// Game columns grouped by family, families in order of first appearance
// after sorting by id.
inline std::vector<std::string> game_columns(const FitTable& fits) {
  std::vector<std::string> ids;
  for (const auto& [model, games] : fits)
    for (const auto& [g, f] : games)
      if (std::find(ids.begin(), ids.end(), g) == ids.end()) ids.push_back(g);
  std::sort(ids.begin(), ids.end());
  std::stable_sort(ids.begin(), ids.end(),
                   [](const std::string& a, const std::string& b) { return game_family(a) < game_family(b); });
  return ids;
}

}  // namespace detail

// Rows per model, columns per game; per column the highest converged value
// (at three decimals) is bolded, non-converged fits show "-", missing cells
// are blank.
inline std::string render_table(const FitTable& fits, TableKind kind = TableKind::Tau,
                                TableFormat format = TableFormat::Markdown) {
  if (fits.empty()) throw DomainError("render_table: no fits");
  const auto games = detail::game_columns(fits);

  std::map<std::string, std::string> best;
  for (const auto& g : games) {
    std::optional<double> top;
    for (const auto& [model, row] : fits) {
      const auto it = row.find(g);
      if (it == row.end() || !it->second.converged) continue;
      const double v = std::stod(detail::three_decimals(detail::table_value(it->second, kind)));
      if (!top || v > *top) top = v;
    }
    if (top) best[g] = detail::three_decimals(*top);
  }

  std::ostringstream os;
  if (format == TableFormat::Csv) {
    os << "model";
    for (const auto& g : games) os << ',' << g;
    os << '\n';
    for (const auto& [model, row] : fits) {
      os << model;
      for (const auto& g : games) {
        const auto it = row.find(g);
        os << ',';
        if (it == row.end()) continue;
        os << (it->second.converged ? detail::three_decimals(detail::table_value(it->second, kind)) : "-");
      }
      os << '\n';
    }
    return os.str();
  }

  os << "| Model |";
  for (const auto& g : games) os << ' ' << g << " |";
  os << "\n|---|";
  for (std::size_t i = 0; i < games.size(); ++i) os << "---:|";
  os << '\n';
  for (const auto& [model, row] : fits) {
    os << "| " << model << " |";
    for (const auto& g : games) {
      const auto it = row.find(g);
      std::string cell;
      if (it != row.end()) {
        if (!it->second.converged) {
          cell = "-";
        } else {
          cell = detail::three_decimals(detail::table_value(it->second, kind));
          if (best.count(g) && best[g] == cell) cell = "**" + cell + "**";
        }
      }
      os << ' ' << cell << " |";
    }
    os << '\n';
  }
  return os.str();
}

// Reads the CSV form back: model -> game -> value, nullopt for "-".
inline std::map<std::string, std::map<std::string, std::optional<double>>> parse_table_csv(std::istream& is) {
  std::map<std::string, std::map<std::string, std::optional<double>>> out;
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(is, line)) throw DomainError("empty table");
  const auto header = split(line);
  if (header.empty() || header[0] != "model") throw DomainError("table CSV must start with a 'model' column");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    auto& row = out[cells[0]];
    for (std::size_t i = 1; i < cells.size() && i < header.size(); ++i) {
      if (cells[i].empty()) continue;
      row[header[i]] = cells[i] == "-" ? std::nullopt : std::optional<double>(std::stod(cells[i]));
    }
  }
  return out;
}

}  // namespace tqre::analysis
