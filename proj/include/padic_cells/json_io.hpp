#pragma once

// JSON forms of cells, prepared terms, zeta functions, piecewise results and
// problem files. Rationals are strings, valuations integers or "inf".

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "cells.hpp"
#include "constructible.hpp"
#include "decompose.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "integrate.hpp"
#include "oracle.hpp"
#include "parser.hpp"
#include "rational.hpp"
#include "zeta.hpp"

namespace padic_cells {

using Json = nlohmann::ordered_json;

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what) : Error(ErrorCode::parse, "schema: " + what) {}
};

namespace json_detail {

inline const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline Rational rational_of(const Json& j, const char* what) {
  if (j.is_number_integer()) return Rational(Integer(std::to_string(j.get<long long>())));
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const Error&) {
      throw SchemaError(std::string(what) + " is not a rational");
    }
  }
  throw SchemaError(std::string(what) + " must be a string \"num/den\" or an integer");
}

inline long integer_of(const Json& j, const char* what) {
  if (!j.is_number_integer()) throw SchemaError(std::string(what) + " must be an integer");
  return j.get<long>();
}

inline bool bool_of(const Json& j, const char* what) {
  if (!j.is_boolean()) throw SchemaError(std::string(what) + " must be a boolean");
  return j.get<bool>();
}

inline std::optional<DTerm> optional_term(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw SchemaError(std::string(key) + " must be a string or null");
  return parse_dterm(j.at(key).get<std::string>());
}

}  // namespace json_detail

inline Json rational_json(const Rational& r) { return to_string(r); }

inline Json center_json(const Center& c) {
  if (const auto* t = std::get_if<DTerm>(&c)) return print(*t);
  const auto& root = std::get<RootCenter>(c);
  Json j;
  j["root_of"] = root.polynomial().to_string("x0");
  j["ball_center"] = to_string(root.ball_center());
  j["ball_radius"] = root.ball_radius();
  j["approx"] = to_string(root.approximation(root.ball_radius() + 16));
  j["approx_precision"] = root.ball_radius() + 16;
  return j;
}

inline Center center_from_json(const Json& j, long p) {
  if (j.is_string()) return parse_dterm(j.get<std::string>());
  if (j.is_object()) {
    const DTerm f = parse_dterm(json_detail::require(j, "root_of").get<std::string>());
    auto poly = to_polynomial(f, 0);
    if (!poly) throw SchemaError("root_of must be a polynomial in x0");
    return RootCenter(*poly, json_detail::rational_of(json_detail::require(j, "ball_center"), "ball_center"),
                      json_detail::integer_of(json_detail::require(j, "ball_radius"), "ball_radius"), p);
  }
  throw SchemaError("gamma must be an expression or a root description");
}

inline Json cell_json(const Cell& cell) {
  Json conds = Json::array();
  for (const auto& c : cell.conditions) {
    Json j;
    j["alpha"] = c.lower ? Json(print(*c.lower)) : Json(nullptr);
    j["alpha_strict"] = c.lower_strict;
    j["beta"] = c.upper ? Json(print(*c.upper)) : Json(nullptr);
    j["beta_strict"] = c.upper_strict;
    j["gamma"] = center_json(c.center);
    j["mu"] = to_string(c.coset.mu);
    j["n"] = c.coset.n;
    conds.push_back(std::move(j));
  }
  Json out;
  out["conditions"] = std::move(conds);
  return out;
}

inline Cell cell_from_json(const Json& j, long p) {
  Cell cell;
  const Json& conds = json_detail::require(j, "conditions");
  if (!conds.is_array()) throw SchemaError("conditions must be an array");
  for (const auto& c : conds) {
    CellCondition cond;
    cond.lower = json_detail::optional_term(c, "alpha");
    if (c.contains("alpha_strict")) cond.lower_strict = json_detail::bool_of(c.at("alpha_strict"), "alpha_strict");
    cond.upper = json_detail::optional_term(c, "beta");
    if (c.contains("beta_strict")) cond.upper_strict = json_detail::bool_of(c.at("beta_strict"), "beta_strict");
    cond.center = c.contains("gamma") ? center_from_json(c.at("gamma"), p) : Center(DTerm::constant(0));
    const Rational mu = c.contains("mu") ? json_detail::rational_of(c.at("mu"), "mu") : Rational(1);
    const long n = c.contains("n") ? json_detail::integer_of(c.at("n"), "n") : 1;
    if (n < 1) throw SchemaError("n must be >= 1");
    cond.coset = Coset(mu, n);
    cell.conditions.push_back(std::move(cond));
  }
  return cell;
}

inline Json prepared_terms_json(const std::vector<PreparedTerm>& terms) {
  Json cells = Json::array();
  Json ts = Json::array();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    cells.push_back(cell_json(t.cell));
    Json j;
    j["cell"] = i;
    j["delta"] = to_string(t.delta);
    j["a"] = t.a;
    j["l"] = t.l;
    j["gamma"] = center_json(t.cell.last().center);
    j["mu"] = to_string(t.cell.last().coset.mu);
    j["n"] = t.cell.last().coset.n;
    ts.push_back(std::move(j));
  }
  Json out;
  out["cells"] = std::move(cells);
  out["terms"] = std::move(ts);
  return out;
}

inline Json verification_json(const VerificationReport& r) {
  Json j;
  j["pass"] = r.pass;
  j["checked"] = r.checked;
  j["uncovered"] = r.uncovered;
  j["overlapping"] = r.overlapping;
  j["mismatched"] = r.mismatched;
  j["counterexample"] = r.counterexample ? Json(to_string(*r.counterexample)) : Json(nullptr);
  j["message"] = r.message;
  return j;
}

inline Json zeta_json(const ZetaRational& z) {
  Json j;
  Json num = Json::array();
  for (const auto& c : z.numerator().coeffs()) num.push_back(to_string(c));
  j["numerator"] = std::move(num);
  j["shift"] = z.shift();
  Json den = Json::array();
  for (const auto& f : z.denominator_factors()) den.push_back(Json{{"c", f.c}, {"d", f.d}});
  j["denominator_factors"] = std::move(den);
  j["text"] = z.to_string();
  return j;
}

inline Json piece_json(const Piece& piece) {
  Json j;
  j["support"] = cell_json(piece.support);
  Json pins = Json::array();
  for (const auto& pin : piece.pins)
    pins.push_back(Json{{"h", print(pin.h)}, {"residue", pin.residue}, {"modulus", pin.modulus}});
  j["pins"] = std::move(pins);
  j["expr"] = piece.expr.to_string();
  return j;
}

inline Json piecewise_json(const PiecewiseConstructible& f) {
  Json j;
  Json pieces = Json::array();
  for (const auto& p : f.pieces) pieces.push_back(piece_json(p));
  j["pieces"] = std::move(pieces);
  Json bad = Json::array();
  for (const auto& p : f.nonintegrable) bad.push_back(piece_json(p));
  j["nonintegrable_on"] = std::move(bad);
  return j;
}

inline Json oracle_json(const OracleResult& r) {
  Json j;
  j["value"] = to_string(r.value);
  j["resolution"] = r.resolution;
  j["boundary_mass"] = to_string(r.boundary_mass);
  j["boundary_sup"] = r.boundary_sup ? Json(to_string(*r.boundary_sup)) : Json(nullptr);
  j["sampled"] = r.sampled;
  j["classes"] = r.classes;
  return j;
}

// ---------------------------------------------------------------------------

struct ProblemCell {
  Cell cell;
  std::optional<long> alpha_residue;
  std::optional<long> beta_residue;
};

struct Problem {
  long version = 1;
  long p = 0;
  long params = 0;
  long integrate = 1;
  ConstructibleExpr integrand;
  std::optional<std::vector<ProblemCell>> cells;  ///< absent: automatic decomposition
  std::string mode = "concrete";
  std::vector<std::vector<Rational>> base_points;
  std::optional<long> precision;
};

inline Problem problem_from_json(const Json& j) {
  using namespace json_detail;
  if (!j.is_object()) throw SchemaError("problem must be an object");
  Problem pr;
  pr.version = integer_of(require(j, "version"), "version");
  if (pr.version != 1) throw SchemaError("unsupported version " + std::to_string(pr.version));
  pr.p = integer_of(require(j, "p"), "p");
  const Json& vars = require(j, "variables");
  pr.params = integer_of(require(vars, "params"), "variables.params");
  pr.integrate = integer_of(require(vars, "integrate"), "variables.integrate");
  if (pr.params < 0 || pr.integrate < 1) throw SchemaError("variables: params >= 0 and integrate >= 1 required");
  const Json& integrand = require(j, "integrand");
  if (!integrand.is_string()) throw SchemaError("integrand must be a string");
  pr.integrand = parse_constructible(integrand.get<std::string>());
  if (pr.integrand.max_variable() >= pr.params + pr.integrate)
    throw Error(ErrorCode::arity, "integrand uses x" + std::to_string(pr.integrand.max_variable()) + " but only " +
                                      std::to_string(pr.params + pr.integrate) + " variables are declared");
  const Json& cells = require(j, "cells");
  if (cells.is_string()) {
    if (cells.get<std::string>() != "auto") throw SchemaError("cells must be \"auto\" or an array");
  } else if (cells.is_array()) {
    if (pr.integrate != 1) throw SchemaError("explicit cells integrate exactly one variable");
    std::vector<ProblemCell> list;
    for (const auto& c : cells) {
      ProblemCell pc{cell_from_json(c, pr.p), std::nullopt, std::nullopt};
      if (static_cast<long>(pc.cell.arity()) != pr.params + 1)
        throw SchemaError("each cell needs params + 1 conditions");
      if (c.contains("alpha_residue")) pc.alpha_residue = integer_of(c.at("alpha_residue"), "alpha_residue");
      if (c.contains("beta_residue")) pc.beta_residue = integer_of(c.at("beta_residue"), "beta_residue");
      list.push_back(std::move(pc));
    }
    pr.cells = std::move(list);
  } else {
    throw SchemaError("cells must be \"auto\" or an array");
  }
  if (j.contains("mode")) {
    if (!j.at("mode").is_string()) throw SchemaError("mode must be a string");
    pr.mode = j.at("mode").get<std::string>();
    if (pr.mode != "concrete" && pr.mode != "symbolic") throw SchemaError("mode must be concrete or symbolic");
  }
  if (j.contains("base_points")) {
    if (!j.at("base_points").is_array()) throw SchemaError("base_points must be an array");
    for (const auto& pt : j.at("base_points")) {
      if (!pt.is_array()) throw SchemaError("each base point must be an array");
      std::vector<Rational> xs;
      for (const auto& x : pt) xs.push_back(rational_of(x, "base point coordinate"));
      if (static_cast<long>(xs.size()) != pr.params) throw SchemaError("base point length must equal params");
      pr.base_points.push_back(std::move(xs));
    }
  }
  if (j.contains("precision")) pr.precision = integer_of(j.at("precision"), "precision");
  return pr;
}

}  // namespace padic_cells
