// padic_cells: command-line front end.
//
// Exit codes: 0 success, 1 parse or schema error, 2 precision exhausted,
// 3 verification gap above the bound.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "padic_cells/json_io.hpp"
#include "padic_cells/padic_cells.hpp"

using namespace padic_cells;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitPrecision = 2;
constexpr int kExitVerify = 3;

struct Globals {
  long p = 0;
  long precision = 48;
  unsigned long long budget = 0;
  bool pretty = false;
  bool json = false;
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::invalid_argument, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path), nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::parse, std::string("invalid JSON: ") + e.what());
  }
}

void emit(const Json& j, const Globals& g, const std::string& out_path = "") {
  const std::string text = g.pretty ? j.dump(2) : j.dump();
  if (out_path.empty()) {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw Error(ErrorCode::invalid_argument, "cannot write " + out_path);
  out << text << "\n";
}

unsigned long long budget_of(const Globals& g) {
  if (g.budget > 0) return g.budget;
  if (const char* env = std::getenv("PADIC_CELLS_BUDGET")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorCode::invalid_argument, "PADIC_CELLS_BUDGET is not a number");
    }
  }
  return OracleOptions{}.budget;
}

Polynomial polynomial_from_text(const std::string& text) {
  const DTerm t = parse_dterm(text);
  if (t.max_variable() > 0) throw Error(ErrorCode::arity, "f must be a polynomial in x0 only");
  auto poly = to_polynomial(t, 0);
  if (!poly) throw Error(ErrorCode::invalid_argument, "f is not a polynomial");
  if (poly->is_zero()) throw Error(ErrorCode::invalid_argument, "f identically zero");
  return *poly;
}

std::vector<Rational> parse_point(const std::string& text) {
  std::vector<Rational> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_rational(item));
  return out;
}

long prime_of(const Globals& g, std::optional<long> from_file) {
  if (g.p > 0) return g.p;
  if (from_file) return *from_file;
  throw Error(ErrorCode::invalid_argument, "prime not given (use --p)");
}

// --------------------------------------------------------------------------

struct VerifyOutcome {
  Json report;
  bool pass = true;
};

VerifyOutcome compare(const Rational& symbolic, const OracleResult& oracle, const std::optional<Rational>& sup) {
  VerifyOutcome out;
  const auto bound = oracle.sampled ? std::optional<Rational>() : oracle.bound(sup);
  const Rational gap = abs(symbolic - oracle.value);
  out.pass = bound.has_value() && gap <= *bound;
  out.report["symbolic"] = to_string(symbolic);
  out.report["oracle"] = to_string(oracle.value);
  out.report["bound"] = bound ? Json(to_string(*bound)) : Json(nullptr);
  out.report["pass"] = out.pass;
  out.report["resolution"] = oracle.resolution;
  out.report["boundary_mass"] = to_string(oracle.boundary_mass);
  out.report["sampled"] = oracle.sampled;
  return out;
}

struct IntegrateRun {
  Json output;
  bool verify_failed = false;
};

IntegrateRun run_integrate(const Problem& pr, const Globals& g, const std::string& mode_override,
                           const std::optional<std::vector<Rational>>& point_override, long verify_N,
                           const std::optional<Rational>& sup) {
  const Prime prime(prime_of(g, pr.p));
  const long precision = pr.precision.value_or(g.precision);
  const std::string mode = mode_override.empty() ? pr.mode : mode_override;
  std::vector<std::vector<Rational>> points = pr.base_points;
  if (point_override) points = {*point_override};
  if (points.empty() && pr.params == 0) points.push_back({});
  for (const auto& pt : points)
    if (static_cast<long>(pt.size()) != pr.params) throw Error(ErrorCode::arity, "base point length must equal params");

  IntegrateRun run;
  Json& out = run.output;
  out["p"] = prime.value();
  out["mode"] = mode;
  out["integrand"] = pr.integrand.to_string();

  // Symbolic answer as a function of the base point.
  std::function<ConcreteValue(const std::vector<Rational>&)> value_at;
  std::vector<Cell> oracle_cells;
  bool oracle_has_param_stages = true;
  if (!pr.cells) {
    const AutoResult r = integrate_auto(pr.integrand, static_cast<int>(pr.params), static_cast<int>(pr.integrate),
                                        prime, precision);
    if (mode == "symbolic") {
      out["expr"] = r.value.to_string();
      out["nonintegrable"] = r.nonintegrable;
    }
    value_at = [r, prime](const std::vector<Rational>& pt) -> ConcreteValue {
      if (r.nonintegrable) return {Rational(0), true};
      return {eval_constructible(r.value, pt, prime.value()), false};
    };
    Cell box;
    for (long i = 0; i < pr.integrate; ++i) box.conditions.push_back(ball_cell(0, 0, prime.value()));
    oracle_cells.push_back(box);
    oracle_has_param_stages = false;
  } else {
    std::vector<CellIntegrand> cis;
    for (const auto& pc : *pr.cells) {
      CellIntegrand ci = prepare_explicit(pr.integrand, pc.cell, prime);
      ci.alpha_residue = pc.alpha_residue;
      ci.beta_residue = pc.beta_residue;
      cis.push_back(std::move(ci));
      oracle_cells.push_back(pc.cell);
    }
    if (mode == "symbolic") {
      SymbolicOptions opts;
      opts.refine_residues = true;
      const auto pw = eliminate_last_variable_symbolic(cis, prime, opts);
      out["piecewise"] = piecewise_json(pw);
      out["nonintegrable"] = pw.globally_nonintegrable();
      value_at = [pw, prime](const std::vector<Rational>& pt) { return pw.evaluate(pt, prime); };
    } else {
      value_at = [cis, prime](const std::vector<Rational>& pt) { return eliminate_last_variable(cis, pt, prime); };
    }
  }

  Json results = Json::array();
  for (const auto& pt : points) {
    Json r;
    Json coords = Json::array();
    for (const auto& x : pt) coords.push_back(to_string(x));
    r["point"] = std::move(coords);
    const ConcreteValue v = value_at(pt);
    r["value"] = to_string(v.value);
    r["nonintegrable"] = v.nonintegrable;
    if (verify_N > 0) {
      if (v.nonintegrable) {
        r["verify"] = Json{{"skipped", "nonintegrable"}};
      } else {
        OracleOptions opts;
        opts.budget = budget_of(g);
        opts.parameters = pt;
        opts.domain_has_parameter_stages = oracle_has_param_stages;
        const OracleResult o = oracle_integrate(pr.integrand, oracle_cells, prime, verify_N, opts);
        auto cmp = compare(v.value, o, sup);
        if (!cmp.pass) run.verify_failed = true;
        r["verify"] = std::move(cmp.report);
      }
    }
    results.push_back(std::move(r));
  }
  out["results"] = std::move(results);
  return run;
}

int report_error(const Error& e) {
  Json j;
  j["error"] = to_string(e.code());
  j["message"] = e.what();
  if (const auto* pe = dynamic_cast<const ParseError*>(&e)) j["span"] = Json::array({pe->span().start, pe->span().end});
  std::cerr << j.dump() << "\n";
  return e.code() == ErrorCode::precision_exhausted ? kExitPrecision : kExitParse;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic p-adic integration over cells"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--p", g.p, "prime p (overrides the problem file)");
  app.add_option("--precision", g.precision, "subdivision depth limit for decomposition");
  app.add_option("--budget", g.budget, "oracle class budget (default 10^7, or PADIC_CELLS_BUDGET)");
  app.add_flag("--json", g.json, "compact JSON output (default)");
  app.add_flag("--pretty", g.pretty, "indented JSON output");

  // decompose
  auto* dec = app.add_subcommand("decompose", "cells adapted to a polynomial on Z_p");
  std::string dec_path, dec_f, dec_out;
  long dec_verify = 6;
  dec->add_option("path", dec_path, "JSON file {\"version\":1,\"p\":..,\"f\":\"...\"}");
  dec->add_option("--f", dec_f, "polynomial in x0 instead of a file");
  dec->add_option("--out", dec_out, "write JSON here instead of stdout");
  dec->add_option("--verify-N", dec_verify, "check the result on residues mod p^N (0 disables)");

  // integrate
  auto* integ = app.add_subcommand("integrate", "integrate a problem file");
  std::string int_path, int_mode, int_point, int_sup;
  long int_verify = 0;
  integ->add_option("path", int_path, "problem JSON")->required();
  integ->add_option("--mode", int_mode, "concrete or symbolic")->check(CLI::IsMember({"concrete", "symbolic"}));
  integ->add_option("--point", int_point, "base point a,b,... (overrides base_points)");
  integ->add_option("--verify-N", int_verify, "compare with the oracle at resolution N");
  integ->add_option("--sup", int_sup, "bound for |integrand| used when the oracle cannot derive one");

  // verify
  auto* ver = app.add_subcommand("verify", "symbolic result against the oracle");
  std::string ver_path, ver_point, ver_sup;
  long ver_N = 6;
  ver->add_option("path", ver_path, "problem JSON")->required();
  ver->add_option("--N", ver_N, "oracle resolution");
  ver->add_option("--point", ver_point, "base point a,b,...");
  ver->add_option("--sup", ver_sup, "fallback bound for |integrand|");

  // zeta
  auto* zet = app.add_subcommand("zeta", "Igusa zeta function of a polynomial");
  std::string zeta_f;
  long zeta_poincare = 0;
  zet->add_option("f", zeta_f, "polynomial in x0")->required();
  zet->add_option("--check-poincare", zeta_poincare, "cross-check N_i for i <= I");

  // measure
  auto* mea = app.add_subcommand("measure", "Haar measure of a cell fiber");
  std::string mea_path, mea_point;
  long mea_verify = 0;
  mea->add_option("path", mea_path, "JSON {\"version\":1,\"p\":..,\"cell\":{...}}")->required();
  mea->add_option("--point", mea_point, "base point a,b,...");
  mea->add_option("--verify-N", mea_verify, "compare with the oracle at resolution N");

  // parse
  auto* par = app.add_subcommand("parse", "syntax check");
  std::string par_text;
  bool par_constructible = false;
  par->add_option("text", par_text, "expression")->required();
  par->add_flag("--constructible", par_constructible, "parse a constructible function");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    if (*dec) {
      std::optional<long> file_p;
      std::string text = dec_f;
      if (!dec_path.empty()) {
        const Json j = read_json(dec_path);
        if (!j.is_object() || !j.contains("f") || !j.at("f").is_string()) throw SchemaError("missing field \"f\"");
        text = j.at("f").get<std::string>();
        if (j.contains("p")) file_p = json_detail::integer_of(j.at("p"), "p");
      }
      if (text.empty()) throw SchemaError("no polynomial given");
      const Polynomial f = polynomial_from_text(text);
      const Prime prime(prime_of(g, file_p));
      const auto terms = decompose_univariate(f, prime, g.precision);
      Json out;
      out["p"] = prime.value();
      out["f"] = f.to_string("x0");
      const Json body = prepared_terms_json(terms);
      out["cells"] = body["cells"];
      out["terms"] = body["terms"];
      bool ok = true;
      if (dec_verify > 0) {
        const auto report = verify_prepared(terms, f, prime, dec_verify);
        out["verify"] = verification_json(report);
        ok = report.pass;
      }
      emit(out, g, dec_out);
      return ok ? kExitOk : kExitVerify;
    }
    if (*integ || *ver) {
      const bool verify_cmd = static_cast<bool>(*ver);
      const Problem pr = problem_from_json(read_json(verify_cmd ? ver_path : int_path));
      const std::string& point_text = verify_cmd ? ver_point : int_point;
      std::optional<std::vector<Rational>> point;
      if (!point_text.empty()) point = parse_point(point_text);
      const std::string& sup_text = verify_cmd ? ver_sup : int_sup;
      std::optional<Rational> sup;
      if (!sup_text.empty()) sup = parse_rational(sup_text);
      const long N = verify_cmd ? ver_N : int_verify;
      IntegrateRun run = run_integrate(pr, g, verify_cmd ? "" : int_mode, point, N, sup);
      if (verify_cmd) {
        Json reports = Json::array();
        for (const auto& r : run.output["results"])
          reports.push_back(r.contains("verify") ? r["verify"] : Json{{"pass", false}});
        emit(reports.size() == 1 ? reports[0] : reports, g);
      } else {
        emit(run.output, g);
      }
      return run.verify_failed ? kExitVerify : kExitOk;
    }
    if (*zet) {
      const Polynomial f = polynomial_from_text(zeta_f);
      const Prime prime(prime_of(g, std::nullopt));
      const ZetaRational z = igusa_zeta(f, prime, g.precision);
      Json out;
      out["p"] = prime.value();
      out["f"] = f.to_string("x0");
      out["zeta"] = zeta_json(z);
      bool ok = true;
      if (zeta_poincare > 0) {
        const auto report = poincare_check(f, prime, zeta_poincare, g.precision);
        Json pc;
        Json counted = Json::array();
        for (const auto& c : report.counted) counted.push_back(c.get_str());
        Json predicted = Json::array();
        for (const auto& c : report.predicted) predicted.push_back(to_string(c));
        pc["counted"] = std::move(counted);
        pc["predicted"] = std::move(predicted);
        pc["identity"] = report.identity;
        pc["pass"] = report.pass;
        out["poincare"] = std::move(pc);
        ok = report.pass;
      }
      emit(out, g);
      return ok ? kExitOk : kExitVerify;
    }
    if (*mea) {
      const Json j = read_json(mea_path);
      std::optional<long> file_p;
      if (j.is_object() && j.contains("p")) file_p = json_detail::integer_of(j.at("p"), "p");
      const Prime prime(prime_of(g, file_p));
      const Cell cell = cell_from_json(json_detail::require(j, "cell"), prime.value());
      std::vector<Rational> base;
      if (!mea_point.empty()) base = parse_point(mea_point);
      else if (j.contains("base_point"))
        for (const auto& x : j.at("base_point")) base.push_back(json_detail::rational_of(x, "base_point"));
      if (base.size() + 1 != cell.arity()) throw Error(ErrorCode::arity, "base point length must be arity - 1");
      Json out;
      out["p"] = prime.value();
      bool in_base = true;
      if (cell.arity() > 1) in_base = base_membership(cell, base, prime.value());
      const Rational m = in_base ? fiber_measure(cell.last(), base, prime) : Rational(0);
      out["measure"] = to_string(m);
      bool ok = true;
      if (mea_verify > 0) {
        OracleOptions opts;
        opts.budget = budget_of(g);
        opts.parameters = base;
        const auto o = oracle_measure(cell, prime, mea_verify, opts);
        auto cmp = compare(m, o, Rational(1));
        ok = cmp.pass;
        out["verify"] = std::move(cmp.report);
      }
      emit(out, g);
      return ok ? kExitOk : kExitVerify;
    }
    if (*par) {
      Json out;
      if (par_constructible) out["constructible"] = parse_constructible(par_text).to_string();
      else out["dterm"] = print(parse_dterm(par_text));
      out["ok"] = true;
      emit(out, g);
      return kExitOk;
    }
  } catch (const Error& e) {
    return report_error(e);
  }
  return kExitOk;
}
