#pragma once

// Elimination of one integration variable over cells, in concrete and
// symbolic form, and the automatic pipeline for polynomial integrands.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cells.hpp"
#include "constructible.hpp"
#include "decompose.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "padic.hpp"
#include "polynomial.hpp"
#include "rational.hpp"
#include "sums.hpp"

namespace padic_cells {

/// coeff * |(t - gamma)^a mu^{-a}|^{1/n} * v(t - gamma)^l, coeff over the base variables.
struct IntegrandTerm {
  ConstructibleExpr coeff;
  long a = 0;
  long l = 0;
};

struct CellIntegrand {
  Cell cell;
  std::vector<IntegrandTerm> terms;
  int variable = -1;  ///< integration variable; -1 means arity - 1
  /// v(alpha) and v(beta) mod n for the bounds as written (symbolic mode).
  std::optional<long> alpha_residue;
  std::optional<long> beta_residue;

  int integration_variable() const { return variable >= 0 ? variable : static_cast<int>(cell.arity()) - 1; }

  /// Merges terms with the same (a, l).
  void regroup() {
    std::vector<IntegrandTerm> merged;
    for (const auto& t : terms) {
      auto it = std::find_if(merged.begin(), merged.end(),
                             [&](const IntegrandTerm& m) { return m.a == t.a && m.l == t.l; });
      if (it != merged.end()) it->coeff = it->coeff + t.coeff;
      else merged.push_back(t);
    }
    std::erase_if(merged, [](const IntegrandTerm& t) { return t.coeff.is_zero(); });
    std::sort(merged.begin(), merged.end(),
              [](const IntegrandTerm& x, const IntegrandTerm& y) { return std::pair(x.a, x.l) < std::pair(y.a, y.l); });
    terms = std::move(merged);
  }
};

struct ConcreteValue {
  Rational value;
  bool nonintegrable = false;
};

namespace detail {

/// Sum over j of j^i x^j for j_min <= j <= j_max; nullopt when divergent.
inline std::optional<Rational> power_geometric_sum(long i, const Rational& x, std::optional<long> j_min,
                                                   std::optional<long> j_max) {
  ProgressionSum s;
  s.l = i;
  s.modulus = 1;
  s.residue = 0;
  if (j_min && j_max) {
    if (*j_min > *j_max) return Rational(0);
    s.t = x;
    s.k_min = *j_min;
    s.k_max = *j_max;
    return sum_progression(s);
  }
  if (j_min) {
    if (!sums::archimedean_below_one(x)) return std::nullopt;
    s.t = x;
    s.k_min = *j_min;
    return sum_progression(s);
  }
  if (j_max) {
    // j = -j'
    const Rational y = 1 / x;
    if (!sums::archimedean_below_one(y)) return std::nullopt;
    s.t = y;
    s.k_min = -*j_max;
    const Rational v = sum_progression(s);
    return i % 2 == 0 ? v : Rational(-v);
  }
  return std::nullopt;
}

inline void require_base_only(const CellIntegrand& ci) {
  const int t = ci.integration_variable();
  for (const auto& term : ci.terms)
    if (term.coeff.depends_on(t))
      throw Error(ErrorCode::invalid_argument, "term coefficient depends on the integration variable");
}

/// Whether a base point lies in the support (all stages of the cell but the
/// last one; a cell with a separate integration variable has no base stages).
inline bool in_support(const Cell& support, std::span<const Rational> point, long p) {
  if (point.size() < support.arity()) throw Error(ErrorCode::arity, "base point shorter than the support");
  for (std::size_t i = 0; i < support.arity(); ++i) {
    const long depth = hensel_depth(p, support.conditions[i].coset.n);
    if (!stage_membership(support.conditions[i], point.first(i), point[i], p, depth)) return false;
  }
  return true;
}

inline Cell support_of(const CellIntegrand& ci) {
  if (ci.variable >= 0) return Cell{};
  return ci.cell.base();
}

}  // namespace detail

/// Integral over the fiber of the cell above a concrete base point:
/// eps * sum_k c * p^{-a (k - v(mu))/n} k^l p^{-k} with k = v(mu) + n j.
inline ConcreteValue integrate_cell(const CellIntegrand& ci, std::span<const Rational> base, const Prime& prime) {
  const long p = prime.value();
  detail::require_base_only(ci);
  const CellCondition& cond = ci.cell.last();
  if (cond.coset.mu == 0) return {Rational(0), false};
  const ValuationRange range = fiber_valuation_range(cond, base, p);
  if (range.empty()) return {Rational(0), false};
  const long n = cond.coset.n;
  const long vmu = valuation(cond.coset.mu, p).value();
  const Rational eps = level_set_measure(cond.coset, prime).epsilon;
  std::optional<long> j_min, j_max;
  if (range.k_min) j_min = ceil_div(*range.k_min - vmu, n);
  if (range.k_max) j_max = floor_div(*range.k_max - vmu, n);
  ConcreteValue out{Rational(0), false};
  for (const auto& term : ci.terms) {
    const Rational c = eval_constructible(term.coeff, base, p);
    if (c == 0) continue;
    const Rational x = prime_power(p, -(term.a + n));
    // (vmu + n j)^l = sum_i C(l, i) vmu^{l-i} n^i j^i
    Rational s = 0;
    for (long i = 0; i <= term.l; ++i) {
      const Rational w = binomial(term.l, i) * rpow(Rational(vmu), term.l - i) * rpow(Rational(n), i);
      if (w == 0) continue;
      const auto part = detail::power_geometric_sum(i, x, j_min, j_max);
      if (!part) return {Rational(0), true};
      s += w * *part;
    }
    out.value += eps * c * prime_power(p, -vmu) * s;
  }
  return out;
}

/// Sum over a partition of cells at a base point; zero when any term is not integrable there.
inline ConcreteValue eliminate_last_variable(const std::vector<CellIntegrand>& cells, std::span<const Rational> base,
                                             const Prime& prime) {
  const long p = prime.value();
  ConcreteValue total{Rational(0), false};
  for (const auto& ci : cells) {
    if (!detail::in_support(detail::support_of(ci), base, p)) continue;
    const ConcreteValue v = integrate_cell(ci, base, prime);
    if (v.nonintegrable) return {Rational(0), true};
    total.value += v.value;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Symbolic mode.

/// v(h) = residue mod modulus.
struct ResiduePin {
  DTerm h;
  long residue = 0;
  long modulus = 1;
};

struct Piece {
  Cell support;
  std::vector<ResiduePin> pins;
  ConstructibleExpr expr;
};

/// A constructible function given piecewise on cells of the parameter space,
/// with the loci where the integrand was not integrable (value 0 there).
struct PiecewiseConstructible {
  std::vector<Piece> pieces;
  std::vector<Piece> nonintegrable;

  ConcreteValue evaluate(std::span<const Rational> point, const Prime& prime) const {
    const long p = prime.value();
    auto applies = [&](const Piece& piece) {
      if (!detail::in_support(piece.support, point, p)) return false;
      for (const auto& pin : piece.pins) {
        const Rational h = evaluate_exact(pin.h, point, p);
        if (h == 0) throw Error(ErrorCode::invalid_argument, "pinned bound vanishes at the point");
        if (mod_floor(valuation(h, p).value() - pin.residue, pin.modulus) != 0) return false;
      }
      return true;
    };
    for (const auto& piece : nonintegrable)
      if (applies(piece)) return {Rational(0), true};
    Rational total = 0;
    for (const auto& piece : pieces)
      if (applies(piece)) total += eval_constructible(piece.expr, point, p);
    return {total, false};
  }

  /// The sum of all pieces when none carries a support condition or pin.
  std::optional<ConstructibleExpr> as_expr() const {
    ConstructibleExpr sum;
    for (const auto& piece : pieces) {
      if (piece.support.arity() > 0 || !piece.pins.empty()) return std::nullopt;
      sum = sum + piece.expr;
    }
    return sum;
  }
  bool globally_nonintegrable() const {
    return std::any_of(nonintegrable.begin(), nonintegrable.end(),
                       [](const Piece& x) { return x.support.arity() == 0 && x.pins.empty(); });
  }
};

struct SymbolicOptions {
  /// Split cells by the residues of v(alpha), v(beta) mod n when not pinned.
  bool refine_residues = false;
};

namespace detail {

/// j = v(h)/n + shift, or j = shift when h is absent.
struct JBound {
  std::optional<DTerm> h;
  long shift = 0;
};

/// p^{-r} h, left as h when r = 0.
inline DTerm scaled_bound(long r, const DTerm& h, long p) {
  if (r == 0) return h;
  return DTerm::mul(DTerm::constant(prime_power(p, -r)), h);
}

/// x^{j + offset} with x = p^{-(a+n)}.
inline ConstructibleExpr x_power(const JBound& b, long offset, long a, long n, long p) {
  ConstructibleExpr c = ConstructibleExpr::constant(prime_power(p, -(a + n) * (b.shift + offset)));
  if (b.h) c = c * ConstructibleExpr::norm_of(*b.h, Rational(a + n, n));
  return c;
}

/// Q(sign * (j + offset)) as an expression in v(h).
inline ConstructibleExpr poly_at(const Polynomial& Q, const JBound& b, long offset, long sign, long n) {
  if (!b.h) return ConstructibleExpr::constant(Q(Rational(sign * (b.shift + offset))));
  const Polynomial in_v = Q.compose_affine(Rational(sign * (b.shift + offset)), Rational(sign, n));
  ConstructibleExpr out;
  for (long i = 0; i <= in_v.degree(); ++i) {
    const Rational c = in_v.coeff(static_cast<std::size_t>(i));
    if (c == 0) continue;
    out = out + (i == 0 ? ConstructibleExpr::constant(c) : c * ConstructibleExpr::valuation_of(*b.h, i));
  }
  return out;
}

inline bool is_parameter_free(const DTerm& t) { return t.max_variable() < 0; }

/// One pinned symbolic integration of a cell; returns nullopt when not integrable.
inline std::optional<ConstructibleExpr> integrate_pinned(const CellIntegrand& ci, std::optional<long> r_alpha,
                                                         std::optional<long> r_beta, const Prime& prime) {
  const long p = prime.value();
  const CellCondition& cond = ci.cell.last();
  const long n = cond.coset.n;
  const long vmu = valuation(cond.coset.mu, p).value();
  const Rational eps = level_set_measure(cond.coset, prime).epsilon;

  std::optional<JBound> j_min, j_max;
  if (auto alpha = cond.strict_lower(p)) {
    // k <= v(alpha') - 1
    if (is_parameter_free(*alpha)) {
      const Rational a = evaluate_exact(*alpha, {}, p);
      if (a == 0) throw Error(ErrorCode::invalid_argument, "alpha is zero");
      j_max = JBound{std::nullopt, floor_div(valuation(a, p).value() - 1 - vmu, n)};
    } else {
      const long r = mod_floor(*r_alpha + (cond.lower_strict ? 0 : 1), n);
      j_max = JBound{scaled_bound(r, *alpha, p), floor_div(r - 1 - vmu, n)};
    }
  }
  if (auto beta = cond.strict_upper(p)) {
    // k >= v(beta') + 1
    if (is_parameter_free(*beta)) {
      const Rational b = evaluate_exact(*beta, {}, p);
      if (b == 0) throw Error(ErrorCode::invalid_argument, "beta is zero");
      j_min = JBound{std::nullopt, ceil_div(valuation(b, p).value() + 1 - vmu, n)};
    } else {
      const long r = mod_floor(*r_beta - (cond.upper_strict ? 0 : 1), n);
      j_min = JBound{scaled_bound(r, *beta, p), ceil_div(r + 1 - vmu, n)};
    }
  }
  // Fixed finite ranges that are empty contribute nothing.
  if (j_min && j_max && !j_min->h && !j_max->h && j_min->shift > j_max->shift) return ConstructibleExpr{};

  ConstructibleExpr total;
  for (const auto& term : ci.terms) {
    const long a = term.a;
    const Polynomial P = Polynomial({Rational(vmu), Rational(n)}).pow(static_cast<unsigned>(term.l));
    ConstructibleExpr s;
    if (j_min && j_max) {
      if (a + n == 0) {
        const Polynomial F = sums::discrete_antiderivative(P);
        s = poly_at(F, *j_max, 1, 1, n) - poly_at(F, *j_min, 0, 1, n);
      } else {
        const Rational x = prime_power(p, -(a + n));
        const Polynomial G = sums::tail_polynomial(P, x);
        s = x_power(*j_min, 0, a, n, p) * poly_at(G, *j_min, 0, 1, n) -
            x_power(*j_max, 1, a, n, p) * poly_at(G, *j_max, 1, 1, n);
      }
    } else if (j_min) {
      if (a + n <= 0) return std::nullopt;
      const Rational x = prime_power(p, -(a + n));
      s = x_power(*j_min, 0, a, n, p) * poly_at(sums::tail_polynomial(P, x), *j_min, 0, 1, n);
    } else if (j_max) {
      if (a + n >= 0) return std::nullopt;
      const Rational y = prime_power(p, a + n);
      const Polynomial reflected = P.compose_affine(Rational(0), Rational(-1));
      s = x_power(*j_max, 0, a, n, p) * poly_at(sums::tail_polynomial(reflected, y), *j_max, 0, -1, n);
    } else {
      return std::nullopt;
    }
    total = total + (eps * prime_power(p, -vmu)) * term.coeff * s;
  }
  return total;
}

}  // namespace detail

/// Symbolic integral of one cell as a function of the base variables.
inline PiecewiseConstructible integrate_cell_symbolic(const CellIntegrand& ci, const Prime& prime,
                                                      const SymbolicOptions& options = {}) {
  const long p = prime.value();
  detail::require_base_only(ci);
  PiecewiseConstructible out;
  const CellCondition& cond = ci.cell.last();
  if (cond.coset.mu == 0 || ci.terms.empty()) return out;
  const long n = cond.coset.n;
  const Cell support = detail::support_of(ci);

  auto candidates = [&](const std::optional<DTerm>& bound, std::optional<long> pinned,
                        const char* which) -> std::vector<std::optional<long>> {
    if (!bound || detail::is_parameter_free(*bound)) return {std::nullopt};
    if (n == 1) return {0L};
    if (pinned) return {mod_floor(*pinned, n)};
    if (!options.refine_residues)
      throw Error(ErrorCode::residues_not_fixed, std::string("v(") + which + ") mod " + std::to_string(n) + " is not fixed");
    std::vector<std::optional<long>> all;
    for (long r = 0; r < n; ++r) all.push_back(r);
    return all;
  };
  const auto alphas = candidates(cond.lower, ci.alpha_residue, "alpha");
  const auto betas = candidates(cond.upper, ci.beta_residue, "beta");
  for (const auto& ra : alphas)
    for (const auto& rb : betas) {
      Piece piece{support, {}, {}};
      if (ra && n > 1) piece.pins.push_back({*cond.lower, *ra, n});
      if (rb && n > 1) piece.pins.push_back({*cond.upper, *rb, n});
      auto value = detail::integrate_pinned(ci, ra, rb, prime);
      if (!value) out.nonintegrable.push_back(std::move(piece));
      else if (!value->is_zero()) {
        piece.expr = std::move(*value);
        out.pieces.push_back(std::move(piece));
      }
    }
  (void)p;
  return out;
}

inline PiecewiseConstructible eliminate_last_variable_symbolic(const std::vector<CellIntegrand>& cells,
                                                               const Prime& prime,
                                                               const SymbolicOptions& options = {}) {
  PiecewiseConstructible out;
  for (const auto& ci : cells) {
    auto part = integrate_cell_symbolic(ci, prime, options);
    for (auto& piece : part.pieces) out.pieces.push_back(std::move(piece));
    for (auto& piece : part.nonintegrable) out.nonintegrable.push_back(std::move(piece));
  }
  if (out.globally_nonintegrable()) out.pieces.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Automatic pipeline: integrands whose factors involving an integration
// variable are univariate polynomials in it.

struct AutoResult {
  ConstructibleExpr value;
  bool nonintegrable = false;
};

namespace detail {

struct FactorIndex {
  std::vector<DTerm> terms;
  std::vector<Polynomial> polys;

  std::size_t index_of(const DTerm& h, int t) {
    for (std::size_t i = 0; i < terms.size(); ++i)
      if (terms[i] == h) return i;
    if (h.max_variable() != t)
      throw Error(ErrorCode::invalid_argument, "factor " + print(h) + " mixes the integration variable with others");
    auto poly = to_polynomial(h, t);
    if (!poly) throw Error(ErrorCode::invalid_argument, "factor " + print(h) + " is not a polynomial in x" + std::to_string(t));
    if (poly->is_zero()) throw Error(ErrorCode::invalid_argument, "factor " + print(h) + " is identically zero");
    terms.push_back(h);
    polys.push_back(*poly);
    return terms.size() - 1;
  }
};

/// Integrand terms on one decomposed cell.
inline std::vector<IntegrandTerm> prepare_on_cell(const ConstructibleExpr& f, int t, FactorIndex& index,
                                                  const DecomposedCell& dc, long p) {
  const CellCondition& cond = dc.cell.last();
  const long n = cond.coset.n;
  const long vmu = valuation(cond.coset.mu, p).value();
  std::vector<IntegrandTerm> out;
  for (const auto& term : f.terms()) {
    ConstructibleTerm rest{term.coeff, {}, {}};
    Polynomial in_k = Polynomial::constant(1);
    Rational total_a = 0;
    for (const auto& vf : term.val_factors) {
      if (!vf.h.depends_on(t)) {
        rest.val_factors.push_back(vf);
        continue;
      }
      const FactorForm& form = dc.forms[index.index_of(vf.h, t)];
      // v(h) = v(delta) + a (k - v(mu)) / n
      const Rational a_over_n(form.a, n);
      const Polynomial vh({valuation(form.delta, p).value() - a_over_n * vmu, a_over_n});
      in_k = in_k * vh.pow(static_cast<unsigned>(vf.exponent));
    }
    for (const auto& nf : term.norm_factors) {
      if (!nf.h.depends_on(t)) {
        rest.norm_factors.push_back(nf);
        continue;
      }
      const FactorForm& form = dc.forms[index.index_of(nf.h, t)];
      rest.coeff *= norm_power(valuation(form.delta, p), nf.exponent, p);
      total_a += nf.exponent * form.a;
    }
    total_a.canonicalize();
    if (total_a.get_den() != 1)
      throw Error(ErrorCode::invalid_argument, "non-integral exponent " + to_string(total_a) + " at a root");
    const ConstructibleExpr coeff({rest});
    for (long l = 0; l <= in_k.degree(); ++l) {
      const Rational c = in_k.coeff(static_cast<std::size_t>(l));
      if (c == 0) continue;
      out.push_back({c * coeff, total_a.get_num().get_si(), l});
    }
  }
  return out;
}

}  // namespace detail

/// Eliminates variable t of f over Z_p.
inline AutoResult eliminate_auto(const ConstructibleExpr& f, int t, const Prime& prime, long precision_N) {
  const long p = prime.value();
  detail::FactorIndex index;
  for (const auto& term : f.terms()) {
    for (const auto& vf : term.val_factors)
      if (vf.h.depends_on(t)) index.index_of(vf.h, t);
    for (const auto& nf : term.norm_factors)
      if (nf.h.depends_on(t)) index.index_of(nf.h, t);
  }
  if (index.polys.empty()) return {f, false};
  const auto decomposition = decompose_functions(index.polys, prime, precision_N);
  std::vector<CellIntegrand> cells;
  for (const auto& dc : decomposition) {
    if (dc.cell.last().is_point()) continue;
    CellIntegrand ci;
    ci.cell = dc.cell;
    ci.variable = t;
    ci.terms = detail::prepare_on_cell(f, t, index, dc, p);
    ci.regroup();
    cells.push_back(std::move(ci));
  }
  const auto result = eliminate_last_variable_symbolic(cells, prime);
  if (result.globally_nonintegrable()) return {ConstructibleExpr{}, true};
  auto expr = result.as_expr();
  if (!expr) throw Error(ErrorCode::internal, "automatic elimination produced a piecewise result");
  return {std::move(*expr), false};
}

/// Integrates variables first_variable.. first_variable + count - 1 of f over
/// Z_p^count, innermost (highest index) first.
inline AutoResult integrate_auto(const ConstructibleExpr& f, int first_variable, int count, const Prime& prime,
                                 long precision_N = 48) {
  AutoResult acc{f, false};
  for (int t = first_variable + count - 1; t >= first_variable; --t) {
    acc = eliminate_auto(acc.value, t, prime, precision_N);
    if (acc.nonintegrable) return acc;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Explicit cells: integrand factors in the integration variable must be
// v(t - gamma) or |t - gamma|^r for the cell's own center.

namespace detail {

/// Compares h with t - gamma at a few fixed rational points.
inline bool is_center_offset(const DTerm& h, const DTerm& gamma, int t, long p) {
  static const long samples[][2] = {{3, 7}, {-5, 11}, {17, 13}, {2, 9}, {-29, 5}, {41, 3}, {7, 19}, {-13, 23}};
  const int arity = std::max(h.max_variable(), std::max(gamma.max_variable(), t)) + 1;
  for (std::size_t s = 0; s < std::size(samples); ++s) {
    std::vector<Rational> point;
    for (int i = 0; i < arity; ++i) point.emplace_back(samples[(s + static_cast<std::size_t>(i)) % std::size(samples)][0] + i,
                                                       samples[s][1]);
    for (auto& x : point) x.canonicalize();
    const Rational lhs = evaluate_exact(h, point, p);
    const Rational rhs = point[static_cast<std::size_t>(t)] - evaluate_exact(gamma, point, p);
    if (lhs != rhs) return false;
  }
  return true;
}

}  // namespace detail

/// Builds the prepared integrand of f on a cell whose last variable is integrated.
inline CellIntegrand prepare_explicit(const ConstructibleExpr& f, const Cell& cell, const Prime& prime) {
  const long p = prime.value();
  const CellCondition& cond = cell.last();
  const int t = static_cast<int>(cell.arity()) - 1;
  const auto* gamma = std::get_if<DTerm>(&cond.center);
  if (!gamma) throw Error(ErrorCode::invalid_argument, "explicit cells need expression centers");
  const long n = cond.coset.n;
  const long vmu = cond.coset.mu == 0 ? 0 : valuation(cond.coset.mu, p).value();
  CellIntegrand ci;
  ci.cell = cell;
  for (const auto& term : f.terms()) {
    ConstructibleTerm rest{term.coeff, {}, {}};
    long l = 0;
    Rational r_total = 0;
    for (const auto& vf : term.val_factors) {
      if (!vf.h.depends_on(t)) {
        rest.val_factors.push_back(vf);
        continue;
      }
      if (!detail::is_center_offset(vf.h, *gamma, t, p))
        throw Error(ErrorCode::invalid_argument, "v(" + print(vf.h) + ") is not v(t - center) on this cell");
      l += vf.exponent;
    }
    for (const auto& nf : term.norm_factors) {
      if (!nf.h.depends_on(t)) {
        rest.norm_factors.push_back(nf);
        continue;
      }
      if (!detail::is_center_offset(nf.h, *gamma, t, p))
        throw Error(ErrorCode::invalid_argument, "|" + print(nf.h) + "| is not |t - center| on this cell");
      r_total += nf.exponent;
    }
    // |t - gamma|^r = p^{-r v(mu)} |(t - gamma)^{rn} mu^{-rn}|^{1/n}
    Rational a = r_total * n;
    a.canonicalize();
    Rational shift = r_total * vmu;
    shift.canonicalize();
    if (a.get_den() != 1 || shift.get_den() != 1)
      throw Error(ErrorCode::invalid_argument, "norm exponent incompatible with the cell coset");
    rest.coeff *= prime_power(p, -shift.get_num().get_si());
    ci.terms.push_back({ConstructibleExpr({rest}), a.get_num().get_si(), l});
  }
  ci.regroup();
  return ci;
}

}  // namespace padic_cells
