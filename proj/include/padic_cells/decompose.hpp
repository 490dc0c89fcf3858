#pragma once

// Univariate cell decomposition of Z_p adapted to polynomials, by ball
// subdivision and Hensel certification of simple roots.

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cells.hpp"
#include "error.hpp"
#include "padic.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace padic_cells {

struct HenselRoot {
  Rational approx;
  long multiplicity = 1;
  long precision = 0;  ///< f(approx) = 0 mod p^precision
  bool certified = false;
};

/// Newton iteration from a seed with v(f(seed)) > 2 v(f'(seed)).
inline HenselRoot hensel_lift(const Polynomial& f, const Rational& seed, const Prime& prime, long target_N) {
  const long p = prime.value();
  if (f.is_zero()) throw Error(ErrorCode::invalid_argument, "zero polynomial");
  const Polynomial g = f.primitive();
  const Polynomial dg = g.derivative();
  Rational x = seed;
  const ExtendedInt vf = valuation(g(x), p);
  const ExtendedInt vd = valuation(dg(x), p);
  if (vd.is_infinite() || !(vf > ExtendedInt(2 * vd.value())))
    throw Error(ErrorCode::hensel_failed, "Hensel condition fails at seed " + to_string(seed));
  const long e = vd.value();
  for (int step = 0; step < 64; ++step) {
    const Rational fx = g(x);
    if (fx == 0 || valuation(fx, p) >= ExtendedInt(target_N)) return {x, 1, target_N, true};
    const Rational next = x - fx / dg(x);
    x = Rational(residue(next, p, target_N + e + 1));
  }
  throw Error(ErrorCode::hensel_failed, "Newton iteration did not converge");
}

/// How |f| looks on one cell: |f(t)| = |delta| |(t - gamma)^a mu^{-a}|^{1/n}.
struct FactorForm {
  Rational delta;
  long a = 0;
};

struct DecomposedCell {
  Cell cell;
  std::vector<FactorForm> forms;  ///< one per input polynomial
};

/// One prepared term delta |(t - gamma)^a mu^{-a}|^{1/n} v(t - gamma)^l of |f|,
/// understood as |delta| times the rest.
struct PreparedTerm {
  Cell cell;
  Rational delta;
  long a = 0;
  long l = 0;
};

namespace detail {

/// Pairwise coprime squarefree polynomials b_j with every input f = c_f prod b_j^{e_fj}.
/// Rational roots are split off as monic linear factors.
struct CoprimeBasis {
  std::vector<Polynomial> basis;
  std::vector<std::vector<long>> exponents;  ///< [input][basis index]
  std::vector<Rational> constants;           ///< c_f
};

inline void refine_into(std::vector<Polynomial>& basis, Polynomial q) {
  q = q.monic();
  for (std::size_t i = 0; i < basis.size() && q.degree() >= 1; ++i) {
    const Polynomial g = gcd(basis[i], q);
    if (g.degree() < 1) continue;
    Polynomial rest = exact_quotient(basis[i], g);
    basis[i] = g;
    q = exact_quotient(q, g);
    // q may still share factors with g (multiplicity); strip them.
    while (true) {
      const Polynomial h = gcd(q, g);
      if (h.degree() < 1) break;
      q = exact_quotient(q, h);
    }
    if (rest.degree() >= 1) refine_into(basis, rest);
  }
  if (q.degree() >= 1) basis.push_back(q);
}

inline CoprimeBasis coprime_basis(const std::vector<Polynomial>& fs) {
  CoprimeBasis out;
  std::vector<Polynomial> pieces;
  for (const auto& f : fs)
    for (const auto& [mult, s] : squarefree_decomposition(f)) {
      Polynomial rest = s;
      for (const auto& r : rational_roots(s)) {
        pieces.push_back(Polynomial::linear(r));
        rest = exact_quotient(rest, Polynomial::linear(r));
      }
      if (rest.degree() >= 1) pieces.push_back(rest.monic());
    }
  for (auto& q : pieces) refine_into(out.basis, q);
  std::sort(out.basis.begin(), out.basis.end(), [](const Polynomial& a, const Polynomial& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    return a.to_string("t") < b.to_string("t");
  });
  for (const auto& f : fs) {
    std::vector<long> exps;
    Polynomial rest = f;
    Polynomial product = Polynomial::constant(1);
    for (const auto& b : out.basis) {
      long e = 0;
      while (true) {
        auto [q, r] = rest.divmod(b);
        if (!r.is_zero()) break;
        rest = q;
        ++e;
      }
      exps.push_back(e);
      product = product * b.pow(static_cast<unsigned>(e));
    }
    if (rest.degree() != 0) throw Error(ErrorCode::internal, "coprime basis does not factor the input");
    out.exponents.push_back(std::move(exps));
    out.constants.push_back(f.leading() / product.leading());
  }
  return out;
}

/// Roots in F_p of the reduction of a p-integral polynomial (as residues 0..p-1).
inline std::vector<long> reduction_roots(const Polynomial& h, long p) {
  std::vector<long> roots;
  std::vector<long> coeffs;
  for (const auto& c : h.coeffs()) coeffs.push_back(residue(c, p, 1).get_si());
  for (long y = 0; y < p; ++y) {
    long acc = 0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc * y + *it) % p;
    if (acc == 0) roots.push_back(y);
  }
  return roots;
}

inline long reduction_degree(const Polynomial& h, long p) {
  for (long i = h.degree(); i >= 0; --i)
    if (residue(h.coeff(static_cast<std::size_t>(i)), p, 1) != 0) return i;
  return -1;
}

struct BallView {
  Polynomial scaled;  ///< b(c + p^r y) / p^m
  long m = 0;
  std::vector<long> roots;
  long reduced_degree = 0;
};

inline BallView view_on_ball(const Polynomial& b, const Rational& c, long r, long p) {
  BallView v;
  const Polynomial g = b.compose_affine(c, prime_power(p, r));
  v.m = min_coefficient_valuation(g, p).value();
  v.scaled = prime_power(p, -v.m) * g;
  v.roots = reduction_roots(v.scaled, p);
  v.reduced_degree = reduction_degree(v.scaled, p);
  return v;
}

}  // namespace detail

/// Decomposes the ball c0 + p^{r0} Z_p into cells on which every input has a
/// prepared norm. Children of a ball are visited in residue order.
inline std::vector<DecomposedCell> decompose_functions(const std::vector<Polynomial>& fs, const Prime& prime,
                                                       long precision_N, const Rational& c0 = 0, long r0 = 0) {
  const long p = prime.value();
  for (const auto& f : fs)
    if (f.is_zero()) throw Error(ErrorCode::invalid_argument, "f identically zero");
  const detail::CoprimeBasis basis = detail::coprime_basis(fs);
  std::vector<DecomposedCell> out;

  struct Ball {
    Rational c;
    long r;
  };
  std::vector<Ball> stack{{c0, r0}};
  while (!stack.empty()) {
    const Ball ball = stack.back();
    stack.pop_back();
    std::vector<detail::BallView> views;
    std::vector<std::size_t> with_roots;
    for (std::size_t j = 0; j < basis.basis.size(); ++j) {
      views.push_back(detail::view_on_ball(basis.basis[j], ball.c, ball.r, p));
      if (!views.back().roots.empty()) with_roots.push_back(j);
    }
    if (with_roots.empty()) {
      DecomposedCell dc;
      dc.cell.conditions.push_back(ball_cell(ball.c, ball.r, p));
      for (std::size_t i = 0; i < fs.size(); ++i) dc.forms.push_back({fs[i](ball.c), 0});
      out.push_back(std::move(dc));
      continue;
    }
    if (with_roots.size() == 1 && views[with_roots[0]].reduced_degree == 1) {
      const std::size_t j = with_roots[0];
      const Polynomial& b = basis.basis[j];
      Center center = DTerm::constant(0);
      if (b.degree() == 1) center = DTerm::constant(-b.coeff(0) / b.coeff(1));
      else center = RootCenter(b, ball.c, ball.r, p);
      // |b(t)| = p^{-(m - r)} |t - gamma|; the other basis factors are constant in norm.
      std::vector<Rational> delta_b;
      for (std::size_t k = 0; k < basis.basis.size(); ++k)
        delta_b.push_back(k == j ? prime_power(p, views[k].m - ball.r) : basis.basis[k](ball.c));
      DecomposedCell ring;
      ring.cell.conditions.push_back(punctured_ball(center, ball.r, p));
      DecomposedCell point;
      point.cell.conditions.push_back(point_cell(center));
      for (std::size_t i = 0; i < fs.size(); ++i) {
        Rational delta = basis.constants[i];
        for (std::size_t k = 0; k < basis.basis.size(); ++k)
          delta *= rpow(delta_b[k], basis.exponents[i][k]);
        const long a = basis.exponents[i][j];
        ring.forms.push_back({delta, a});
        point.forms.push_back({a > 0 ? Rational(0) : delta, 0});
      }
      out.push_back(std::move(point));
      out.push_back(std::move(ring));
      continue;
    }
    if (ball.r + 1 > precision_N)
      throw Error(ErrorCode::precision_exhausted,
                  "subdivision reached precision " + std::to_string(precision_N) + " at ball " + to_string(ball.c));
    const Rational step = prime_power(p, ball.r);
    for (long y = p - 1; y >= 0; --y) stack.push_back({ball.c + step * y, ball.r + 1});
  }
  return out;
}

inline std::vector<PreparedTerm> decompose_univariate(const Polynomial& f, const Prime& prime, long precision_N,
                                                      const Rational& c0 = 0, long r0 = 0) {
  std::vector<PreparedTerm> terms;
  for (auto& dc : decompose_functions({f}, prime, precision_N, c0, r0))
    terms.push_back({std::move(dc.cell), dc.forms[0].delta, dc.forms[0].a, 0});
  return terms;
}

// ---------------------------------------------------------------------------

struct VerificationReport {
  bool pass = true;
  long checked = 0;       ///< representatives inside the domain
  long uncovered = 0;     ///< in no cell
  long overlapping = 0;   ///< in more than one cell
  long mismatched = 0;    ///< |f| differs from the prepared value
  std::optional<Rational> counterexample;
  std::string message;
};

/// Prepared value |delta| |(t - gamma)^a mu^{-a}|^{1/n} v(t - gamma)^l at t.
inline Rational prepared_value(const PreparedTerm& term, const Rational& t, long p) {
  const CellCondition& cond = term.cell.last();
  const Rational d = norm(term.delta, p);
  if (cond.coset.mu == 0) return term.a == 0 && term.l == 0 ? d : Rational(0);
  const Rational u = center_offset(cond.center, {}, t, p, 1);
  const long k = valuation(u, p).value();
  const long vmu = valuation(cond.coset.mu, p).value();
  const long num = term.a * (k - vmu);
  if (mod_floor(num, cond.coset.n) != 0) throw Error(ErrorCode::internal, "exponent integrality violated");
  return d * prime_power(p, -num / cond.coset.n) * rpow(Rational(k), term.l);
}

/// Checks partition and |f| = prepared value at every representative 0..p^N - 1
/// lying in the domain (by default Z_p).
inline VerificationReport verify_prepared(const std::vector<PreparedTerm>& terms, const Polynomial& f,
                                          const Prime& prime, long N, const std::optional<Cell>& domain = {}) {
  const long p = prime.value();
  VerificationReport report;
  const Integer size = ipow(Integer(p), static_cast<unsigned long>(N));
  for (Integer r = 0; r < size; ++r) {
    const Rational t(r);
    std::vector<Rational> point{t};
    if (domain) {
      const long depth = hensel_depth(p, domain->last().coset.n);
      if (!fiber_membership(*domain, point, p, depth)) continue;
    }
    ++report.checked;
    const PreparedTerm* owner = nullptr;
    long hits = 0;
    for (const auto& term : terms) {
      const long depth = hensel_depth(p, term.cell.last().coset.n);
      if (fiber_membership(term.cell, point, p, depth)) {
        ++hits;
        owner = &term;
      }
    }
    auto fail = [&](long& counter, const std::string& why) {
      ++counter;
      if (report.pass) {
        report.pass = false;
        report.counterexample = t;
        report.message = why + " at t = " + to_string(t);
      }
    };
    if (hits == 0) fail(report.uncovered, "no cell contains the point");
    else if (hits > 1) fail(report.overlapping, "several cells contain the point");
    else if (prepared_value(*owner, t, p) != norm(f(t), p)) fail(report.mismatched, "|f| differs from the prepared form");
  }
  if (report.pass) report.message = "pass";
  return report;
}

}  // namespace padic_cells
