#pragma once

// Brute-force integration over residue classes mod p^N. A class counts toward
// the value only when cell membership and the integrand are constant on it;
// the remaining classes make up the boundary mass.

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "cells.hpp"
#include "constructible.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "padic.hpp"
#include "rational.hpp"

namespace padic_cells {

struct OracleOptions {
  unsigned long long budget = 10'000'000;  ///< classes enumerated before sampling kicks in
  unsigned threads = 0;                    ///< 0: hardware concurrency
  std::vector<Rational> parameters;        ///< values of the leading (non-integrated) variables
  /// false: the domain has stages for the integration variables only.
  bool domain_has_parameter_stages = true;
};

struct OracleResult {
  Rational value;
  long resolution = 0;
  Rational boundary_mass;
  /// Bound for |integrand| on boundary classes, when one could be derived.
  std::optional<Rational> boundary_sup = Rational(0);
  bool sampled = false;
  unsigned long long classes = 0;

  /// boundary_mass * sup, using a fallback sup when the classes gave none.
  std::optional<Rational> bound(const std::optional<Rational>& fallback_sup = {}) const {
    if (boundary_mass == 0) return Rational(0);
    if (boundary_sup) return boundary_mass * *boundary_sup;
    if (fallback_sup) return boundary_mass * *fallback_sup;
    return std::nullopt;
  }
};

enum class Decision { inside, outside, undecided };

namespace detail {

inline Decision classify_stage(const CellCondition& cond, std::span<const Approx> base, const Approx& t, long p) {
  const Approx u = center_offset(cond.center, base, t, p);
  if (!u.error) return Decision::undecided;
  if (cond.coset.mu == 0) return valuation(u.value, p) >= *u.error ? Decision::undecided : Decision::outside;
  const auto ku = u.determined_valuation(p);
  if (!ku) {
    // v(u) >= error: outside when no such valuation passes the alpha bound.
    if (cond.lower && u.error->is_finite()) {
      const auto va = evaluate(*cond.lower, base, p).determined_valuation(p);
      const long e = u.error->value();
      if (va && va->is_finite() && (cond.lower_strict ? va->value() <= e : va->value() < e)) return Decision::outside;
    }
    return Decision::undecided;
  }
  if (ku->is_infinite()) return Decision::outside;
  const long k = ku->value();
  if (cond.lower) {
    const auto va = evaluate(*cond.lower, base, p).determined_valuation(p);
    if (!va) return Decision::undecided;
    if (va->is_finite()) {
      const bool ok = cond.lower_strict ? va->value() > k : va->value() >= k;
      if (!ok) return Decision::outside;
    }
  }
  if (cond.upper) {
    const auto vb = evaluate(*cond.upper, base, p).determined_valuation(p);
    if (!vb) return Decision::undecided;
    if (vb->is_infinite()) return Decision::outside;
    const bool ok = cond.upper_strict ? k > vb->value() : k >= vb->value();
    if (!ok) return Decision::outside;
  }
  const long depth = hensel_depth(p, cond.coset.n);
  if (ExtendedInt(k + depth) > *u.error) return Decision::undecided;
  return in_coset(u.value, cond.coset, p, depth) ? Decision::inside : Decision::outside;
}

/// sup over v >= lower of |v|^e p^{-r v} (r > 0).
inline Rational sup_val_norm(long lower, long e, const Rational& r, long p) {
  // v^e p^{-r v} decreases once v > e / (r ln p); e / r + 1 is past that point for p >= 2.
  Rational limit = Rational(2 * e) / r + 1;
  const long stop = std::max(lower, static_cast<long>(limit.get_d()) + 1);
  Rational best = 0;
  for (long v = lower; v <= stop; ++v) {
    Rational exponent = r * v;
    exponent.canonicalize();
    // p^{-r v} may be irrational; bound it by the next power of p above.
    const Integer fl = exponent.get_num() / exponent.get_den() - (exponent < 0 && exponent.get_den() != 1 ? 1 : 0);
    const Rational val = rpow(Rational(v < 0 ? -v : v), e) * prime_power(p, -fl.get_si());
    best = std::max(best, val);
  }
  return best;
}

/// Upper bound for |f| on the class described by point; nullopt when unbounded or unknown.
inline std::optional<Rational> class_sup(const ConstructibleExpr& f, std::span<const Approx> point, long p) {
  Rational total = 0;
  for (const auto& t : f.terms()) {
    Rational bound = abs(t.coeff);
    // Group by argument so that v(h)^e |h|^r can be bounded jointly.
    std::vector<DTerm> args;
    for (const auto& vf : t.val_factors) args.push_back(vf.h);
    for (const auto& nf : t.norm_factors)
      if (std::find(args.begin(), args.end(), nf.h) == args.end()) args.push_back(nf.h);
    for (const auto& h : args) {
      long e = 0;
      Rational r = 0;
      for (const auto& vf : t.val_factors)
        if (vf.h == h) e += vf.exponent;
      for (const auto& nf : t.norm_factors)
        if (nf.h == h) r += nf.exponent;
      const Approx a = evaluate(h, point, p);
      if (!a.error) return std::nullopt;
      if (const auto v = a.determined_valuation(p)) {
        if (v->is_infinite()) {
          if (e > 0) return std::nullopt;
          if (r > 0) bound = 0;
          else if (r < 0) return std::nullopt;
          continue;
        }
        bound *= rpow(Rational(v->value() < 0 ? -v->value() : v->value()), e);
        bound *= norm_power(*v, r, p);
        continue;
      }
      if (!(r > 0) || a.error->is_infinite()) return std::nullopt;
      bound *= sup_val_norm(a.error->value(), e, r, p);
    }
    total += bound;
  }
  return total;
}

struct Tally {
  Rational sum;                        ///< sum of integrand values over inside classes
  unsigned long long boundary = 0;     ///< number of undecided classes
  std::optional<Rational> sup = Rational(0);
  unsigned long long visited = 0;

  void merge(const Tally& o) {
    sum += o.sum;
    boundary += o.boundary;
    visited += o.visited;
    if (!sup || !o.sup) sup.reset();
    else sup = std::max(*sup, *o.sup);
  }
};

inline void check_bounded(const Cell& domain, std::size_t first, long p) {
  for (std::size_t i = first; i < domain.arity(); ++i) {
    const CellCondition& c = domain.conditions[i];
    if (c.coset.mu == 0) continue;
    if (!c.upper) throw Error(ErrorCode::unbounded_domain, "stage " + std::to_string(i) + " has no upper bound");
    const auto* gamma = std::get_if<DTerm>(&c.center);
    const auto beta = c.strict_upper(p);
    if (!gamma || gamma->max_variable() >= 0 || beta->max_variable() >= 0) continue;
    const Rational b = evaluate_exact(*beta, {}, p);
    const ExtendedInt vg = valuation(evaluate_exact(*gamma, {}, p), p);
    if (b == 0) continue;
    const long n = c.coset.n;
    const long vmu = valuation(c.coset.mu, p).value();
    const long k_min = valuation(b, p).value() + 1;
    std::optional<long> k_max;
    if (auto alpha = c.strict_lower(p); alpha && alpha->max_variable() < 0) {
      const Rational a = evaluate_exact(*alpha, {}, p);
      if (a != 0) k_max = valuation(a, p).value() - 1;
    }
    for (long k = k_min + mod_floor(vmu - k_min, n); k < 0 && (!k_max || k <= *k_max); k += n)
      if (ExtendedInt(k) != vg)
        throw Error(ErrorCode::unbounded_domain, "stage " + std::to_string(i) + " leaves Z_p");
  }
}

}  // namespace detail

/// Integral of f over the cell (integration variables are those after the parameters).
inline OracleResult oracle_integrate(const ConstructibleExpr& f, const Cell& domain, const Prime& prime, long N,
                                     const OracleOptions& options = {}) {
  const long p = prime.value();
  const std::size_t params = options.parameters.size();
  const std::size_t offset = options.domain_has_parameter_stages ? 0 : params;
  if (domain.arity() + offset < params) throw Error(ErrorCode::arity, "more parameters than cell stages");
  const std::size_t dims = domain.arity() + offset - params;
  if (N < 1) throw Error(ErrorCode::invalid_argument, "resolution N must be >= 1");
  detail::check_bounded(domain, params - offset, p);

  OracleResult result;
  result.resolution = N;
  // Parameters must lie in the base of the integration stages.
  for (std::size_t i = 0; i + offset < params; ++i) {
    const long depth = hensel_depth(p, domain.conditions[i].coset.n);
    if (!stage_membership(domain.conditions[i], std::span(options.parameters).first(i), options.parameters[i], p, depth))
      return result;
  }

  const Integer side = ipow(Integer(p), static_cast<unsigned long>(N));
  if (!side.fits_ulong_p()) throw Error(ErrorCode::invalid_argument, "p^N too large");
  const unsigned long long side_u = side.get_ui();
  Integer total_classes = ipow(side, static_cast<unsigned long>(dims));
  const bool sampled = total_classes > Integer(std::to_string(options.budget));
  const unsigned long long count = sampled ? options.budget : total_classes.get_ui();

  auto visit = [&](unsigned long long index, std::mt19937_64* rng, detail::Tally& tally) {
    std::vector<Approx> point;
    point.reserve(params + dims);
    for (const auto& x : options.parameters) point.push_back(Approx::exact(x));
    for (std::size_t d = 0; d < dims; ++d) {
      unsigned long long digit;
      if (rng) {
        digit = std::uniform_int_distribution<unsigned long long>(0, side_u - 1)(*rng);
      } else {
        digit = index % side_u;
        index /= side_u;
      }
      point.push_back({Rational(Integer(std::to_string(digit))), ExtendedInt(N)});
    }
    ++tally.visited;
    Decision overall = Decision::inside;
    for (std::size_t i = params; i < params + dims; ++i) {
      const Decision d = detail::classify_stage(domain.conditions[i - offset], std::span(point).first(i), point[i], p);
      if (d == Decision::outside) return;
      if (d == Decision::undecided) overall = Decision::undecided;
    }
    if (overall == Decision::inside) {
      if (auto value = evaluate(f, point, p)) {
        tally.sum += *value;
        return;
      }
    }
    ++tally.boundary;
    if (tally.sup) {
      auto s = detail::class_sup(f, point, p);
      if (!s) tally.sup.reset();
      else tally.sup = std::max(*tally.sup, *s);
    }
  };

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<unsigned long long>(threads, std::max<unsigned long long>(1, count / 256)));
  const unsigned long long chunks = std::max<unsigned long long>(1, std::min<unsigned long long>(count, threads * 4ULL));
  std::vector<detail::Tally> tallies(chunks);
  auto run_chunk = [&](unsigned long long c) {
    const unsigned long long begin = count * c / chunks;
    const unsigned long long end = count * (c + 1) / chunks;
    std::mt19937_64 rng(0x5eedULL + c);
    for (unsigned long long i = begin; i < end; ++i) visit(i, sampled ? &rng : nullptr, tallies[c]);
  };
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < threads; ++w)
    workers.emplace_back([&, w] {
      try {
        for (unsigned long long c = w; c < chunks; c += threads) run_chunk(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  detail::Tally total;
  for (const auto& t : tallies) total.merge(t);
  Rational weight = sampled ? Rational(1, Integer(std::to_string(count)))
                            : Rational(Integer(1), total_classes);
  weight.canonicalize();
  result.value = total.sum * weight;
  result.boundary_mass = Rational(Integer(std::to_string(total.boundary))) * weight;
  result.boundary_sup = total.boundary == 0 ? std::optional<Rational>(Rational(0)) : total.sup;
  result.sampled = sampled;
  result.classes = count;
  return result;
}

/// Sum of oracle results over the cells of a partition.
inline OracleResult oracle_integrate(const ConstructibleExpr& f, const std::vector<Cell>& cells, const Prime& prime,
                                     long N, const OracleOptions& options = {}) {
  OracleResult out;
  out.resolution = N;
  for (const auto& cell : cells) {
    const OracleResult r = oracle_integrate(f, cell, prime, N, options);
    out.value += r.value;
    out.boundary_mass += r.boundary_mass;
    if (!out.boundary_sup || !r.boundary_sup) out.boundary_sup.reset();
    else out.boundary_sup = std::max(*out.boundary_sup, *r.boundary_sup);
    out.sampled = out.sampled || r.sampled;
    out.classes += r.classes;
  }
  return out;
}

inline OracleResult oracle_measure(const Cell& domain, const Prime& prime, long N, const OracleOptions& options = {}) {
  return oracle_integrate(ConstructibleExpr::constant(1), domain, prime, N, options);
}

/// Reruns at N_start, N_start + 2, ... until the boundary mass drops below tol.
inline OracleResult stabilize(const std::function<OracleResult(long)>& op, long N_start, long N_max,
                              const Rational& tol) {
  if (N_start > N_max) throw Error(ErrorCode::invalid_argument, "N_start > N_max");
  for (long N = N_start; N <= N_max; N += 2) {
    OracleResult r = op(N);
    if (r.boundary_mass < tol) return r;
  }
  throw Error(ErrorCode::did_not_stabilize, "boundary mass above tolerance at N = " + std::to_string(N_max));
}

}  // namespace padic_cells
