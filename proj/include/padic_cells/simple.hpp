#pragma once

// Simple functions of integer variables z and p-adic variables x, their
// translation to constructible functions via z_i = v(lambda_i), and summation
// over one integer variable through p-adic integration.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cells.hpp"
#include "constructible.hpp"
#include "error.hpp"
#include "integrate.hpp"
#include "padic.hpp"
#include "rational.hpp"

namespace padic_cells {

/// lo <= z <= hi; absent ends are unbounded.
struct ZRange {
  std::optional<long> lo;
  std::optional<long> hi;
  bool contains(long z) const { return (!lo || z >= *lo) && (!hi || z <= *hi); }
};

/// coeff * prod z_i^{e_i} * q^{sum c_i z_i} * x_part(x).
struct SimpleTerm {
  Rational coeff = 1;
  std::vector<long> z_powers;
  std::vector<long> q_exponents;
  ConstructibleExpr x_part = ConstructibleExpr::constant(1);
};

/// Sum of simple terms, times the indicator of the z ranges. x variables are
/// numbered x0.. independently of z.
struct SimpleFunctionExpr {
  long z_arity = 0;
  long x_arity = 0;
  std::vector<SimpleTerm> terms;
  std::vector<ZRange> ranges;

  Rational evaluate(std::span<const long> z, std::span<const Rational> x, const Prime& prime) const {
    for (long i = 0; i < z_arity; ++i)
      if (!ranges[static_cast<std::size_t>(i)].contains(z[static_cast<std::size_t>(i)])) return Rational(0);
    Rational total = 0;
    for (const auto& t : terms) {
      Rational v = t.coeff;
      for (long i = 0; i < z_arity; ++i) {
        const auto zi = z[static_cast<std::size_t>(i)];
        v *= rpow(Rational(zi), t.z_powers[static_cast<std::size_t>(i)]);
        v *= prime_power(prime.value(), t.q_exponents[static_cast<std::size_t>(i)] * zi);
      }
      v *= eval_constructible(t.x_part, x, prime.value());
      total += v;
    }
    return total;
  }
};

/// g(lambda, x) = f(v(lambda), x) on the support, 0 elsewhere.
struct SimpleTranslation {
  ConstructibleExpr g;  ///< lambda_i is x_i, x_j is x_{k+j}
  Cell support;         ///< lambda_i != 0 and v(lambda_i) in range
};

namespace detail {

inline CellCondition range_stage(const ZRange& r, long p) {
  CellCondition c;
  c.center = DTerm::constant(0);
  c.coset = Coset(Rational(1), 1);
  if (r.lo) {
    c.upper = DTerm::constant(prime_power(p, *r.lo));
    c.upper_strict = false;
  }
  if (r.hi) c.lower = DTerm::constant(prime_power(p, *r.hi + 1));
  return c;
}

inline void check_shape(const SimpleFunctionExpr& f) {
  if (static_cast<long>(f.ranges.size()) != f.z_arity) throw Error(ErrorCode::arity, "one range per z variable");
  for (const auto& t : f.terms)
    if (static_cast<long>(t.z_powers.size()) != f.z_arity || static_cast<long>(t.q_exponents.size()) != f.z_arity)
      throw Error(ErrorCode::arity, "term arity differs from z_arity");
}

inline std::map<int, int> shift_map(long count, int offset) {
  std::map<int, int> m;
  for (int j = 0; j < count; ++j) m[j] = j + offset;
  return m;
}

}  // namespace detail

inline SimpleTranslation simple_to_constructible(const SimpleFunctionExpr& f, const Prime& prime) {
  detail::check_shape(f);
  const long k = f.z_arity;
  SimpleTranslation out;
  for (long i = 0; i < k; ++i)
    out.support.conditions.push_back(detail::range_stage(f.ranges[static_cast<std::size_t>(i)], prime.value()));
  const auto xmap = detail::shift_map(f.x_arity, static_cast<int>(k));
  for (const auto& t : f.terms) {
    ConstructibleExpr term = ConstructibleExpr::constant(t.coeff);
    for (long i = 0; i < k; ++i) {
      const DTerm lam = DTerm::var(static_cast<int>(i));
      if (t.z_powers[static_cast<std::size_t>(i)] > 0)
        term = term * ConstructibleExpr::valuation_of(lam, t.z_powers[static_cast<std::size_t>(i)]);
      if (t.q_exponents[static_cast<std::size_t>(i)] != 0)
        term = term * ConstructibleExpr::norm_of(lam, Rational(-t.q_exponents[static_cast<std::size_t>(i)]));
    }
    out.g = out.g + term * rename_variables(t.x_part, xmap);
  }
  return out;
}

/// Sum over the last z variable, computed as the p-adic integral of
/// |lambda|^{-1} p/(p-1) f(v(lambda), ...) and read back as a simple function.
inline SimpleFunctionExpr sum_eliminate_simple(const SimpleFunctionExpr& f, const Prime& prime) {
  detail::check_shape(f);
  const long p = prime.value();
  const long k = f.z_arity;
  if (k < 1) throw Error(ErrorCode::invalid_argument, "no z variable to sum over");
  const ZRange& range = f.ranges.back();
  if (!range.lo) throw Error(ErrorCode::unsupported_range, "sums over z unbounded below are not supported");

  // Layout: lambda_1..lambda_{k-1}, x_0..x_{m-1}, lambda_k.
  const int t = static_cast<int>(k - 1 + f.x_arity);
  const auto xmap = detail::shift_map(f.x_arity, static_cast<int>(k - 1));
  CellIntegrand ci;
  ci.cell.conditions.push_back(detail::range_stage(range, p));
  ci.variable = t;
  const Rational density(p, p - 1);
  for (const auto& term : f.terms) {
    ConstructibleExpr rest = ConstructibleExpr::constant(term.coeff * density);
    for (long i = 0; i + 1 < k; ++i) {
      const DTerm lam = DTerm::var(static_cast<int>(i));
      if (term.z_powers[static_cast<std::size_t>(i)] > 0)
        rest = rest * ConstructibleExpr::valuation_of(lam, term.z_powers[static_cast<std::size_t>(i)]);
      if (term.q_exponents[static_cast<std::size_t>(i)] != 0)
        rest = rest * ConstructibleExpr::norm_of(lam, Rational(-term.q_exponents[static_cast<std::size_t>(i)]));
    }
    rest = rest * rename_variables(term.x_part, xmap);
    // q^{c z} |lambda|^{-1} = |lambda|^{-c-1}
    ci.terms.push_back({rest, -term.q_exponents.back() - 1, term.z_powers.back()});
  }
  ci.regroup();
  const auto result = eliminate_last_variable_symbolic({ci}, prime);
  if (!result.nonintegrable.empty()) throw Error(ErrorCode::divergent, "divergent sum over z");
  const auto expr = result.as_expr();
  if (!expr) throw Error(ErrorCode::internal, "summation produced a piecewise result");

  SimpleFunctionExpr out;
  out.z_arity = k - 1;
  out.x_arity = f.x_arity;
  out.ranges.assign(f.ranges.begin(), f.ranges.end() - 1);
  std::map<int, int> back;
  for (int j = 0; j < f.x_arity; ++j) back[j + static_cast<int>(k - 1)] = j;
  for (const auto& term : expr->terms()) {
    SimpleTerm st;
    st.coeff = term.coeff;
    st.z_powers.assign(static_cast<std::size_t>(k - 1), 0);
    st.q_exponents.assign(static_cast<std::size_t>(k - 1), 0);
    std::vector<ConstructibleTerm> xs{ConstructibleTerm{1, {}, {}}};
    auto lambda_index = [&](const DTerm& h) -> int {
      const auto* v = h.as<node::Var>();
      return v && v->index < k - 1 ? v->index : -1;
    };
    for (const auto& vf : term.val_factors) {
      const int i = lambda_index(vf.h);
      if (i >= 0) st.z_powers[static_cast<std::size_t>(i)] += vf.exponent;
      else xs[0].val_factors.push_back({rename_variables(vf.h, back), vf.exponent});
    }
    for (const auto& nf : term.norm_factors) {
      const int i = lambda_index(nf.h);
      if (i < 0) {
        xs[0].norm_factors.push_back({rename_variables(nf.h, back), nf.exponent});
        continue;
      }
      Rational c = -nf.exponent;
      c.canonicalize();
      if (c.get_den() != 1) throw Error(ErrorCode::internal, "fractional power of q in a simple function");
      st.q_exponents[static_cast<std::size_t>(i)] += c.get_num().get_si();
    }
    st.x_part = ConstructibleExpr(std::move(xs));
    out.terms.push_back(std::move(st));
  }
  return out;
}

}  // namespace padic_cells
