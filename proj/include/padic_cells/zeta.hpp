#pragma once

// Igusa local zeta functions of univariate polynomials as rational functions
// of T = p^{-s}, and the Poincare series cross-check.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cells.hpp"
#include "decompose.hpp"
#include "error.hpp"
#include "padic.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace padic_cells {

/// Denominator factor 1 - p^{-c} T^d.
struct ZetaFactor {
  long c = 0;
  long d = 0;
  friend auto operator<=>(const ZetaFactor&, const ZetaFactor&) = default;
};

/// T^shift * numerator(T) / prod (1 - p^{-c} T^d).
class ZetaRational {
 public:
  ZetaRational() = default;
  ZetaRational(long p, Polynomial numerator, long shift, std::vector<ZetaFactor> factors)
      : p_(p), numerator_(std::move(numerator)), shift_(shift), factors_(std::move(factors)) {
    normalize();
  }

  long prime() const { return p_; }
  const Polynomial& numerator() const { return numerator_; }
  long shift() const { return shift_; }
  const std::vector<ZetaFactor>& denominator_factors() const { return factors_; }

  Polynomial factor_polynomial(const ZetaFactor& f) const {
    std::vector<Rational> co(static_cast<std::size_t>(f.d + 1), Rational(0));
    co[0] = 1;
    co[static_cast<std::size_t>(f.d)] -= prime_power(p_, -f.c);
    return Polynomial(std::move(co));
  }

  Polynomial denominator() const {
    Polynomial d = Polynomial::constant(1);
    for (const auto& f : factors_) d = d * factor_polynomial(f);
    return d;
  }

  Rational operator()(const Rational& T) const {
    const Rational den = denominator()(T);
    if (den == 0) throw Error(ErrorCode::invalid_argument, "T is a pole");
    return numerator_(T) * rpow(T, shift_) / den;
  }

  /// Power series coefficients of degrees 0..count-1 (requires shift >= 0).
  std::vector<Rational> series(long count) const {
    if (shift_ < 0) throw Error(ErrorCode::invalid_argument, "Laurent series with negative powers of T");
    std::vector<Rational> out(static_cast<std::size_t>(count), Rational(0));
    for (long i = 0; i + shift_ < count && i <= numerator_.degree(); ++i)
      out[static_cast<std::size_t>(i + shift_)] = numerator_.coeff(static_cast<std::size_t>(i));
    for (const auto& f : factors_) {
      // multiply by 1 / (1 - r T^d) = sum r^j T^{dj}
      const Rational r = prime_power(p_, -f.c);
      for (long i = f.d; i < count; ++i) out[static_cast<std::size_t>(i)] += r * out[static_cast<std::size_t>(i - f.d)];
    }
    return out;
  }

  friend ZetaRational operator+(const ZetaRational& a, const ZetaRational& b) {
    if (a.numerator_.is_zero()) return b;
    if (b.numerator_.is_zero()) return a;
    // common denominator: multiset union
    std::map<ZetaFactor, long> need_a, need_b, common;
    for (const auto& f : a.factors_) ++need_a[f];
    for (const auto& f : b.factors_) ++need_b[f];
    for (const auto& [f, m] : need_a) common[f] = std::max(common[f], m);
    for (const auto& [f, m] : need_b) common[f] = std::max(common[f], m);
    auto lift = [&](const ZetaRational& x, std::map<ZetaFactor, long>& have) {
      Polynomial num = x.numerator_;
      for (const auto& [f, m] : common)
        for (long i = have[f]; i < m; ++i) num = num * x.factor_polynomial(f);
      return num;
    };
    Polynomial na = lift(a, need_a);
    Polynomial nb = lift(b, need_b);
    const long shift = std::min(a.shift_, b.shift_);
    na = na * Polynomial::monomial(1, static_cast<std::size_t>(a.shift_ - shift));
    nb = nb * Polynomial::monomial(1, static_cast<std::size_t>(b.shift_ - shift));
    std::vector<ZetaFactor> factors;
    for (const auto& [f, m] : common)
      for (long i = 0; i < m; ++i) factors.push_back(f);
    return ZetaRational(a.p_, na + nb, shift, std::move(factors));
  }

  friend bool operator==(const ZetaRational& a, const ZetaRational& b) {
    return a.p_ == b.p_ && a.numerator_ == b.numerator_ && a.shift_ == b.shift_ && a.factors_ == b.factors_;
  }

  std::string to_string() const {
    std::string num = numerator_.to_string("T");
    if (shift_ != 0) num = (shift_ == 1 ? std::string("T") : "T^" + std::to_string(shift_)) + "*(" + num + ")";
    if (factors_.empty()) return num;
    std::string den;
    for (const auto& f : factors_) {
      if (!den.empty()) den += "*";
      const std::string mono = f.d == 1 ? "T" : "T^" + std::to_string(f.d);
      const Rational c = prime_power(p_, -f.c);
      den += "(1 - " + (c == 1 ? mono : padic_cells::to_string(c) + "*" + mono) + ")";
    }
    const bool bare = numerator_.coeffs().size() == 1 && shift_ == 0 && numerator_.coeff(0).get_den() == 1;
    return (bare ? num : "(" + num + ")") + "/" + (factors_.size() == 1 ? den : "(" + den + ")");
  }

 private:
  void normalize() {
    std::sort(factors_.begin(), factors_.end());
    if (numerator_.is_zero()) {
      shift_ = 0;
      factors_.clear();
      return;
    }
    while (numerator_.coeff(0) == 0) {
      numerator_ = exact_quotient(numerator_, Polynomial::monomial(1, 1));
      ++shift_;
    }
    for (std::size_t i = 0; i < factors_.size();) {
      auto [q, r] = numerator_.divmod(factor_polynomial(factors_[i]));
      if (r.is_zero()) {
        numerator_ = q;
        factors_.erase(factors_.begin() + static_cast<long>(i));
      } else {
        ++i;
      }
    }
  }

  long p_ = 2;
  Polynomial numerator_;
  long shift_ = 0;
  std::vector<ZetaFactor> factors_;
};

/// Z_f(T) = int_{Z_p} |f(t)|^s |dt| from a prepared decomposition of f.
inline ZetaRational igusa_zeta(const Polynomial& f, const Prime& prime, long precision_N = 48) {
  const long p = prime.value();
  ZetaRational total(p, Polynomial{}, 0, {});
  for (const auto& term : decompose_univariate(f, prime, precision_N)) {
    const CellCondition& cond = term.cell.last();
    if (cond.coset.mu == 0) continue;
    const ValuationRange range = fiber_valuation_range(cond, {}, p);
    if (!range.k_min) throw Error(ErrorCode::infinite_measure, "decomposed cell is unbounded");
    if (range.empty()) continue;
    const long n = cond.coset.n;
    const long vmu = valuation(cond.coset.mu, p).value();
    const long j_min = ceil_div(*range.k_min - vmu, n);
    // eps T^{v(delta)} p^{-v(mu)} sum_j (p^{-n} T^a)^j
    const Rational eps = level_set_measure(cond.coset, prime).epsilon;
    const Rational lead = eps * prime_power(p, -vmu);
    const long vdelta = valuation(term.delta, p).value();
    if (range.k_max) {
      const long j_max = floor_div(*range.k_max - vmu, n);
      std::map<long, Rational> laurent;
      for (long j = j_min; j <= j_max; ++j) laurent[vdelta + term.a * j] += lead * prime_power(p, -n * j);
      const long low = laurent.begin()->first;
      std::vector<Rational> co(static_cast<std::size_t>(laurent.rbegin()->first - low + 1), Rational(0));
      for (const auto& [e, c] : laurent) co[static_cast<std::size_t>(e - low)] += c;
      total = total + ZetaRational(p, Polynomial(std::move(co)), low, {});
    } else if (term.a == 0) {
      const Rational value = lead * prime_power(p, -n * j_min) / (1 - prime_power(p, -n));
      total = total + ZetaRational(p, Polynomial::constant(value), vdelta, {});
    } else {
      const Rational value = lead * prime_power(p, -n * j_min);
      total = total + ZetaRational(p, Polynomial::constant(value), vdelta + term.a * j_min, {{n, term.a}});
    }
  }
  return total;
}

struct PoincareReport {
  std::vector<Integer> counted;     ///< N_i by enumeration, i = 0..i_max
  std::vector<Rational> predicted;  ///< p^i [T^i] (1 - T Z(T)) / (1 - T)
  bool pass = true;
  std::string identity = "P(T) = (1 - T Z(T)) / (1 - T), P(T) = sum_i N_i p^{-i} T^i";
};

/// N_i = #{x mod p^i : f(x) = 0 mod p^i} against the series derived from Z_f.
inline PoincareReport poincare_check(const Polynomial& f, const Prime& prime, long i_max, long precision_N = 48) {
  const long p = prime.value();
  for (const auto& c : f.coeffs())
    if (valuation(c, p) < ExtendedInt(0)) throw Error(ErrorCode::invalid_argument, "f must have p-integral coefficients");
  const ZetaRational Z = igusa_zeta(f, prime, precision_N);
  const auto z = Z.series(i_max + 1);
  PoincareReport report;
  Rational partial = 0;
  for (long i = 0; i <= i_max; ++i) {
    // [T^i](1 - T Z) summed up to i gives the coefficient of P
    partial += (i == 0 ? Rational(1) : Rational(-z[static_cast<std::size_t>(i - 1)]));
    report.predicted.push_back(partial * prime_power(p, i));
    const Integer modulus = ipow(Integer(p), static_cast<unsigned long>(i));
    Integer count = 0;
    for (Integer x = 0; x < modulus; ++x)
      if (valuation(f(Rational(x)), p) >= ExtendedInt(i)) ++count;
    report.counted.push_back(count);
    if (Rational(count) != report.predicted.back()) report.pass = false;
  }
  return report;
}

}  // namespace padic_cells
