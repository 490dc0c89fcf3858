#pragma once

// Dense univariate polynomials over Q.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "padic.hpp"
#include "rational.hpp"

namespace padic_cells {

class Polynomial {
 public:
  Polynomial() = default;
  /// Coefficients from the constant term upwards.
  explicit Polynomial(std::vector<Rational> coeffs) : coeffs_(std::move(coeffs)) { trim(); }

  static Polynomial constant(const Rational& c) { return Polynomial({c}); }
  static Polynomial monomial(const Rational& c, std::size_t degree) {
    std::vector<Rational> co(degree + 1, Rational(0));
    co[degree] = c;
    return Polynomial(std::move(co));
  }
  static Polynomial linear(const Rational& root) { return Polynomial({-root, Rational(1)}); }

  bool is_zero() const { return coeffs_.empty(); }
  /// Degree, with -1 for the zero polynomial.
  long degree() const { return static_cast<long>(coeffs_.size()) - 1; }
  const std::vector<Rational>& coeffs() const { return coeffs_; }
  Rational coeff(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : Rational(0); }
  Rational leading() const { return is_zero() ? Rational(0) : coeffs_.back(); }

  Rational operator()(const Rational& x) const {
    Rational acc = 0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * x + *it;
    return acc;
  }

  Polynomial derivative() const {
    std::vector<Rational> out;
    for (std::size_t i = 1; i < coeffs_.size(); ++i) out.push_back(coeffs_[i] * static_cast<long>(i));
    return Polynomial(std::move(out));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<Rational> out(std::max(a.coeffs_.size(), b.coeffs_.size()), Rational(0));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) out[i] += a.coeffs_[i];
    for (std::size_t i = 0; i < b.coeffs_.size(); ++i) out[i] += b.coeffs_[i];
    return Polynomial(std::move(out));
  }
  friend Polynomial operator-(const Polynomial& a) {
    std::vector<Rational> out = a.coeffs_;
    for (auto& c : out) c = -c;
    return Polynomial(std::move(out));
  }
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<Rational> out(a.coeffs_.size() + b.coeffs_.size() - 1, Rational(0));
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) out[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(out));
  }
  friend Polynomial operator*(const Rational& s, const Polynomial& a) { return Polynomial::constant(s) * a; }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs_ == b.coeffs_; }

  Polynomial pow(unsigned e) const {
    Polynomial out = constant(1);
    for (unsigned i = 0; i < e; ++i) out = out * *this;
    return out;
  }

  /// Quotient and remainder of Euclidean division.
  std::pair<Polynomial, Polynomial> divmod(const Polynomial& d) const {
    if (d.is_zero()) throw Error(ErrorCode::invalid_argument, "polynomial division by zero");
    std::vector<Rational> rem = coeffs_;
    const long dd = d.degree();
    if (degree() < dd) return {Polynomial(), *this};
    std::vector<Rational> quo(static_cast<std::size_t>(degree() - dd + 1), Rational(0));
    for (long i = degree(); i >= dd; --i) {
      const Rational c = rem[static_cast<std::size_t>(i)] / d.leading();
      quo[static_cast<std::size_t>(i - dd)] = c;
      if (c == 0) continue;
      for (long j = 0; j <= dd; ++j) rem[static_cast<std::size_t>(i - dd + j)] -= c * d.coeffs_[static_cast<std::size_t>(j)];
    }
    return {Polynomial(std::move(quo)), Polynomial(std::move(rem))};
  }

  Polynomial monic() const {
    if (is_zero()) return {};
    return (1 / leading()) * *this;
  }

  /// f(c + s*y) as a polynomial in y.
  Polynomial compose_affine(const Rational& c, const Rational& s) const {
    Polynomial out;
    const Polynomial inner({c, s});
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) out = out * inner + constant(*it);
    return out;
  }

  /// Scaled copy with coprime integer coefficients and positive leading coefficient.
  Polynomial primitive() const {
    if (is_zero()) return {};
    Integer den_lcm = 1;
    for (const auto& c : coeffs_) mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), c.get_den().get_mpz_t());
    Integer num_gcd = 0;
    for (const auto& c : coeffs_) {
      const Integer z = c.get_num() * (den_lcm / c.get_den());
      mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), z.get_mpz_t());
    }
    Rational scale(den_lcm, num_gcd);
    scale.canonicalize();
    if (leading() < 0) scale = -scale;
    return scale * *this;
  }

  std::string to_string(const std::string& var = "x0") const;

 private:
  void trim() {
    for (auto& c : coeffs_) c.canonicalize();
    while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
  }

  std::vector<Rational> coeffs_;
};

inline std::string Polynomial::to_string(const std::string& var) const {
  if (is_zero()) return "0";
  std::string out;
  for (long i = degree(); i >= 0; --i) {
    const Rational c = coeffs_[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    const Rational mag = padic_cells::abs(c);
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    std::string mono;
    if (i >= 1) mono = var + (i > 1 ? "^" + std::to_string(i) : "");
    if (i == 0) {
      out += padic_cells::to_string(mag);
    } else if (mag == 1) {
      out += mono;
    } else {
      out += padic_cells::to_string(mag) + "*" + mono;
    }
  }
  return out;
}

/// Monic gcd; gcd(0, 0) = 0.
inline Polynomial gcd(Polynomial a, Polynomial b) {
  while (!b.is_zero()) {
    auto r = a.divmod(b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return a.monic();
}

inline Polynomial exact_quotient(const Polynomial& a, const Polynomial& b) {
  auto [q, r] = a.divmod(b);
  if (!r.is_zero()) throw Error(ErrorCode::internal, "inexact polynomial division");
  return q;
}

/// Yun's algorithm: f = lc * prod_i s_i^i with s_i monic, squarefree, pairwise coprime.
/// Returns (multiplicity, factor) pairs with non-constant factors only.
inline std::vector<std::pair<long, Polynomial>> squarefree_decomposition(const Polynomial& f) {
  std::vector<std::pair<long, Polynomial>> out;
  if (f.degree() < 1) return out;
  const Polynomial fm = f.monic();
  Polynomial a = gcd(fm, fm.derivative());
  Polynomial b = exact_quotient(fm, a);
  Polynomial c = exact_quotient(fm.derivative(), a);
  Polynomial d = c - b.derivative();
  long i = 1;
  while (b.degree() >= 1) {
    const Polynomial g = gcd(b, d);
    if (g.degree() >= 1) out.emplace_back(i, g);
    b = exact_quotient(b, g);
    c = exact_quotient(d, g);
    d = c - b.derivative();
    ++i;
  }
  return out;
}

namespace detail {

inline std::vector<Integer> divisors(Integer n) {
  if (n < 0) n = -n;
  std::vector<Integer> small, large;
  if (n == 0) return {};
  if (n > Integer("1000000000000")) throw Error(ErrorCode::invalid_argument, "coefficient too large for rational root search");
  for (Integer d = 1; d * d <= n; ++d) {
    if (n % d == 0) {
      small.push_back(d);
      if (d * d != n) large.push_back(n / d);
    }
  }
  small.insert(small.end(), large.rbegin(), large.rend());
  return small;
}

}  // namespace detail

/// All distinct rational roots, in increasing order.
inline std::vector<Rational> rational_roots(const Polynomial& f) {
  std::vector<Rational> roots;
  if (f.degree() < 1) return roots;
  Polynomial g = f.primitive();
  long zero_mult = 0;
  while (g.coeff(0) == 0) {
    g = exact_quotient(g, Polynomial::monomial(1, 1));
    ++zero_mult;
  }
  if (zero_mult > 0) roots.push_back(0);
  if (g.degree() >= 1) {
    const auto nums = detail::divisors(g.coeff(0).get_num());
    const auto dens = detail::divisors(g.leading().get_num());
    for (const auto& a : nums)
      for (const auto& b : dens)
        for (int sign : {1, -1}) {
          Rational cand(a * sign, b);
          cand.canonicalize();
          if (g(cand) == 0 && std::find(roots.begin(), roots.end(), cand) == roots.end()) roots.push_back(cand);
        }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Smallest valuation among coefficients (+inf for zero).
inline ExtendedInt min_coefficient_valuation(const Polynomial& f, long p) {
  ExtendedInt m = ExtendedInt::infinity();
  for (const auto& c : f.coeffs()) m = min(m, valuation(c, p));
  return m;
}

}  // namespace padic_cells
