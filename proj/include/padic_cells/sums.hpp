#pragma once

// Closed forms for sums of k^l t^k over arithmetic progressions of integers.

#include <optional>
#include <vector>

#include "error.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace padic_cells {

/// Sum of k^l t^k over k = residue (mod modulus), k_min <= k <= k_max.
struct ProgressionSum {
  long l = 0;
  Rational t;
  long residue = 0;
  long modulus = 1;
  long k_min = 0;
  std::optional<long> k_max;  ///< absent: unbounded above
};

namespace sums {

/// A_d(x) = sum_{i>=0} i^d x^i as the value of its rational closed form
/// N_d(x) / (1 - x)^{d+1}; N_d follows from applying x d/dx to 1/(1-x).
inline Rational moment(long d, const Rational& x) {
  if (x == 1) throw Error(ErrorCode::divergent, "moment at x = 1");
  Polynomial num = Polynomial::constant(1);
  const Polynomial one_minus_x({Rational(1), Rational(-1)});
  const Polynomial xpoly = Polynomial::monomial(1, 1);
  for (long k = 1; k <= d; ++k)
    num = xpoly * (num.derivative() * one_minus_x + Polynomial::constant(k) * num);
  return num(x) / rpow(1 - x, d + 1);
}

/// Coefficients of P^{(d)}(M) / d! as a polynomial in M.
inline Polynomial taylor_coefficient(const Polynomial& P, long d) {
  std::vector<Rational> out;
  for (long k = d; k <= P.degree(); ++k) out.push_back(binomial(k, d) * P.coeff(static_cast<std::size_t>(k)));
  return Polynomial(std::move(out));
}

/// G with G(M) = sum_{i>=0} P(M+i) x^i, as a rational identity for x != 1.
inline Polynomial tail_polynomial(const Polynomial& P, const Rational& x) {
  Polynomial G;
  for (long d = 0; d <= P.degree(); ++d) G = G + moment(d, x) * taylor_coefficient(P, d);
  return G;
}

inline std::vector<Rational> bernoulli_numbers(long count) {
  std::vector<Rational> B(static_cast<std::size_t>(count), Rational(0));
  if (count == 0) return B;
  B[0] = 1;
  for (long m = 1; m < count; ++m) {
    Rational acc = 0;
    for (long i = 0; i < m; ++i) acc += binomial(m + 1, i) * B[static_cast<std::size_t>(i)];
    B[static_cast<std::size_t>(m)] = -acc / (m + 1);
  }
  return B;
}

/// S_k(M) = sum_{j=0}^{M-1} j^k (with 0^0 = 1), a polynomial of degree k+1.
inline Polynomial power_sum_polynomial(long k) {
  const auto B = bernoulli_numbers(k + 1);
  std::vector<Rational> co(static_cast<std::size_t>(k + 2), Rational(0));
  for (long i = 0; i <= k; ++i) co[static_cast<std::size_t>(k + 1 - i)] += binomial(k + 1, i) * B[static_cast<std::size_t>(i)] / (k + 1);
  return Polynomial(std::move(co));
}

/// F with F(M+1) - F(M) = P(M) and F(0) = 0.
inline Polynomial discrete_antiderivative(const Polynomial& P) {
  Polynomial F;
  for (long k = 0; k <= P.degree(); ++k) F = F + P.coeff(static_cast<std::size_t>(k)) * power_sum_polynomial(k);
  return F;
}

inline bool archimedean_below_one(const Rational& t) { return abs(t) < 1; }

}  // namespace sums

/// Exact value of a convergent progression sum. Substitutes k = k0 + n j,
/// sums the polynomial-times-geometric series in closed form and takes
/// finite ranges as a difference of two tails. When t^n = 1 the finite sum is
/// a Faulhaber polynomial in the endpoints.
inline Rational sum_progression(const ProgressionSum& s) {
  if (s.l < 0) throw Error(ErrorCode::invalid_argument, "power l must be >= 0");
  if (s.modulus < 1) throw Error(ErrorCode::invalid_argument, "progression modulus must be >= 1");
  if (s.t == 0) throw Error(ErrorCode::invalid_argument, "ratio t must be nonzero");
  const long n = s.modulus;
  const long k0 = s.k_min + mod_floor(s.residue - s.k_min, n);
  if (!s.k_max && !sums::archimedean_below_one(s.t))
    throw Error(ErrorCode::divergent, "|t| >= 1 over an unbounded range (t = " + to_string(s.t) + ")");
  if (s.k_max && k0 > *s.k_max) return Rational(0);

  // P(j) = (k0 + n j)^l
  const Polynomial P = Polynomial({Rational(k0), Rational(n)}).pow(static_cast<unsigned>(s.l));
  const Rational u = rpow(s.t, n);
  const Rational scale = rpow(s.t, k0);
  if (!s.k_max) return scale * sums::tail_polynomial(P, u)(Rational(0));
  const long J = (*s.k_max - k0) / n;
  if (u == 1) {
    const Polynomial F = sums::discrete_antiderivative(P);
    return scale * (F(Rational(J + 1)) - F(Rational(0)));
  }
  const Polynomial G = sums::tail_polynomial(P, u);
  return scale * (G(Rational(0)) - rpow(u, J + 1) * G(Rational(J + 1)));
}

}  // namespace padic_cells
