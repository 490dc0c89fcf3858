#pragma once

#include <gmpxx.h>

#include <cctype>
#include <string>
#include <string_view>

#include "error.hpp"

namespace padic_cells {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(long num, long den = 1) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// Canonical text form: "num" for integers, "num/den" otherwise.
inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

inline std::string to_string(const Integer& z) { return z.get_str(); }

/// Parses "[-]digits" or "[-]digits/digits".
inline Rational parse_rational(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw Error(ErrorCode::parse, "empty rational literal");
  std::size_t i = 0;
  if (s[0] == '-' || s[0] == '+') i = 1;
  const auto slash = s.find('/');
  auto all_digits = [&](std::size_t from, std::size_t to) {
    if (from >= to) return false;
    for (std::size_t k = from; k < to; ++k)
      if (!std::isdigit(static_cast<unsigned char>(s[k]))) return false;
    return true;
  };
  if (slash == std::string::npos) {
    if (!all_digits(i, s.size())) throw Error(ErrorCode::parse, "bad rational literal '" + s + "'");
  } else if (!all_digits(i, slash) || !all_digits(slash + 1, s.size())) {
    throw Error(ErrorCode::parse, "bad rational literal '" + s + "'");
  }
  if (s[0] == '+') s.erase(0, 1);
  Rational r;
  if (r.set_str(s, 10) != 0) throw Error(ErrorCode::parse, "bad rational literal '" + s + "'");
  if (r.get_den() == 0) throw Error(ErrorCode::parse, "zero denominator in '" + s + "'");
  r.canonicalize();
  return r;
}

inline Integer ipow(const Integer& base, unsigned long e) {
  Integer out;
  mpz_pow_ui(out.get_mpz_t(), base.get_mpz_t(), e);
  return out;
}

/// base^e for any integer e; base must be nonzero when e < 0.
inline Rational rpow(const Rational& base, long e) {
  if (e == 0) return Rational(1);
  if (e < 0) {
    if (base == 0) throw Error(ErrorCode::invalid_argument, "zero to a negative power");
    Rational inv = 1 / base;
    return rpow(inv, -e);
  }
  Rational out(ipow(base.get_num(), static_cast<unsigned long>(e)),
               ipow(base.get_den(), static_cast<unsigned long>(e)));
  out.canonicalize();
  return out;
}

/// p^e as an exact rational, e of either sign.
inline Rational prime_power(long p, long e) {
  if (e >= 0) return Rational(ipow(Integer(p), static_cast<unsigned long>(e)));
  Rational out(Integer(1), ipow(Integer(p), static_cast<unsigned long>(-e)));
  return out;
}

inline Rational abs(const Rational& r) { return r < 0 ? Rational(-r) : r; }

/// Floor and ceiling of a/b for b > 0.
inline long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && (a < 0)) --q;
  return q;
}

inline long ceil_div(long a, long b) { return -floor_div(-a, b); }

inline long mod_floor(long a, long b) { return a - b * floor_div(a, b); }

inline Rational binomial(long n, long k) {
  if (k < 0 || k > n) return Rational(0);
  Integer out;
  mpz_bin_uiui(out.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(out);
}

}  // namespace padic_cells
