#pragma once

// Exact arithmetic for Q_p at desk scale: valuations, norms, unit parts and
// membership in cosets mu * P_n of the group of nonzero n-th powers.

#include <compare>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "rational.hpp"

namespace padic_cells {

class Prime {
 public:
  explicit Prime(long p) : p_(p) {
    if (p < 2) throw Error(ErrorCode::invalid_argument, "prime must be >= 2, got " + std::to_string(p));
    for (long d = 2; d * d <= p; ++d)
      if (p % d == 0) throw Error(ErrorCode::invalid_argument, std::to_string(p) + " is not prime");
  }

  long value() const noexcept { return p_; }
  /// Residue field cardinality; the engine works over Q_p so q = p.
  long q() const noexcept { return p_; }

  friend bool operator==(const Prime&, const Prime&) = default;

 private:
  long p_;
};

/// An integer or +infinity (the valuation of zero).
class ExtendedInt {
 public:
  constexpr ExtendedInt() = default;
  constexpr ExtendedInt(long v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedInt infinity() {
    ExtendedInt e;
    e.infinite_ = true;
    return e;
  }

  constexpr bool is_infinite() const noexcept { return infinite_; }
  constexpr bool is_finite() const noexcept { return !infinite_; }

  long value() const {
    if (infinite_) throw Error(ErrorCode::invalid_argument, "value() of +inf");
    return value_;
  }

  friend constexpr ExtendedInt operator+(ExtendedInt a, ExtendedInt b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return ExtendedInt(a.value_ + b.value_);
  }
  friend constexpr ExtendedInt operator-(ExtendedInt a, long b) {
    if (a.infinite_) return infinity();
    return ExtendedInt(a.value_ - b);
  }

  friend constexpr bool operator==(ExtendedInt a, ExtendedInt b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }
  friend constexpr std::strong_ordering operator<=>(ExtendedInt a, ExtendedInt b) {
    if (a.infinite_ && b.infinite_) return std::strong_ordering::equal;
    if (a.infinite_) return std::strong_ordering::greater;
    if (b.infinite_) return std::strong_ordering::less;
    return a.value_ <=> b.value_;
  }

  std::string to_string() const { return infinite_ ? std::string("inf") : std::to_string(value_); }

  friend std::ostream& operator<<(std::ostream& os, ExtendedInt e) { return os << e.to_string(); }

 private:
  long value_ = 0;
  bool infinite_ = false;
};

inline ExtendedInt min(ExtendedInt a, ExtendedInt b) { return b < a ? b : a; }
inline ExtendedInt max(ExtendedInt a, ExtendedInt b) { return a < b ? b : a; }

/// Multiplicity of p in z (z != 0).
inline long multiplicity(const Integer& z, long p) {
  if (z == 0) return 0;
  Integer rest;
  Integer prime(p);
  return static_cast<long>(mpz_remove(rest.get_mpz_t(), z.get_mpz_t(), prime.get_mpz_t()));
}

inline ExtendedInt valuation(const Rational& x, long p) {
  if (x == 0) return ExtendedInt::infinity();
  return ExtendedInt(multiplicity(x.get_num(), p) - multiplicity(x.get_den(), p));
}

/// |x| = p^{-v(x)}, with |0| = 0.
inline Rational norm(const Rational& x, long p) {
  const auto v = valuation(x, p);
  if (v.is_infinite()) return Rational(0);
  return prime_power(p, -v.value());
}

inline Rational unit_part(const Rational& x, long p) {
  if (x == 0) throw Error(ErrorCode::invalid_argument, "unit part of zero");
  Rational out = x * prime_power(p, -valuation(x, p).value());
  return out;
}

/// Element of Q_p represented by an exact rational.
class PAdicScalar {
 public:
  PAdicScalar(Rational value, Prime prime) : value_(std::move(value)), prime_(prime) { value_.canonicalize(); }

  const Rational& value() const noexcept { return value_; }
  const Prime& prime() const noexcept { return prime_; }

  ExtendedInt valuation() const { return padic_cells::valuation(value_, prime_.value()); }
  Rational norm() const { return padic_cells::norm(value_, prime_.value()); }
  PAdicScalar unit_part() const { return {padic_cells::unit_part(value_, prime_.value()), prime_}; }

  friend PAdicScalar operator+(const PAdicScalar& a, const PAdicScalar& b) { return {a.value_ + b.value_, a.prime_}; }
  friend PAdicScalar operator-(const PAdicScalar& a, const PAdicScalar& b) { return {a.value_ - b.value_, a.prime_}; }
  friend PAdicScalar operator*(const PAdicScalar& a, const PAdicScalar& b) { return {a.value_ * b.value_, a.prime_}; }
  PAdicScalar inverse() const {
    if (value_ == 0) throw Error(ErrorCode::invalid_argument, "inverse of zero");
    return {1 / value_, prime_};
  }
  friend bool operator==(const PAdicScalar& a, const PAdicScalar& b) { return a.value_ == b.value_; }

 private:
  Rational value_;
  Prime prime_;
};

inline ExtendedInt valuation(const PAdicScalar& x) { return x.valuation(); }
inline Rational norm(const PAdicScalar& x) { return x.norm(); }
inline PAdicScalar unit_part(const PAdicScalar& x) { return x.unit_part(); }

/// The set mu * P_n; for mu = 0 it is {0}.
struct Coset {
  Rational mu;
  long n = 1;

  Coset() : mu(1) {}
  Coset(Rational m, long modulus) : mu(std::move(m)), n(modulus) {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "coset modulus n must be >= 1");
    mu.canonicalize();
  }

  bool is_point() const { return mu == 0; }
};

/// Residue of a p-integral rational modulo p^N, in [0, p^N).
inline Integer residue(const Rational& x, long p, long N) {
  const Integer modulus = ipow(Integer(p), static_cast<unsigned long>(N));
  if (multiplicity(x.get_den(), p) > 0)
    throw Error(ErrorCode::invalid_argument, "residue of a non-integral rational " + to_string(x));
  Integer inv;
  if (mpz_invert(inv.get_mpz_t(), x.get_den().get_mpz_t(), modulus.get_mpz_t()) == 0 && modulus != 1)
    throw Error(ErrorCode::internal, "denominator not invertible");
  Integer r = x.get_num() * inv;
  mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), modulus.get_mpz_t());
  return r;
}

inline Integer power_mod(const Integer& base, const Integer& e, const Integer& modulus) {
  Integer out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), e.get_mpz_t(), modulus.get_mpz_t());
  return out;
}

/// Depth 2 v_p(n) + 1 at which n-th power membership of a unit is decided.
inline long hensel_depth(long p, long n) { return 2 * multiplicity(Integer(n), p) + 1; }

namespace detail {

/// Unit residues mod p^D that are n-th powers of units mod p^D, as a flag table.
/// Filling a table also checks that every flagged class stays an n-th power
/// after lifting two more digits, i.e. that depth D really decides membership.
class NthPowerTable {
 public:
  static std::shared_ptr<const std::vector<bool>> get(long p, long n, long depth) {
    static std::mutex mutex;
    static std::map<std::tuple<long, long, long>, std::shared_ptr<const std::vector<bool>>> cache;
    const auto key = std::make_tuple(p, n, depth);
    {
      std::lock_guard lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto table = build(p, n, depth);
    self_check(p, n, depth, *table);
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(table)).first->second;
  }

  static std::shared_ptr<std::vector<bool>> build(long p, long n, long depth) {
    const Integer modulus = ipow(Integer(p), static_cast<unsigned long>(depth));
    if (modulus > Integer(20'000'000))
      throw Error(ErrorCode::invalid_argument, "n-th power table modulus too large");
    const unsigned long size = modulus.get_ui();
    auto flags = std::make_shared<std::vector<bool>>(size, false);
    const Integer e(n);
    for (unsigned long y = 0; y < size; ++y) {
      if (y % static_cast<unsigned long>(p) == 0) continue;
      const Integer r = power_mod(Integer(y), e, modulus);
      (*flags)[r.get_ui()] = true;
    }
    return flags;
  }

 private:
  static void self_check(long p, long n, long depth, const std::vector<bool>& table) {
    if (n == 1) return;
    const auto fine = build(p, n, depth + 2);
    const unsigned long step = table.size();
    const unsigned long lifts = static_cast<unsigned long>(p * p);
    for (unsigned long r = 0; r < step; ++r) {
      if (r % static_cast<unsigned long>(p) == 0) continue;
      for (unsigned long k = 0; k < lifts; ++k) {
        if ((*fine)[r + k * step] != table[r])
          throw Error(ErrorCode::internal, "Hensel depth does not decide " + std::to_string(n) +
                                               "-th powers mod " + std::to_string(p));
      }
    }
  }
};

}  // namespace detail

/// Whether the unit u (given exactly) is an n-th power in Z_p^x.
inline bool unit_is_nth_power(const Rational& u, long p, long n, long depth) {
  const long needed = hensel_depth(p, n);
  if (depth < needed)
    throw Error(ErrorCode::depth_too_small,
                "depth " + std::to_string(depth) + " < " + std::to_string(needed));
  if (n == 1) return true;
  const Integer r = residue(u, p, needed);
  return (*detail::NthPowerTable::get(p, n, needed))[r.get_ui()];
}

/// x in mu * P_n, deciding n-th powers of units at the given residue depth.
inline bool in_coset(const Rational& x, const Coset& c, long p, long depth) {
  const long needed = hensel_depth(p, c.n);
  if (depth < needed)
    throw Error(ErrorCode::depth_too_small,
                "depth " + std::to_string(depth) + " < " + std::to_string(needed));
  if (c.mu == 0) return x == 0;
  if (x == 0) return false;
  const Rational ratio = x / c.mu;
  const long v = valuation(ratio, p).value();
  if (mod_floor(v, c.n) != 0) return false;
  return unit_is_nth_power(unit_part(ratio, p), p, c.n, depth);
}

inline bool in_coset(const PAdicScalar& x, const Coset& c, long depth) {
  return in_coset(x.value(), c, x.prime().value(), depth);
}

}  // namespace padic_cells
