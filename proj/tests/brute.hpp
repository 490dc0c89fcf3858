#pragma once

// Brute-force reference computations shared by the tests. Nothing here calls
// into the library's decision procedures.

#include <gmpxx.h>

#include <random>
#include <set>
#include <vector>

namespace brute {

inline long ipow(long b, long e) {
  long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

inline long vp(mpz_class z, long p) {
  if (z == 0) return 1000000;
  long v = 0;
  while (z % p == 0) {
    z /= p;
    ++v;
  }
  return v;
}

inline long vp(const mpq_class& x, long p) {
  if (x == 0) return 1000000;
  return vp(x.get_num(), p) - vp(x.get_den(), p);
}

/// Units mod p^M that are n-th powers of units mod p^M.
inline std::set<long> unit_nth_powers(long p, long n, long M) {
  const long mod = ipow(p, M);
  std::set<long> out;
  for (long y = 1; y < mod; ++y) {
    if (y % p == 0) continue;
    mpz_class r;
    mpz_class base(y);
    mpz_class m(mod);
    mpz_powm_ui(r.get_mpz_t(), base.get_mpz_t(), static_cast<unsigned long>(n), m.get_mpz_t());
    out.insert(r.get_si());
  }
  return out;
}

/// Fraction of Z_p that is a unit n-th power, counted mod p^M.
inline mpq_class epsilon(long p, long n, long M) {
  mpq_class r(static_cast<long>(unit_nth_powers(p, n, M).size()), ipow(p, M));
  r.canonicalize();
  return r;
}

/// Residue of a p-integral rational mod p^M.
inline long residue(const mpq_class& x, long p, long M) {
  const mpz_class mod = ipow(p, M);
  mpz_class inv;
  mpz_invert(inv.get_mpz_t(), x.get_den().get_mpz_t(), mod.get_mpz_t());
  mpz_class r = x.get_num() * inv;
  mpz_fdiv_r(r.get_mpz_t(), r.get_mpz_t(), mod.get_mpz_t());
  return r.get_si();
}

/// x in P_n decided by searching n-th roots of the unit part mod p^M (M large enough).
inline bool in_Pn(const mpq_class& x, long p, long n, long M) {
  if (x == 0) return false;
  const long v = vp(x, p);
  if (((v % n) + n) % n != 0) return false;
  mpq_class u = x;
  for (long i = 0; i < (v < 0 ? -v : v); ++i) u = v > 0 ? mpq_class(u / p) : mpq_class(u * p);
  return unit_nth_powers(p, n, M).count(residue(u, p, M)) > 0;
}

inline mpq_class pw(long p, long e) {
  mpq_class r = 1;
  for (long i = 0; i < (e < 0 ? -e : e); ++i) r = e > 0 ? mpq_class(r * p) : mpq_class(r / p);
  return r;
}

inline mpq_class norm(const mpq_class& x, long p) { return x == 0 ? mpq_class(0) : pw(p, -vp(x, p)); }

}  // namespace brute
