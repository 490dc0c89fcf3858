#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "brute.hpp"
#include "padic_cells/cells.hpp"

using namespace padic_cells;

namespace {

Rational R(long a, long b = 1) { return make_rational(a, b); }

CellCondition stage(std::optional<Rational> alpha, bool alpha_strict, std::optional<Rational> beta, bool beta_strict,
                    Rational gamma, Rational mu, long n) {
  CellCondition c;
  if (alpha) c.lower = DTerm::constant(*alpha);
  c.lower_strict = alpha_strict;
  if (beta) c.upper = DTerm::constant(*beta);
  c.upper_strict = beta_strict;
  c.center = DTerm::constant(gamma);
  c.coset = Coset(mu, n);
  return c;
}

Cell one(CellCondition c) { return Cell{{std::move(c)}}; }

}  // namespace

TEST(LevelSetMeasure, Examples) {
  EXPECT_EQ(level_set_measure(Coset(1, 1), Prime(3)).epsilon, R(2, 3));
  EXPECT_EQ(level_set_measure(Coset(1, 2), Prime(3)).epsilon, R(1, 3));
  EXPECT_EQ(level_set_measure(Coset(1, 2), Prime(2)).epsilon, R(1, 8));
  EXPECT_EQ(brute::epsilon(3, 2, 2), R(1, 3));
  EXPECT_EQ(brute::epsilon(2, 2, 5), R(1, 8));
}

TEST(LevelSetMeasure, MatchesCountingForNonTrivialCosets) {
  for (long p : {2L, 3L, 5L})
    for (long n = 1; n <= 4; ++n) {
      const long M = hensel_depth(p, n) + 1;
      const auto powers = brute::unit_nth_powers(p, n, M);
      for (long u = 1; u < std::min(brute::ipow(p, M), 40L); ++u) {
        if (u % p == 0) continue;
        for (long j = -2; j <= 2; ++j) {
          const Rational mu = brute::pw(p, j) * R(u);
          // Count units w mod p^M with w * p^j in mu P_n, i.e. w / u an n-th power and n | 0.
          long count = 0;
          for (long w = 1; w < brute::ipow(p, M); ++w) {
            if (w % p == 0) continue;
            for (long y : powers)
              if ((y * u - w) % brute::ipow(p, M) == 0) {
                ++count;
                break;
              }
          }
          const Rational expected = R(count, brute::ipow(p, M));
          EXPECT_EQ(level_set_measure(Coset(mu, n), Prime(p)).epsilon, expected)
              << "p=" << p << " n=" << n << " mu=" << to_string(mu);
        }
      }
    }
}

TEST(LevelSetMeasure, PointCosetRejected) { EXPECT_THROW(level_set_measure(Coset(0, 2), Prime(3)), Error); }

TEST(LevelSetMeasure, ThreadSafeMemo) {
  std::vector<std::thread> threads;
  std::vector<std::vector<Rational>> results(8);
  for (int i = 0; i < 8; ++i)
    threads.emplace_back([&, i] {
      for (long p : {2L, 3L, 5L, 7L})
        for (long n = 1; n <= 4; ++n) results[static_cast<std::size_t>(i)].push_back(level_set_measure(Coset(R(p + 1), n), Prime(p)).epsilon);
    });
  for (auto& t : threads) t.join();
  for (int i = 1; i < 8; ++i) EXPECT_EQ(results[static_cast<std::size_t>(i)], results[0]);
}

TEST(FiberMembership, Examples) {
  const Cell small = one(stage(std::nullopt, true, R(1), true, R(0), R(1), 1));
  const std::vector<Rational> three{R(3)}, unit{R(1)};
  EXPECT_TRUE(fiber_membership(small, three, 3, 1));
  EXPECT_FALSE(fiber_membership(small, unit, 3, 1));
  const Cell graph = one(point_cell(DTerm::constant(R(5, 2))));
  const std::vector<Rational> at{R(5, 2)}, off{R(2)};
  EXPECT_TRUE(fiber_membership(graph, at, 3, 1));
  EXPECT_FALSE(fiber_membership(graph, off, 3, 1));
}

TEST(FiberMembership, ScalarOverload) {
  const Cell small = one(stage(std::nullopt, true, R(1), true, R(0), R(1), 1));
  const std::vector<PAdicScalar> pt{PAdicScalar(R(9), Prime(3))};
  EXPECT_TRUE(fiber_membership(small, pt, 1));
}

TEST(FiberMembership, BallCellIsTheWholeBall) {
  for (long p : {2L, 3L, 5L})
    for (long r = 0; r <= 2; ++r)
      for (long c : {0L, 1L, 4L}) {
        const Cell ball = one(ball_cell(R(c), r, p));
        const long mod = brute::ipow(p, r + 3);
        for (long t = -mod; t < mod; ++t) {
          const std::vector<Rational> pt{R(t)};
          const bool expected = brute::vp(mpq_class(t - c), p) >= r;
          EXPECT_EQ(fiber_membership(ball, pt, p, hensel_depth(p, p - 1) + 1), expected)
              << "p=" << p << " r=" << r << " c=" << c << " t=" << t;
        }
      }
}

TEST(ValuationRange, Examples) {
  const auto a = fiber_valuation_range(stage(std::nullopt, true, R(1), false, R(0), R(1), 1), {}, 3);
  ASSERT_TRUE(a.k_min.has_value());
  EXPECT_EQ(*a.k_min, 0);
  EXPECT_FALSE(a.k_max.has_value());

  const auto b = fiber_valuation_range(stage(R(9), true, std::nullopt, true, R(0), R(1), 1), {}, 3);
  EXPECT_FALSE(b.k_min.has_value());
  ASSERT_TRUE(b.k_max.has_value());
  EXPECT_EQ(*b.k_max, 1);

  const auto c = fiber_valuation_range(stage(R(81), true, R(1), true, R(0), R(3), 2), {}, 3);
  std::vector<long> ks;
  for (long k = -2; k <= 7; ++k)
    if (c.contains(k)) ks.push_back(k);
  EXPECT_EQ(ks, (std::vector<long>{1, 3}));
  // Unfolding the definition directly: |81| < 3^{-k} < |1| with k odd.
  std::vector<long> direct;
  for (long k = 0; k <= 5; ++k)
    if (4 > k && k > 0 && k % 2 == 1) direct.push_back(k);
  EXPECT_EQ(ks, direct);
}

TEST(ValuationRange, EmptyProgression) {
  const auto r = fiber_valuation_range(stage(R(9), true, R(3), true, R(0), R(1), 2), {}, 3);
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(fiber_measure(stage(R(9), true, R(3), true, R(0), R(1), 2), {}, Prime(3)), R(0));
}

TEST(FiberMeasure, Examples) {
  EXPECT_EQ(fiber_measure(stage(std::nullopt, true, R(1), false, R(0), R(1), 1), {}, Prime(3)), R(1));
  EXPECT_EQ(fiber_measure(stage(std::nullopt, true, R(1), false, R(0), R(1), 2), {}, Prime(3)), R(3, 8));
  EXPECT_EQ(fiber_measure(stage(std::nullopt, true, R(1), true, R(0), R(1), 1), {}, Prime(3)), R(1, 3));
}

TEST(FiberMeasure, SquaresAgainstResidueCount) {
  // Residues t mod 3^6 that are nonzero squares with decided membership: v(t) < 6, v even, unit part = 1 mod 3.
  long inside = 0;
  const long mod = brute::ipow(3, 6);
  for (long t = 1; t < mod; ++t) {
    const long v = brute::vp(mpz_class(t), 3);
    long u = t;
    for (long i = 0; i < v; ++i) u /= 3;
    if (v % 2 == 0 && u % 3 == 1) ++inside;
  }
  const Rational counted = R(inside, mod);
  const Rational exact = fiber_measure(stage(std::nullopt, true, R(1), false, R(0), R(1), 2), {}, Prime(3));
  EXPECT_LE(abs(exact - counted), R(1, mod));
}

TEST(FiberMeasure, UnboundedFiberThrows) {
  try {
    fiber_measure(stage(R(1), true, std::nullopt, true, R(0), R(1), 1), {}, Prime(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::infinite_measure);
  }
}

TEST(FiberMeasure, ParametrizedBounds) {
  // Over x0: {t : |x0| < |t| <= 1}.
  CellCondition c;
  c.lower = DTerm::var(0);
  c.upper = DTerm::constant(1);
  c.upper_strict = false;
  c.center = DTerm::constant(0);
  c.coset = Coset(1, 1);
  for (long k = 1; k <= 5; ++k) {
    const std::vector<Rational> base{brute::pw(3, k)};
    EXPECT_EQ(fiber_measure(c, base, Prime(3)), 1 - brute::pw(3, -k));
  }
}

TEST(Properties, CosetsPartitionTheSphere) {
  for (long p : {2L, 3L, 5L})
    for (long n = 1; n <= 4; ++n) {
      const long M = hensel_depth(p, n) + 2;
      std::vector<long> reps;
      for (long u = 1; u < brute::ipow(p, M); ++u) {
        if (u % p == 0) continue;
        bool fresh = true;
        for (long r : reps)
          if (brute::in_Pn(R(u, r), p, n, M)) fresh = false;
        if (fresh) reps.push_back(u);
      }
      Rational total = 0;
      for (long j = 0; j < n; ++j)
        for (long u : reps)
          total += fiber_measure(stage(std::nullopt, true, R(1), false, R(0), brute::pw(p, j) * R(u), n), {}, Prime(p));
      EXPECT_EQ(total, R(1)) << "p=" << p << " n=" << n << " classes=" << reps.size();
    }
}

TEST(Properties, ExponentIntegralityOnMembers) {
  std::mt19937 rng(41);
  for (long p : {2L, 3L})
    for (long n = 1; n <= 4; ++n)
      for (long j = 0; j < n; ++j) {
        const Rational mu = brute::pw(p, j);
        const Cell cell = one(stage(std::nullopt, true, R(1), false, R(0), mu, n));
        int members = 0;
        for (int i = 0; i < 400; ++i) {
          const long t = std::uniform_int_distribution<long>(1, 5000)(rng);
          const std::vector<Rational> pt{R(t)};
          if (!fiber_membership(cell, pt, p, hensel_depth(p, n))) continue;
          ++members;
          for (long a = -5; a <= 5; ++a) EXPECT_EQ(mod_floor(a * (brute::vp(mpz_class(t), p) - j), n), 0);
          EXPECT_TRUE(brute::in_Pn(R(t) / mu, p, n, hensel_depth(p, n) + 2));
        }
        EXPECT_GT(members, 0);
      }
}

TEST(RootCenter, SquareRootOfTwoInZ7) {
  // 3^2 = 2 mod 7; the root in 3 + 7Z_7.
  const RootCenter root(Polynomial({R(-2), R(0), R(1)}), R(3), 1, 7);
  const Rational a = root.approximation(10);
  EXPECT_GE(valuation(a * a - 2, 7), ExtendedInt(10));
  EXPECT_EQ(brute::residue(a, 7, 1), 3);
}

TEST(RootCenter, RejectsNonIsolatingBall) {
  EXPECT_THROW(RootCenter(Polynomial({R(-1), R(0), R(1)}), R(0), 0, 2), Error);
}
