#include <gtest/gtest.h>

#include <random>

#include "brute.hpp"
#include "padic_cells/padic_cells.hpp"

using namespace padic_cells;

namespace {

Rational R(long a, long b = 1) { return make_rational(a, b); }

ConstructibleExpr C(const char* s) { return parse_constructible(s); }

Cell zp(long p) { return Cell{{ball_cell(0, 0, p)}}; }

CellCondition stage(std::optional<DTerm> alpha, bool alpha_strict, std::optional<DTerm> beta, bool beta_strict,
                    Rational mu, long n) {
  CellCondition c;
  c.lower = std::move(alpha);
  c.lower_strict = alpha_strict;
  c.upper = std::move(beta);
  c.upper_strict = beta_strict;
  c.center = DTerm::constant(0);
  c.coset = Coset(std::move(mu), n);
  return c;
}

OracleOptions threads(unsigned t) {
  OracleOptions o;
  o.threads = t;
  return o;
}

}  // namespace

TEST(Oracle, Examples) {
  const auto a = oracle_integrate(C("abs(x0)"), zp(3), Prime(3), 6);
  EXPECT_LE(abs(a.value - R(3, 4)), brute::pw(3, -5));
  ASSERT_TRUE(a.bound());
  EXPECT_LE(abs(a.value - R(3, 4)), *a.bound());
  EXPECT_FALSE(a.sampled);

  const auto b = oracle_integrate(C("abs(x0^2)"), zp(3), Prime(3), 6);
  ASSERT_TRUE(b.bound());
  EXPECT_LE(abs(b.value - R(9, 13)), *b.bound());

  for (long p : {2L, 3L, 5L}) {
    const auto c = oracle_integrate(C("1"), zp(p), Prime(p), 3);
    EXPECT_EQ(c.value, R(1));
    EXPECT_EQ(c.boundary_mass, R(0));
  }
}

TEST(OracleMeasure, Examples) {
  const Cell squares{{stage(std::nullopt, true, DTerm::constant(1), false, R(1), 2)}};
  const auto a = oracle_measure(squares, Prime(3), 6);
  EXPECT_LE(abs(a.value - R(3, 8)), brute::pw(3, -4));

  const auto b = oracle_measure(Cell{{ball_cell(0, 1, 3)}}, Prime(3), 4);
  EXPECT_EQ(b.value, R(1, 3));
  EXPECT_EQ(b.boundary_mass, R(0));

  const auto c = oracle_measure(Cell{{point_cell(DTerm::constant(2))}}, Prime(3), 4);
  EXPECT_EQ(c.value, R(0));
}

TEST(OracleMeasure, UnboundedDomainRejected) {
  const Cell outside{{stage(DTerm::constant(1), true, std::nullopt, true, R(1), 1)}};
  try {
    oracle_measure(outside, Prime(3), 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unbounded_domain);
  }
}

TEST(Stabilize, Examples) {
  const auto abs_t = [](long N) { return oracle_integrate(C("abs(x0)"), zp(3), Prime(3), N); };
  EXPECT_EQ(stabilize(abs_t, 2, 12, R(1, 1000)).resolution, 8);

  const auto ball = [](long N) { return oracle_measure(Cell{{ball_cell(0, 1, 3)}}, Prime(3), N); };
  EXPECT_EQ(stabilize(ball, 2, 12, R(1, 1000)).resolution, 2);

  const auto v_t = [](long N) { return oracle_integrate(C("v(x0)"), zp(3), Prime(3), N); };
  for (long N = 2; N <= 6; ++N) EXPECT_EQ(v_t(N).boundary_mass, brute::pw(3, -N));
  EXPECT_EQ(stabilize(v_t, 2, 12, R(1, 100)).resolution, 6);

  try {
    stabilize(abs_t, 2, 4, R(1, 1000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::did_not_stabilize);
  }
}

TEST(Oracle, TwoVariables) {
  Cell box;
  box.conditions = {ball_cell(0, 0, 3), ball_cell(0, 0, 3)};
  const auto r = oracle_integrate(C("abs(x0)*abs(x1 - 1)"), box, Prime(3), 3);
  ASSERT_TRUE(r.bound());
  EXPECT_LE(abs(r.value - R(3, 4) * R(3, 4)), *r.bound());
}

TEST(Oracle, Parameters) {
  Cell cell;
  cell.conditions.push_back(stage(std::nullopt, true, DTerm::constant(1), false, R(1), 1));
  cell.conditions.push_back(stage(DTerm::var(0), true, DTerm::constant(1), false, R(1), 1));
  for (long k = 1; k <= 4; ++k) {
    OracleOptions o;
    o.parameters = {brute::pw(3, k)};
    const auto r = oracle_integrate(C("abs(x1)"), cell, Prime(3), 6, o);
    CellIntegrand ci;
    ci.cell = cell;
    ci.terms.push_back({ConstructibleExpr::constant(1), 1, 0});
    const Rational exact = integrate_cell(ci, o.parameters, Prime(3)).value;
    // The fiber is residue-determined at N = 6 for k <= 4.
    EXPECT_EQ(r.value, exact);
    EXPECT_EQ(r.boundary_mass, R(0));
  }
  OracleOptions outside;
  outside.parameters = {R(0)};
  EXPECT_EQ(oracle_integrate(C("abs(x1)"), cell, Prime(3), 4, outside).value, R(0));
}

TEST(Oracle, SamplingIsLabelled) {
  OracleOptions o;
  o.budget = 50;
  const auto r = oracle_integrate(C("abs(x0)"), zp(3), Prime(3), 6, o);
  EXPECT_TRUE(r.sampled);
  EXPECT_LE(r.classes, 50u);
}

TEST(Properties, MonotoneRefinement) {
  for (const char* f : {"abs(x0)", "v(x0)*abs(x0 - 1)", "abs(x0^2 + 1)", "abs(x0^2 - 2)"})
    for (long p : {2L, 3L, 5L}) {
      Rational last = 2;
      for (long N = 1; N <= (p == 5 ? 4 : 7); ++N) {
        const auto r = oracle_integrate(C(f), zp(p), Prime(p), N);
        EXPECT_LE(r.boundary_mass, last) << f << " p=" << p << " N=" << N;
        last = r.boundary_mass;
      }
    }
}

TEST(Properties, DeterministicAcrossThreadCounts) {
  for (const char* f : {"abs(x0^2 - 1)", "v(x0)*abs(x0)", "abs(x0)^2 + 3*v(x0 - 2)"}) {
    const auto ref = oracle_integrate(C(f), zp(3), Prime(3), 7, threads(1));
    for (unsigned t : {2u, 3u, 8u}) {
      const auto r = oracle_integrate(C(f), zp(3), Prime(3), 7, threads(t));
      EXPECT_EQ(r.value, ref.value) << f << " threads=" << t;
      EXPECT_EQ(r.boundary_mass, ref.boundary_mass);
      EXPECT_EQ(r.boundary_sup, ref.boundary_sup);
      EXPECT_EQ(r.classes, ref.classes);
    }
    OracleOptions small = threads(4);
    small.budget = 300;
    OracleOptions small1 = threads(1);
    small1.budget = 300;
    EXPECT_EQ(oracle_integrate(C(f), zp(3), Prime(3), 7, small).value,
              oracle_integrate(C(f), zp(3), Prime(3), 7, small1).value);
  }
}

TEST(Properties, ExactOnResidueDeterminedInputs) {
  for (long p : {2L, 3L, 5L})
    for (long r = 0; r <= 2; ++r) {
      const auto res = oracle_measure(Cell{{ball_cell(1, r, p)}}, Prime(p), 3);
      EXPECT_EQ(res.value, brute::pw(p, -r));
      EXPECT_EQ(res.boundary_mass, R(0));
    }
  // |t| on the annulus {1/9 < |t| <= 1} at p = 3 is constant on classes mod 3^2.
  const Cell annulus{{stage(DTerm::constant(9), true, DTerm::constant(1), false, R(1), 1)}};
  const auto res = oracle_integrate(C("abs(x0)"), annulus, Prime(3), 3);
  EXPECT_EQ(res.boundary_mass, R(0));
  EXPECT_EQ(res.value, R(2, 3) + R(2, 9) * R(1, 3));
}

TEST(Properties, FiberMeasureAgreesWithOracle) {
  std::mt19937 rng(61);
  for (int i = 0; i < 30; ++i) {
    const long p = std::vector<long>{2, 3, 5}[static_cast<std::size_t>(i % 3)];
    const long n = std::uniform_int_distribution<long>(1, 3)(rng);
    const long vmu = std::uniform_int_distribution<long>(0, 3)(rng);
    long u = 0;
    while (u % p == 0) u = std::uniform_int_distribution<long>(1, 20)(rng);
    const long lo = std::uniform_int_distribution<long>(0, 1)(rng);
    const bool has_alpha = i % 2 == 0;
    const CellCondition c = stage(has_alpha ? std::optional<DTerm>(DTerm::constant(brute::pw(p, lo + 3))) : std::nullopt,
                                  true, DTerm::constant(brute::pw(p, lo)), false, brute::pw(p, vmu) * R(u), n);
    const Rational exact = fiber_measure(c, {}, Prime(p));
    const long N = p == 5 ? 4 : 6;
    const auto r = oracle_measure(Cell{{c}}, Prime(p), N);
    EXPECT_LE(abs(exact - r.value), r.boundary_mass) << "p=" << p << " n=" << n << " vmu=" << vmu << " u=" << u;
    EXPECT_LE(r.boundary_mass, brute::pw(p, -N + 2));
  }
}

TEST(Properties, SymbolicWithinOracleBound) {
  const char* corpus[] = {"abs(x0)",         "abs(x0^2)",          "abs(x0^2 - 1)",       "v(x0)*abs(x0)",
                          "v(x0 - 1)*abs(x0 - 1)", "abs(x0^3 - x0)", "abs(2*x0 + 1)^2", "v(x0^2 - 4)*abs(x0^2 - 4)",
                          "abs(x0^2 + 1)",   "3*abs(x0 - 2) - v(x0)*abs(x0)^2"};
  for (long p : {2L, 3L, 5L})
    for (const char* f : corpus) {
      const auto sym = integrate_auto(C(f), 0, 1, Prime(p));
      ASSERT_FALSE(sym.nonintegrable) << f;
      const Rational exact = *sym.value.as_constant();
      const auto coarse = oracle_integrate(C(f), zp(p), Prime(p), 3);
      const auto fine = oracle_integrate(C(f), zp(p), Prime(p), p == 5 ? 5 : 6);
      ASSERT_TRUE(coarse.bound() && fine.bound()) << f;
      EXPECT_LE(abs(exact - coarse.value), *coarse.bound()) << f << " p=" << p;
      EXPECT_LE(abs(exact - fine.value), *fine.bound()) << f << " p=" << p;
      EXPECT_LE(*fine.bound(), *coarse.bound()) << f << " p=" << p;
      EXPECT_LE(abs(exact - fine.value), abs(exact - coarse.value)) << f << " p=" << p;
    }
}
