#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "brute.hpp"
#include "padic_cells/constructible.hpp"
#include "padic_cells/parser.hpp"

using namespace padic_cells;

namespace {

Rational R(long a, long b = 1) { return make_rational(a, b); }

/// Plain recursive evaluator over Q; inv(0) = 0.
Rational direct_eval(const DTerm& t, const std::vector<Rational>& x) {
  if (auto* v = t.as<node::Var>()) return x.at(static_cast<std::size_t>(v->index));
  if (auto* c = t.as<node::Const>()) return c->value;
  if (auto* a = t.as<node::Add>()) return direct_eval(*a->lhs, x) + direct_eval(*a->rhs, x);
  if (auto* m = t.as<node::Mul>()) return direct_eval(*m->lhs, x) * direct_eval(*m->rhs, x);
  if (auto* n = t.as<node::Neg>()) return -direct_eval(*n->arg, x);
  if (auto* i = t.as<node::Inv>()) {
    const Rational y = direct_eval(*i->arg, x);
    return y == 0 ? Rational(0) : Rational(1 / y);
  }
  if (auto* pl = t.as<node::Poly>()) {
    const Rational y = direct_eval(*pl->arg, x);
    Rational acc = 0, pw = 1;
    for (const auto& c : pl->coeffs) {
      acc += c * pw;
      pw *= y;
    }
    return acc;
  }
  throw std::logic_error("series");
}

DTerm random_term(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 6);
  std::uniform_int_distribution<long> c(-5, 5);
  switch (kind(rng)) {
    case 0: return DTerm::var(std::uniform_int_distribution<int>(0, 2)(rng));
    case 1: return DTerm::constant(R(c(rng), std::uniform_int_distribution<long>(1, 4)(rng)));
    case 2: return DTerm::add(random_term(rng, depth - 1), random_term(rng, depth - 1));
    case 3: return DTerm::mul(random_term(rng, depth - 1), random_term(rng, depth - 1));
    case 4: return DTerm::neg(random_term(rng, depth - 1));
    case 5: return DTerm::inv(random_term(rng, depth - 1));
    default: return DTerm::poly({R(c(rng)), R(c(rng)), R(1)}, random_term(rng, depth - 1));
  }
}

}  // namespace

TEST(Parse, PolynomialExample) {
  EXPECT_EQ(parse_dterm("x0^2 - 3"), DTerm::poly({R(-3), R(0), R(1)}, DTerm::var(0)));
}

TEST(Parse, InverseExample) { EXPECT_EQ(parse_dterm("inv(x1)"), DTerm::inv(DTerm::var(1))); }

TEST(Parse, RationalLiteral) { EXPECT_EQ(parse_dterm("1/3"), DTerm::constant(R(1, 3))); }

TEST(Parse, SeriesLiteral) {
  const DTerm s = parse_dterm("series([1, 3, 9; tail 3], x0)");
  const auto* n = s.as<node::Series>();
  ASSERT_NE(n, nullptr);
  EXPECT_EQ(n->coeffs.size(), 3u);
  ASSERT_TRUE(n->tail_valuation.has_value());
  EXPECT_EQ(*n->tail_valuation, 3);
}

TEST(Parse, ErrorsCarrySpan) {
  try {
    parse_dterm("x0 + * 2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse);
    EXPECT_GE(e.span().start, 3u);
    EXPECT_LE(e.span().start, 5u);
  }
  EXPECT_THROW(parse_dterm("x0 +"), ParseError);
  EXPECT_THROW(parse_dterm("(x0"), ParseError);
  EXPECT_THROW(parse_dterm("y3"), ParseError);
}

TEST(Eval, Examples) {
  const std::vector<Rational> zero{R(0)};
  EXPECT_EQ(evaluate_exact(DTerm::inv(DTerm::var(0)), zero, 3), R(0));
  const std::vector<Rational> three{R(3)};
  EXPECT_EQ(evaluate_exact(parse_dterm("x0^2 - 3"), three, 3), R(6));
}

TEST(Eval, SeriesTruncationErrorIsReported) {
  // sum 3^i x^i with four listed terms and tail 4, at x = 1.
  const DTerm s = parse_dterm("series([1, 3, 9, 27; tail 4], x0)");
  const std::vector<Approx> one{Approx::exact(R(1))};
  const Approx a = evaluate(s, one, 3);
  EXPECT_EQ(a.value, R(40));
  ASSERT_TRUE(a.error.has_value());
  EXPECT_GE(*a.error, ExtendedInt(4));
}

TEST(Eval, SeriesTruncationMonotone) {
  // Listing more terms of the same series changes the value only inside the reported error.
  for (long k = 2; k <= 6; ++k) {
    std::vector<std::string> cs;
    std::string coarse = "series([", fine = "series([";
    for (long i = 0; i < k + 4; ++i) {
      const std::string c = prime_power(3, i).get_str();
      if (i < k) coarse += (i ? ", " : "") + c;
      fine += (i ? ", " : "") + c;
    }
    coarse += "; tail " + std::to_string(k) + "], x0)";
    fine += "; tail " + std::to_string(k + 4) + "], x0)";
    for (long x : {1L, 2L, 5L}) {
      const std::vector<Approx> pt{Approx::exact(R(x))};
      const Approx a = evaluate(parse_dterm(coarse), pt, 3);
      const Approx b = evaluate(parse_dterm(fine), pt, 3);
      ASSERT_TRUE(a.error && b.error);
      EXPECT_GE(valuation(a.value - b.value, 3), *a.error);
      EXPECT_GE(*b.error, *a.error);
    }
  }
}

TEST(Eval, ArityMismatchThrows) {
  const std::vector<Rational> one{R(1)};
  EXPECT_THROW(evaluate_exact(parse_dterm("x0 + x2"), one, 3), Error);
}

TEST(Properties, PrintParseRoundTrip) {
  std::mt19937 rng(17);
  for (int i = 0; i < 300; ++i) {
    const DTerm normal = normalize(random_term(rng, 4));
    EXPECT_EQ(parse_dterm(print(normal)), normal) << print(normal);
  }
}

TEST(Properties, EvaluationMatchesDirectArithmetic) {
  std::mt19937 rng(23);
  std::uniform_int_distribution<long> c(-30, 30);
  for (int i = 0; i < 300; ++i) {
    const DTerm t = random_term(rng, 4);
    const std::vector<Rational> x{R(c(rng), 1 + std::labs(c(rng)) % 7), R(c(rng)), R(c(rng), 3)};
    const Rational expected = direct_eval(t, x);
    EXPECT_EQ(evaluate_exact(t, x, 5), expected) << print(t);
    EXPECT_EQ(evaluate_exact(normalize(t), x, 5), expected) << print(t);
  }
}

TEST(Constructible, Examples) {
  const std::vector<Rational> nine{R(9)}, zero{R(0)}, three{R(3)};
  EXPECT_EQ(eval_constructible(parse_constructible("v(x0)"), nine, 3), R(2));
  EXPECT_EQ(eval_constructible(parse_constructible("abs(x0)"), zero, 3), R(0));
  EXPECT_EQ(eval_constructible(parse_constructible("2*v(x0)*abs(x0)"), three, 3), R(2, 3));
  try {
    eval_constructible(parse_constructible("v(x0)"), zero, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_valuation);
  }
}

TEST(Constructible, PrintParseRoundTrip) {
  for (const char* s : {"v(x0)*abs(x1)^2 - 1/2", "abs(x0^2 - 1)", "3*v(x0)^2 + abs(inv(x0))", "0"}) {
    const auto f = parse_constructible(s);
    EXPECT_EQ(parse_constructible(f.to_string()), f) << s;
  }
}

TEST(Properties, ConstructibleEvaluationIsLinear) {
  std::mt19937 rng(29);
  const auto f = parse_constructible("v(x0)*abs(x1) + 2");
  const auto g = parse_constructible("abs(x0*x1 - 1)^2 - v(x1)");
  std::uniform_int_distribution<long> c(-40, 40);
  for (int i = 0; i < 100; ++i) {
    std::vector<Rational> x{R(c(rng)), R(c(rng), 1 + std::labs(c(rng)))};
    if (x[0] == 0 || x[1] == 0) continue;
    const Rational a = R(c(rng), 7), b = R(c(rng), 5);
    const auto combo = a * f + b * g;
    EXPECT_EQ(eval_constructible(combo, x, 3), a * eval_constructible(f, x, 3) + b * eval_constructible(g, x, 3));
    // Against direct valuations.
    const Rational direct_f = brute::vp(x[0], 3) * brute::norm(x[1], 3) + 2;
    EXPECT_EQ(eval_constructible(f, x, 3), direct_f);
  }
}
