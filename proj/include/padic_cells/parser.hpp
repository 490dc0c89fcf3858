#pragma once

// Recursive-descent parser for the expression language.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary ('*' unary)*
//   unary  := '-' unary | power
//   power  := primary ('^' exponent)?
//   primary:= rational | 'x'<index> | '(' expr ')' | 'inv(' expr ')'
//           | 'poly(' '[' rationals ']' ',' expr ')'
//           | 'series(' '[' rationals (';' 'tail' int)? ']' (',' expr)+ ')'
//           | 'v(' expr ')' | 'abs(' expr ')'          (constructible only)
//   exponent := nat | '(' '-'? rational ')' | '-' nat   (non-natural: abs only)
//
// Whitespace is ignored and '#' starts a comment running to end of line.
// D-function terms are normalized: every subterm that is a polynomial in a
// single atom (a variable, inverse, series or an irreducible compound) becomes
// a Poly node, so "x0^2 - 3" parses to Poly([-3, 0, 1], x0).

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "constructible.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "polynomial.hpp"

namespace padic_cells {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, SourceSpan span)
      : Error(ErrorCode::parse, what + " at [" + std::to_string(span.start) + ", " + std::to_string(span.end) + ")"),
        span_(span) {}
  const SourceSpan& span() const noexcept { return span_; }

 private:
  SourceSpan span_;
};

namespace detail {

struct Raw {
  enum class Kind { number, var, add, sub, mul, neg, pow, inv, poly, series, val, abs };
  Kind kind;
  Rational number;
  int index = 0;
  Rational exponent;
  std::vector<Raw> kids;
  std::vector<Rational> coeffs;
  std::optional<long> tail;
  SourceSpan span;
};

class RawParser {
 public:
  explicit RawParser(std::string_view text) : text_(text) {}

  Raw parse_all() {
    Raw r = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected input");
    return r;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, SourceSpan{pos_, std::min(pos_ + 1, text_.size())});
  }

  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  bool peek(char c) {
    skip();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  bool accept_word(std::string_view w) {
    skip();
    if (text_.substr(pos_, w.size()) != w) return false;
    const std::size_t after = pos_ + w.size();
    if (after < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_'))
      return false;
    pos_ = after;
    return true;
  }

  std::string digits() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("expected digits");
    return std::string(text_.substr(start, pos_ - start));
  }

  /// Unsigned rational literal "d" or "d/d".
  Rational unsigned_rational() {
    std::string s = digits();
    if (pos_ < text_.size() && text_[pos_] == '/' && pos_ + 1 < text_.size() &&
        std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))) {
      ++pos_;
      s += "/" + digits();
    }
    return parse_rational(s);
  }

  Rational signed_rational() {
    const bool negative = accept('-');
    Rational r = unsigned_rational();
    return negative ? Rational(-r) : r;
  }

  std::vector<Rational> rational_list(bool allow_tail, std::optional<long>* tail) {
    expect('[');
    std::vector<Rational> out;
    if (!peek(']') && !peek(';')) {
      out.push_back(signed_rational());
      while (accept(',')) out.push_back(signed_rational());
    }
    if (allow_tail && accept(';')) {
      if (!accept_word("tail")) fail("expected 'tail'");
      const bool negative = accept('-');
      const long t = std::stol(digits());
      *tail = negative ? -t : t;
    }
    expect(']');
    return out;
  }

  Raw make(Raw::Kind k, std::size_t start, std::vector<Raw> kids = {}) {
    Raw r;
    r.kind = k;
    r.kids = std::move(kids);
    r.span = {start, pos_};
    return r;
  }

  Raw expr() {
    skip();
    const std::size_t start = pos_;
    Raw lhs = term();
    while (true) {
      if (accept('+')) {
        Raw rhs = term();
        lhs = make(Raw::Kind::add, start, {std::move(lhs), std::move(rhs)});
      } else if (accept('-')) {
        Raw rhs = term();
        lhs = make(Raw::Kind::sub, start, {std::move(lhs), std::move(rhs)});
      } else {
        return lhs;
      }
    }
  }

  Raw term() {
    skip();
    const std::size_t start = pos_;
    Raw lhs = unary();
    while (accept('*')) {
      Raw rhs = unary();
      lhs = make(Raw::Kind::mul, start, {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Raw unary() {
    skip();
    const std::size_t start = pos_;
    if (accept('-')) return make(Raw::Kind::neg, start, {unary()});
    return power();
  }

  Raw power() {
    skip();
    const std::size_t start = pos_;
    Raw base = primary();
    if (!accept('^')) return base;
    Raw r = make(Raw::Kind::pow, start, {std::move(base)});
    if (accept('(')) {
      r.exponent = signed_rational();
      expect(')');
    } else if (accept('-')) {
      r.exponent = -unsigned_rational();
    } else {
      r.exponent = Rational(Integer(digits()));
    }
    r.span.end = pos_;
    return r;
  }

  Raw primary() {
    skip();
    const std::size_t start = pos_;
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Raw r = make(Raw::Kind::number, start);
      r.number = unsigned_rational();
      r.span.end = pos_;
      return r;
    }
    if (accept('(')) {
      Raw inner = expr();
      expect(')');
      return inner;
    }
    if (accept_word("inv")) {
      expect('(');
      Raw arg = expr();
      expect(')');
      return make(Raw::Kind::inv, start, {std::move(arg)});
    }
    if (accept_word("v")) {
      expect('(');
      Raw arg = expr();
      expect(')');
      return make(Raw::Kind::val, start, {std::move(arg)});
    }
    if (accept_word("abs")) {
      expect('(');
      Raw arg = expr();
      expect(')');
      return make(Raw::Kind::abs, start, {std::move(arg)});
    }
    if (accept_word("poly")) {
      expect('(');
      auto coeffs = rational_list(false, nullptr);
      expect(',');
      Raw arg = expr();
      expect(')');
      Raw r = make(Raw::Kind::poly, start, {std::move(arg)});
      r.coeffs = std::move(coeffs);
      return r;
    }
    if (accept_word("series")) {
      expect('(');
      std::optional<long> tail;
      auto coeffs = rational_list(true, &tail);
      std::vector<Raw> args;
      while (accept(',')) args.push_back(expr());
      expect(')');
      if (args.empty()) fail("series needs at least one argument");
      Raw r = make(Raw::Kind::series, start, std::move(args));
      r.coeffs = std::move(coeffs);
      r.tail = tail;
      return r;
    }
    if (c == 'x') {
      ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        fail("expected variable index after 'x'");
      Raw r = make(Raw::Kind::var, start);
      r.index = std::stoi(digits());
      r.span.end = pos_;
      return r;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

/// A normalized term viewed as a polynomial over at most one atom.
struct PolyView {
  std::optional<DTerm> atom;
  Polynomial poly;
};

inline PolyView view_of(const DTerm& t) {
  if (const auto* c = t.as<node::Const>()) return {std::nullopt, Polynomial::constant(c->value)};
  if (const auto* pl = t.as<node::Poly>()) return {*pl->arg, Polynomial(pl->coeffs)};
  return {t, Polynomial::monomial(1, 1)};
}

inline DTerm from_view(const std::optional<DTerm>& atom, const Polynomial& f) {
  if (!atom || f.degree() < 1) return DTerm::constant(f.coeff(0));
  if (f == Polynomial::monomial(1, 1)) return *atom;
  return DTerm::poly(f, *atom);
}

/// Combines two views when they share their atom (or one has none).
inline std::optional<std::optional<DTerm>> common_atom(const PolyView& a, const PolyView& b) {
  if (!a.atom) return std::optional<std::optional<DTerm>>(b.atom);
  if (!b.atom) return std::optional<std::optional<DTerm>>(a.atom);
  if (*a.atom == *b.atom) return std::optional<std::optional<DTerm>>(a.atom);
  return std::nullopt;
}

inline DTerm normalize_raw(const Raw& r);

inline DTerm normalize_binary(Raw::Kind kind, const DTerm& a, const DTerm& b) {
  const PolyView va = view_of(a), vb = view_of(b);
  if (auto atom = common_atom(va, vb)) {
    Polynomial f;
    if (kind == Raw::Kind::add) f = va.poly + vb.poly;
    else if (kind == Raw::Kind::sub) f = va.poly - vb.poly;
    else f = va.poly * vb.poly;
    return from_view(*atom, f);
  }
  if (kind == Raw::Kind::mul) return DTerm::mul(a, b);
  if (kind == Raw::Kind::add) return DTerm::add(a, b);
  return DTerm::add(a, from_view(vb.atom, -vb.poly));
}

inline DTerm normalize_raw(const Raw& r) {
  using K = Raw::Kind;
  switch (r.kind) {
    case K::number: return DTerm::constant(r.number);
    case K::var: return DTerm::var(r.index);
    case K::add:
    case K::sub:
    case K::mul: return normalize_binary(r.kind, normalize_raw(r.kids[0]), normalize_raw(r.kids[1]));
    case K::neg: {
      const PolyView v = view_of(normalize_raw(r.kids[0]));
      return from_view(v.atom, -v.poly);
    }
    case K::pow: {
      if (r.exponent.get_den() != 1 || r.exponent < 0)
        throw ParseError("only natural exponents are allowed here", r.span);
      const PolyView v = view_of(normalize_raw(r.kids[0]));
      return from_view(v.atom, v.poly.pow(static_cast<unsigned>(r.exponent.get_num().get_ui())));
    }
    case K::inv: {
      const DTerm a = normalize_raw(r.kids[0]);
      if (const auto* c = a.as<node::Const>()) return DTerm::constant(c->value == 0 ? Rational(0) : Rational(1 / c->value));
      return DTerm::inv(a);
    }
    case K::poly: {
      const PolyView v = view_of(normalize_raw(r.kids[0]));
      Polynomial composed;
      for (auto it = r.coeffs.rbegin(); it != r.coeffs.rend(); ++it)
        composed = composed * v.poly + Polynomial::constant(*it);
      return from_view(v.atom, composed);
    }
    case K::series: {
      std::vector<DTerm> args;
      for (const auto& k : r.kids) args.push_back(normalize_raw(k));
      return DTerm::series(r.coeffs, r.tail, args);
    }
    case K::val:
    case K::abs: throw ParseError("v(...) and abs(...) are only allowed in constructible expressions", r.span);
  }
  throw ParseError("unhandled node", r.span);
}

inline ConstructibleExpr constructible_from_raw(const Raw& r) {
  using K = Raw::Kind;
  switch (r.kind) {
    case K::number: return ConstructibleExpr::constant(r.number);
    case K::add: return constructible_from_raw(r.kids[0]) + constructible_from_raw(r.kids[1]);
    case K::sub: return constructible_from_raw(r.kids[0]) - constructible_from_raw(r.kids[1]);
    case K::mul: return constructible_from_raw(r.kids[0]) * constructible_from_raw(r.kids[1]);
    case K::neg: return Rational(-1) * constructible_from_raw(r.kids[0]);
    case K::val: return ConstructibleExpr::valuation_of(normalize_raw(r.kids[0]));
    case K::abs: return ConstructibleExpr::norm_of(normalize_raw(r.kids[0]));
    case K::pow: {
      const Raw& base = r.kids[0];
      if (base.kind == K::abs) {
        if (r.exponent == 0) return ConstructibleExpr::constant(1);
        return ConstructibleExpr::norm_of(normalize_raw(base.kids[0]), r.exponent);
      }
      if (r.exponent.get_den() != 1 || r.exponent < 0)
        throw ParseError("only abs(...) may carry a negative or fractional exponent", r.span);
      ConstructibleExpr out = ConstructibleExpr::constant(1);
      const ConstructibleExpr b = constructible_from_raw(base);
      for (unsigned long i = 0; i < r.exponent.get_num().get_ui(); ++i) out = out * b;
      return out;
    }
    default:
      throw ParseError("expected a constructible expression (rationals, v(...), abs(...))", r.span);
  }
}

}  // namespace detail

inline DTerm parse_dterm(std::string_view text) {
  detail::RawParser parser(text);
  return detail::normalize_raw(parser.parse_all());
}

inline ConstructibleExpr parse_constructible(std::string_view text) {
  detail::RawParser parser(text);
  return detail::constructible_from_raw(parser.parse_all());
}

/// Re-normalizes an arbitrary AST (as the parser would have built it).
inline DTerm normalize(const DTerm& t) { return parse_dterm(print(t)); }

}  // namespace padic_cells
