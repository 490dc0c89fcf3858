#pragma once

// D-function terms: polynomials, the field inverse (with 0^{-1} = 0),
// truncated restricted power series and their compositions.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "error.hpp"
#include "padic.hpp"
#include "polynomial.hpp"
#include "rational.hpp"

namespace padic_cells {

struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
};

class DTerm;

namespace node {
struct Var {
  int index;
};
struct Const {
  Rational value;
};
struct Add {
  std::shared_ptr<const DTerm> lhs, rhs;
};
struct Mul {
  std::shared_ptr<const DTerm> lhs, rhs;
};
struct Neg {
  std::shared_ptr<const DTerm> arg;
};
struct Inv {
  std::shared_ptr<const DTerm> arg;
};
/// coeffs[0] + coeffs[1]*arg + ...
struct Poly {
  std::vector<Rational> coeffs;
  std::shared_ptr<const DTerm> arg;
};
/// Finitely many coefficients of a restricted power series, listed in graded
/// lexicographic order of multi-indices, plus a lower bound for the valuation
/// of every omitted coefficient (absent: the series is exactly this sum).
struct Series {
  std::vector<Rational> coeffs;
  std::optional<long> tail_valuation;
  std::vector<std::shared_ptr<const DTerm>> args;
};
}  // namespace node

/// Immutable AST handle with structural equality.
class DTerm {
 public:
  using Node = std::variant<node::Var, node::Const, node::Add, node::Mul, node::Neg, node::Inv, node::Poly,
                            node::Series>;

  DTerm() : DTerm(node::Const{Rational(0)}) {}
  explicit DTerm(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

  static DTerm var(int index) { return DTerm(node::Var{index}); }
  static DTerm constant(const Rational& c) { return DTerm(node::Const{c}); }
  static DTerm add(const DTerm& a, const DTerm& b) { return DTerm(node::Add{wrap(a), wrap(b)}); }
  static DTerm mul(const DTerm& a, const DTerm& b) { return DTerm(node::Mul{wrap(a), wrap(b)}); }
  static DTerm neg(const DTerm& a) { return DTerm(node::Neg{wrap(a)}); }
  static DTerm inv(const DTerm& a) { return DTerm(node::Inv{wrap(a)}); }
  static DTerm poly(std::vector<Rational> coeffs, const DTerm& arg) {
    return DTerm(node::Poly{std::move(coeffs), wrap(arg)});
  }
  static DTerm poly(const Polynomial& f, const DTerm& arg) { return poly(f.coeffs(), arg); }
  static DTerm series(std::vector<Rational> coeffs, std::optional<long> tail, const std::vector<DTerm>& args) {
    node::Series s{std::move(coeffs), tail, {}};
    for (const auto& a : args) s.args.push_back(wrap(a));
    return DTerm(std::move(s));
  }

  const Node& node() const { return *node_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(node_.get());
  }

  bool is_constant() const { return as<node::Const>() != nullptr; }

  /// Largest variable index used, or -1.
  int max_variable() const;
  bool depends_on(int index) const;
  bool has_series() const;

  friend bool operator==(const DTerm& a, const DTerm& b);

 private:
  static std::shared_ptr<const DTerm> wrap(const DTerm& t) { return std::make_shared<const DTerm>(t); }

  std::shared_ptr<const Node> node_;
};

inline bool operator==(const DTerm& a, const DTerm& b) {
  if (a.node_ == b.node_) return true;
  if (a.node_->index() != b.node_->index()) return false;
  auto eq = [](const std::shared_ptr<const DTerm>& x, const std::shared_ptr<const DTerm>& y) { return *x == *y; };
  return std::visit(
      [&](const auto& lhs) -> bool {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(*b.node_);
        if constexpr (std::is_same_v<T, node::Var>) return lhs.index == rhs.index;
        else if constexpr (std::is_same_v<T, node::Const>) return lhs.value == rhs.value;
        else if constexpr (std::is_same_v<T, node::Add> || std::is_same_v<T, node::Mul>)
          return eq(lhs.lhs, rhs.lhs) && eq(lhs.rhs, rhs.rhs);
        else if constexpr (std::is_same_v<T, node::Neg> || std::is_same_v<T, node::Inv>) return eq(lhs.arg, rhs.arg);
        else if constexpr (std::is_same_v<T, node::Poly>) return lhs.coeffs == rhs.coeffs && eq(lhs.arg, rhs.arg);
        else {
          if (lhs.coeffs != rhs.coeffs || lhs.tail_valuation != rhs.tail_valuation || lhs.args.size() != rhs.args.size())
            return false;
          for (std::size_t i = 0; i < lhs.args.size(); ++i)
            if (!eq(lhs.args[i], rhs.args[i])) return false;
          return true;
        }
      },
      *a.node_);
}

template <class F>
void for_each_child(const DTerm& t, F&& f) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Add> || std::is_same_v<T, node::Mul>) {
          f(*n.lhs);
          f(*n.rhs);
        } else if constexpr (std::is_same_v<T, node::Neg> || std::is_same_v<T, node::Inv> ||
                             std::is_same_v<T, node::Poly>) {
          f(*n.arg);
        } else if constexpr (std::is_same_v<T, node::Series>) {
          for (const auto& a : n.args) f(*a);
        }
      },
      t.node());
}

inline int DTerm::max_variable() const {
  if (const auto* v = as<node::Var>()) return v->index;
  int m = -1;
  for_each_child(*this, [&](const DTerm& c) { m = std::max(m, c.max_variable()); });
  return m;
}

inline bool DTerm::depends_on(int index) const {
  if (const auto* v = as<node::Var>()) return v->index == index;
  bool found = false;
  for_each_child(*this, [&](const DTerm& c) { found = found || c.depends_on(index); });
  return found;
}

inline bool DTerm::has_series() const {
  if (as<node::Series>()) return true;
  bool found = false;
  for_each_child(*this, [&](const DTerm& c) { found = found || c.has_series(); });
  return found;
}

/// Exponent vectors of m variables in graded lexicographic order, `count` of them.
inline std::vector<std::vector<long>> graded_multi_indices(std::size_t m, std::size_t count) {
  std::vector<std::vector<long>> out;
  if (m == 0) {
    if (count > 0) out.emplace_back();
    return out;
  }
  for (long degree = 0; out.size() < count; ++degree) {
    // Enumerate exponent vectors of total `degree`, first exponent descending.
    std::vector<long> e(m, 0);
    std::vector<std::vector<long>> level;
    auto rec = [&](auto&& self, std::size_t i, long remaining) -> void {
      if (i + 1 == m) {
        e[i] = remaining;
        level.push_back(e);
        return;
      }
      for (long k = remaining; k >= 0; --k) {
        e[i] = k;
        self(self, i + 1, remaining - k);
      }
    };
    rec(rec, 0, degree);
    for (auto& v : level) {
      if (out.size() == count) break;
      out.push_back(std::move(v));
    }
  }
  return out;
}

/// A value known up to an error: the true value t satisfies v(t - value) >= error.
/// error = +inf means exact; no error means nothing is known.
struct Approx {
  Rational value;
  std::optional<ExtendedInt> error = ExtendedInt::infinity();

  static Approx exact(Rational r) { return {std::move(r), ExtendedInt::infinity()}; }
  static Approx unknown() { return {Rational(0), std::nullopt}; }

  bool is_exact() const { return error && error->is_infinite(); }
  bool is_known() const { return error.has_value(); }

  /// The valuation of the true value when the approximation pins it down.
  std::optional<ExtendedInt> determined_valuation(long p) const {
    if (!error) return std::nullopt;
    const ExtendedInt v = valuation(value, p);
    if (v < *error) return v;
    if (error->is_infinite()) return v;  // exact (possibly zero)
    return std::nullopt;
  }
};

namespace detail {

inline Approx approx_add(const Approx& a, const Approx& b) {
  if (!a.error || !b.error) return Approx::unknown();
  return {a.value + b.value, min(*a.error, *b.error)};
}

inline Approx approx_mul(const Approx& a, const Approx& b, long p) {
  if ((a.is_exact() && a.value == 0) || (b.is_exact() && b.value == 0)) return Approx::exact(Rational(0));
  if (!a.error || !b.error) return Approx::unknown();
  const ExtendedInt va = valuation(a.value, p);
  const ExtendedInt vb = valuation(b.value, p);
  const ExtendedInt err = min(min(va + *b.error, vb + *a.error), *a.error + *b.error);
  return {a.value * b.value, err};
}

inline Approx approx_inv(const Approx& a, long p) {
  if (a.is_exact()) return Approx::exact(a.value == 0 ? Rational(0) : Rational(1 / a.value));
  if (!a.error) return Approx::unknown();
  const ExtendedInt va = valuation(a.value, p);
  if (!(va < *a.error)) return Approx::unknown();
  return {1 / a.value, *a.error - 2 * va.value()};
}

inline Approx approx_poly(const std::vector<Rational>& coeffs, const Approx& x, long p) {
  Approx acc = Approx::exact(Rational(0));
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = approx_add(approx_mul(acc, x, p), Approx::exact(*it));
  return acc;
}

inline Approx approx_series(const node::Series& s, const std::vector<Approx>& args, long p) {
  // Outside the unit polydisc the function is 0; inside, the tail and the
  // argument errors bound the deviation of the truncated sum.
  bool all_inside = true;
  for (const auto& a : args) {
    if (!a.error) return Approx::unknown();
    const ExtendedInt v = valuation(a.value, p);
    const bool inside = v >= ExtendedInt(0) && *a.error >= ExtendedInt(0);
    const bool outside = v < ExtendedInt(0) && v < *a.error;
    if (outside) return Approx::exact(Rational(0));
    if (!inside) all_inside = false;
  }
  if (!all_inside) return Approx::unknown();
  const auto indices = graded_multi_indices(args.size(), s.coeffs.size());
  Rational sum = 0;
  ExtendedInt coeff_floor = s.tail_valuation ? ExtendedInt(*s.tail_valuation) : ExtendedInt::infinity();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (s.coeffs[i] == 0) continue;
    Rational term = s.coeffs[i];
    bool constant_term = true;
    for (std::size_t j = 0; j < args.size(); ++j) {
      if (indices[i][j] > 0) constant_term = false;
      term *= rpow(args[j].value, indices[i][j]);
    }
    if (!constant_term) coeff_floor = min(coeff_floor, valuation(s.coeffs[i], p));
    sum += term;
  }
  ExtendedInt arg_err = ExtendedInt::infinity();
  for (const auto& a : args) arg_err = min(arg_err, *a.error);
  ExtendedInt err = s.tail_valuation ? ExtendedInt(*s.tail_valuation) : ExtendedInt::infinity();
  if (arg_err.is_finite()) err = min(err, arg_err + coeff_floor);
  return {sum, err};
}

}  // namespace detail

/// Evaluates t at a point given as approximations (exact rationals for plain points).
inline Approx evaluate(const DTerm& t, std::span<const Approx> point, long p) {
  return std::visit(
      [&](const auto& n) -> Approx {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Var>) {
          if (n.index < 0 || static_cast<std::size_t>(n.index) >= point.size())
            throw Error(ErrorCode::arity, "variable x" + std::to_string(n.index) + " not provided");
          return point[static_cast<std::size_t>(n.index)];
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return Approx::exact(n.value);
        } else if constexpr (std::is_same_v<T, node::Add>) {
          return detail::approx_add(evaluate(*n.lhs, point, p), evaluate(*n.rhs, point, p));
        } else if constexpr (std::is_same_v<T, node::Mul>) {
          return detail::approx_mul(evaluate(*n.lhs, point, p), evaluate(*n.rhs, point, p), p);
        } else if constexpr (std::is_same_v<T, node::Neg>) {
          Approx a = evaluate(*n.arg, point, p);
          a.value = -a.value;
          return a;
        } else if constexpr (std::is_same_v<T, node::Inv>) {
          return detail::approx_inv(evaluate(*n.arg, point, p), p);
        } else if constexpr (std::is_same_v<T, node::Poly>) {
          return detail::approx_poly(n.coeffs, evaluate(*n.arg, point, p), p);
        } else {
          std::vector<Approx> args;
          for (const auto& a : n.args) args.push_back(evaluate(*a, point, p));
          return detail::approx_series(n, args, p);
        }
      },
      t.node());
}

inline std::vector<Approx> exact_point(std::span<const Rational> xs) {
  std::vector<Approx> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(Approx::exact(x));
  return out;
}

/// Value of a D-function at an exact point, with the valuation of the
/// truncation error (+inf when the result is exact).
struct DTermValue {
  PAdicScalar value;
  std::optional<ExtendedInt> error_valuation;
};

inline DTermValue eval_dterm(const DTerm& t, std::span<const PAdicScalar> point) {
  if (point.empty()) {
    if (t.max_variable() >= 0) throw Error(ErrorCode::arity, "empty point");
    throw Error(ErrorCode::invalid_argument, "eval_dterm needs the prime through a point; use evaluate()");
  }
  const Prime prime = point.front().prime();
  std::vector<Approx> pts;
  for (const auto& x : point) pts.push_back(Approx::exact(x.value()));
  const Approx a = evaluate(t, pts, prime.value());
  return {PAdicScalar(a.value, prime), a.error};
}

/// Exact value of a series-free term at an exact point.
inline Rational evaluate_exact(const DTerm& t, std::span<const Rational> point, long p) {
  const auto pts = exact_point(point);
  const Approx a = evaluate(t, pts, p);
  if (!a.is_exact()) throw Error(ErrorCode::invalid_argument, "term is not exactly evaluable at this point");
  return a.value;
}

/// t as a polynomial in variable `var` when it is built only from that
/// variable, constants, +, *, negation and polynomial maps.
inline std::optional<Polynomial> to_polynomial(const DTerm& t, int var) {
  return std::visit(
      [&](const auto& n) -> std::optional<Polynomial> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Var>) {
          if (n.index != var) return std::nullopt;
          return Polynomial::monomial(1, 1);
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return Polynomial::constant(n.value);
        } else if constexpr (std::is_same_v<T, node::Add> || std::is_same_v<T, node::Mul>) {
          auto a = to_polynomial(*n.lhs, var);
          auto b = to_polynomial(*n.rhs, var);
          if (!a || !b) return std::nullopt;
          if constexpr (std::is_same_v<T, node::Add>) return *a + *b;
          else return *a * *b;
        } else if constexpr (std::is_same_v<T, node::Neg>) {
          auto a = to_polynomial(*n.arg, var);
          if (!a) return std::nullopt;
          return -*a;
        } else if constexpr (std::is_same_v<T, node::Poly>) {
          auto inner = to_polynomial(*n.arg, var);
          if (!inner) return std::nullopt;
          Polynomial out;
          for (auto it = n.coeffs.rbegin(); it != n.coeffs.rend(); ++it)
            out = out * *inner + Polynomial::constant(*it);
          return out;
        } else {
          return std::nullopt;
        }
      },
      t.node());
}

/// Replaces every variable x_i by x_{mapping[i]}.
inline DTerm rename_variables(const DTerm& t, const std::map<int, int>& mapping) {
  return std::visit(
      [&](const auto& n) -> DTerm {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Var>) {
          auto it = mapping.find(n.index);
          return DTerm::var(it == mapping.end() ? n.index : it->second);
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return t;
        } else if constexpr (std::is_same_v<T, node::Add>) {
          return DTerm::add(rename_variables(*n.lhs, mapping), rename_variables(*n.rhs, mapping));
        } else if constexpr (std::is_same_v<T, node::Mul>) {
          return DTerm::mul(rename_variables(*n.lhs, mapping), rename_variables(*n.rhs, mapping));
        } else if constexpr (std::is_same_v<T, node::Neg>) {
          return DTerm::neg(rename_variables(*n.arg, mapping));
        } else if constexpr (std::is_same_v<T, node::Inv>) {
          return DTerm::inv(rename_variables(*n.arg, mapping));
        } else if constexpr (std::is_same_v<T, node::Poly>) {
          return DTerm::poly(n.coeffs, rename_variables(*n.arg, mapping));
        } else {
          std::vector<DTerm> args;
          for (const auto& a : n.args) args.push_back(rename_variables(*a, mapping));
          return DTerm::series(n.coeffs, n.tail_valuation, args);
        }
      },
      t.node());
}

// ---------------------------------------------------------------------------
// Printing. The output reparses to the same normalized AST.

std::string print(const DTerm& t);

namespace detail {

inline bool is_polynomial_atom(const DTerm& t) {
  return t.as<node::Var>() || t.as<node::Inv>() || t.as<node::Series>();
}

inline std::string print_rational_list(const std::vector<Rational>& cs) {
  std::string out;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (i) out += ", ";
    out += to_string(cs[i]);
  }
  return out;
}

inline std::string print_operand(const DTerm& t) {
  if (t.as<node::Var>() || t.as<node::Inv>() || t.as<node::Series>()) return print(t);
  if (const auto* c = t.as<node::Const>()) return c->value < 0 ? "(" + print(t) + ")" : print(t);
  if (const auto* pl = t.as<node::Poly>(); pl && !is_polynomial_atom(*pl->arg)) return print(t);
  if (t.as<node::Add>() || t.as<node::Mul>()) return print(t);  // already parenthesized
  return "(" + print(t) + ")";
}

}  // namespace detail

inline std::string print(const DTerm& t) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, node::Var>) {
          return "x" + std::to_string(n.index);
        } else if constexpr (std::is_same_v<T, node::Const>) {
          return to_string(n.value);
        } else if constexpr (std::is_same_v<T, node::Add>) {
          return "(" + detail::print_operand(*n.lhs) + " + " + detail::print_operand(*n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, node::Mul>) {
          return "(" + detail::print_operand(*n.lhs) + " * " + detail::print_operand(*n.rhs) + ")";
        } else if constexpr (std::is_same_v<T, node::Neg>) {
          return "-" + detail::print_operand(*n.arg);
        } else if constexpr (std::is_same_v<T, node::Inv>) {
          return "inv(" + print(*n.arg) + ")";
        } else if constexpr (std::is_same_v<T, node::Poly>) {
          if (detail::is_polynomial_atom(*n.arg)) return Polynomial(n.coeffs).to_string(print(*n.arg));
          return "poly([" + detail::print_rational_list(n.coeffs) + "], " + print(*n.arg) + ")";
        } else {
          std::string out = "series([" + detail::print_rational_list(n.coeffs);
          if (n.tail_valuation) out += "; tail " + std::to_string(*n.tail_valuation);
          out += "]";
          for (const auto& a : n.args) out += ", " + print(*a);
          return out + ")";
        }
      },
      t.node());
}

}  // namespace padic_cells
