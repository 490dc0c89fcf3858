#pragma once

// Q-linear combinations of products of v(h) and |h'| factors.

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "expr.hpp"
#include "padic.hpp"
#include "rational.hpp"

namespace padic_cells {

struct ValFactor {
  DTerm h;
  long exponent = 1;
  friend bool operator==(const ValFactor&, const ValFactor&) = default;
};

/// |h|^exponent. Integer exponents are the common case; rational exponents
/// appear in closed forms and require v(h) * exponent to be an integer.
struct NormFactor {
  DTerm h;
  Rational exponent = 1;
  friend bool operator==(const NormFactor&, const NormFactor&) = default;
};

struct ConstructibleTerm {
  Rational coeff = 1;
  std::vector<ValFactor> val_factors;
  std::vector<NormFactor> norm_factors;

  bool is_constant() const { return val_factors.empty() && norm_factors.empty(); }
  friend bool operator==(const ConstructibleTerm&, const ConstructibleTerm&) = default;
};

class ConstructibleExpr {
 public:
  ConstructibleExpr() = default;
  explicit ConstructibleExpr(std::vector<ConstructibleTerm> terms) : terms_(std::move(terms)) { simplify(); }

  static ConstructibleExpr constant(const Rational& c) {
    return ConstructibleExpr({ConstructibleTerm{c, {}, {}}});
  }
  static ConstructibleExpr valuation_of(const DTerm& h, long exponent = 1) {
    return ConstructibleExpr({ConstructibleTerm{1, {ValFactor{h, exponent}}, {}}});
  }
  static ConstructibleExpr norm_of(const DTerm& h, const Rational& exponent = 1) {
    return ConstructibleExpr({ConstructibleTerm{1, {}, {NormFactor{h, exponent}}}});
  }

  const std::vector<ConstructibleTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  /// The value when the expression has no factors at all.
  std::optional<Rational> as_constant() const {
    if (terms_.empty()) return Rational(0);
    if (terms_.size() == 1 && terms_[0].is_constant()) return terms_[0].coeff;
    return std::nullopt;
  }

  int max_variable() const {
    int m = -1;
    for (const auto& t : terms_) {
      for (const auto& f : t.val_factors) m = std::max(m, f.h.max_variable());
      for (const auto& f : t.norm_factors) m = std::max(m, f.h.max_variable());
    }
    return m;
  }
  bool depends_on(int index) const {
    for (const auto& t : terms_) {
      for (const auto& f : t.val_factors)
        if (f.h.depends_on(index)) return true;
      for (const auto& f : t.norm_factors)
        if (f.h.depends_on(index)) return true;
    }
    return false;
  }

  friend ConstructibleExpr operator+(const ConstructibleExpr& a, const ConstructibleExpr& b) {
    std::vector<ConstructibleTerm> ts = a.terms_;
    ts.insert(ts.end(), b.terms_.begin(), b.terms_.end());
    return ConstructibleExpr(std::move(ts));
  }
  friend ConstructibleExpr operator*(const ConstructibleExpr& a, const ConstructibleExpr& b) {
    std::vector<ConstructibleTerm> ts;
    for (const auto& x : a.terms_)
      for (const auto& y : b.terms_) {
        ConstructibleTerm t{x.coeff * y.coeff, x.val_factors, x.norm_factors};
        t.val_factors.insert(t.val_factors.end(), y.val_factors.begin(), y.val_factors.end());
        t.norm_factors.insert(t.norm_factors.end(), y.norm_factors.begin(), y.norm_factors.end());
        ts.push_back(std::move(t));
      }
    return ConstructibleExpr(std::move(ts));
  }
  friend ConstructibleExpr operator*(const Rational& s, const ConstructibleExpr& a) {
    return ConstructibleExpr::constant(s) * a;
  }
  friend ConstructibleExpr operator-(const ConstructibleExpr& a, const ConstructibleExpr& b) {
    return a + Rational(-1) * b;
  }
  friend bool operator==(const ConstructibleExpr&, const ConstructibleExpr&) = default;

  std::string to_string() const;

 private:
  void simplify();

  std::vector<ConstructibleTerm> terms_;
};

inline void ConstructibleExpr::simplify() {
  std::vector<ConstructibleTerm> merged;
  for (auto t : terms_) {
    t.coeff.canonicalize();
    if (t.coeff == 0) continue;
    // Merge repeated factors and fold constant arguments into the coefficient.
    std::vector<ValFactor> vals;
    for (auto& f : t.val_factors) {
      auto it = std::find_if(vals.begin(), vals.end(), [&](const ValFactor& g) { return g.h == f.h; });
      if (it != vals.end()) it->exponent += f.exponent;
      else vals.push_back(f);
    }
    std::vector<NormFactor> norms;
    for (auto& f : t.norm_factors) {
      f.exponent.canonicalize();
      auto it = std::find_if(norms.begin(), norms.end(), [&](const NormFactor& g) { return g.h == f.h; });
      if (it != norms.end()) it->exponent += f.exponent;
      else norms.push_back(f);
    }
    std::erase_if(norms, [](const NormFactor& f) { return f.exponent == 0; });
    std::sort(vals.begin(), vals.end(), [](const ValFactor& a, const ValFactor& b) { return print(a.h) < print(b.h); });
    std::sort(norms.begin(), norms.end(),
              [](const NormFactor& a, const NormFactor& b) { return print(a.h) < print(b.h); });
    t.val_factors = std::move(vals);
    t.norm_factors = std::move(norms);
    auto same = std::find_if(merged.begin(), merged.end(), [&](const ConstructibleTerm& m) {
      return m.val_factors == t.val_factors && m.norm_factors == t.norm_factors;
    });
    if (same != merged.end()) same->coeff += t.coeff;
    else merged.push_back(std::move(t));
  }
  std::erase_if(merged, [](const ConstructibleTerm& t) { return t.coeff == 0; });
  terms_ = std::move(merged);
}

namespace detail {

inline std::string exponent_suffix(const Rational& e) {
  if (e == 1) return "";
  if (e.get_den() == 1 && e > 0) return "^" + to_string(e);
  return "^(" + to_string(e) + ")";
}

}  // namespace detail

inline std::string ConstructibleExpr::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (const auto& t : terms_) {
    std::vector<std::string> parts;
    for (const auto& f : t.val_factors) parts.push_back("v(" + print(f.h) + ")" + detail::exponent_suffix(f.exponent));
    for (const auto& f : t.norm_factors) parts.push_back("abs(" + print(f.h) + ")" + detail::exponent_suffix(f.exponent));
    const Rational mag = padic_cells::abs(t.coeff);
    std::string body;
    if (parts.empty() || mag != 1) body = padic_cells::to_string(mag);
    for (const auto& s : parts) body += (body.empty() ? "" : "*") + s;
    if (out.empty()) out = (t.coeff < 0 ? "-" : "") + body;
    else out += (t.coeff < 0 ? " - " : " + ") + body;
  }
  return out;
}

/// p^{-v * e} for a factor |h|^e with v(h) = v; requires an integer exponent of p.
inline Rational norm_power(ExtendedInt v, const Rational& e, long p) {
  if (v.is_infinite()) {
    if (e > 0) return Rational(0);
    throw Error(ErrorCode::invalid_argument, "norm of zero raised to a non-positive power");
  }
  Rational exponent = e * v.value();
  exponent.canonicalize();
  if (exponent.get_den() != 1)
    throw Error(ErrorCode::residues_not_fixed,
                "|h|^" + to_string(e) + " is not rational at v(h) = " + std::to_string(v.value()));
  return prime_power(p, -exponent.get_num().get_si());
}

/// Value at a point given by approximations; nullopt when some factor is not
/// determined by the approximation (or a v-factor argument may vanish).
inline std::optional<Rational> evaluate(const ConstructibleExpr& f, std::span<const Approx> point, long p) {
  Rational total = 0;
  for (const auto& t : f.terms()) {
    Rational value = t.coeff;
    for (const auto& vf : t.val_factors) {
      const Approx a = evaluate(vf.h, point, p);
      const auto v = a.determined_valuation(p);
      if (!v || v->is_infinite()) return std::nullopt;
      value *= rpow(Rational(v->value()), vf.exponent);
    }
    for (const auto& nf : t.norm_factors) {
      const Approx a = evaluate(nf.h, point, p);
      const auto v = a.determined_valuation(p);
      if (!v) return std::nullopt;
      value *= norm_power(*v, nf.exponent, p);
    }
    total += value;
  }
  return total;
}

/// Exact value at an exact point.
inline Rational eval_constructible(const ConstructibleExpr& f, std::span<const Rational> point, long p) {
  const auto pts = exact_point(point);
  Rational total = 0;
  for (const auto& t : f.terms()) {
    Rational value = t.coeff;
    for (const auto& vf : t.val_factors) {
      const Approx a = evaluate(vf.h, pts, p);
      const auto v = a.determined_valuation(p);
      if (!v) throw Error(ErrorCode::invalid_argument, "v(" + print(vf.h) + ") not determined by truncation");
      if (v->is_infinite()) throw Error(ErrorCode::zero_valuation, "v(" + print(vf.h) + ") at a zero of its argument");
      value *= rpow(Rational(v->value()), vf.exponent);
    }
    for (const auto& nf : t.norm_factors) {
      const Approx a = evaluate(nf.h, pts, p);
      const auto v = a.determined_valuation(p);
      if (!v) throw Error(ErrorCode::invalid_argument, "|" + print(nf.h) + "| not determined by truncation");
      value *= norm_power(*v, nf.exponent, p);
    }
    total += value;
  }
  return total;
}

inline Rational eval_constructible(const ConstructibleExpr& f, std::span<const PAdicScalar> point) {
  std::vector<Rational> xs;
  for (const auto& x : point) xs.push_back(x.value());
  if (point.empty()) {
    if (auto c = f.as_constant()) return *c;
    throw Error(ErrorCode::arity, "empty point");
  }
  return eval_constructible(f, xs, point.front().prime().value());
}

inline ConstructibleExpr rename_variables(const ConstructibleExpr& f, const std::map<int, int>& mapping) {
  std::vector<ConstructibleTerm> ts;
  for (const auto& t : f.terms()) {
    ConstructibleTerm r{t.coeff, {}, {}};
    for (const auto& v : t.val_factors) r.val_factors.push_back({rename_variables(v.h, mapping), v.exponent});
    for (const auto& n : t.norm_factors) r.norm_factors.push_back({rename_variables(n.h, mapping), n.exponent});
    ts.push_back(std::move(r));
  }
  return ConstructibleExpr(std::move(ts));
}

}  // namespace padic_cells
