#pragma once

// Cells {x in D, |alpha(x)| <1 |t - gamma(x)| <2 |beta(x)|, t - gamma(x) in mu P_n}
// built stage by stage, and exact measures of their fibers.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "error.hpp"
#include "expr.hpp"
#include "padic.hpp"
#include "polynomial.hpp"
#include "rational.hpp"
#include "sums.hpp"

namespace padic_cells {

/// A simple root gamma of an integer polynomial inside the ball c + p^r Z_p,
/// known through a seed that Newton iteration refines on demand.
///
/// In ball coordinates h(y) = f(c + p^r y) / p^m has integral coefficients, a
/// unit derivative at the root and a linear reduction mod p, so Newton steps
/// from the seed double the number of correct digits.
class RootCenter {
 public:
  RootCenter(Polynomial f, Rational ball_center, long ball_radius, long p)
      : f_(std::move(f)), c_(std::move(ball_center)), r_(ball_radius), p_(p) {
    const Polynomial g = f_.compose_affine(c_, prime_power(p, r_));
    const ExtendedInt m = min_coefficient_valuation(g, p);
    if (m.is_infinite()) throw Error(ErrorCode::invalid_argument, "zero polynomial has no isolated root");
    h_ = prime_power(p, -m.value()) * g;
    // Reduction of h must be linear: one unit coefficient at degree 1, higher ones divisible by p.
    if (valuation(h_.coeff(1), p) != ExtendedInt(0))
      throw Error(ErrorCode::hensel_failed, "ball does not isolate a simple root");
    for (long i = 2; i <= h_.degree(); ++i)
      if (!(valuation(h_.coeff(static_cast<std::size_t>(i)), p) > ExtendedInt(0)))
        throw Error(ErrorCode::hensel_failed, "ball does not isolate a simple root");
    // Seed: y0 = -h0 / h1 mod p.
    seed_ = Rational(residue(-h_.coeff(0) / h_.coeff(1), p, 1));
  }

  const Polynomial& polynomial() const { return f_; }
  const Rational& ball_center() const { return c_; }
  long ball_radius() const { return r_; }
  long prime() const { return p_; }

  /// Rational a with v(gamma - a) >= target.
  Rational approximation(long target) const {
    if (target <= r_) return c_;
    const long needed = target - r_;
    Rational y = seed_;
    long precision = 1;
    const Polynomial dh = h_.derivative();
    while (precision < needed) {
      precision = std::min(2 * precision, needed);
      const Rational step = h_(y) / dh(y);
      y = Rational(residue(y - step, p_, precision));
    }
    Rational out = c_ + prime_power(p_, r_) * y;
    out.canonicalize();
    return out;
  }

  friend bool operator==(const RootCenter& a, const RootCenter& b) {
    return a.f_ == b.f_ && a.c_ == b.c_ && a.r_ == b.r_ && a.p_ == b.p_;
  }

 private:
  Polynomial f_;
  Rational c_;
  long r_;
  long p_;
  Polynomial h_;
  Rational seed_;
};

using Center = std::variant<DTerm, RootCenter>;

inline std::string describe(const Center& c) {
  if (const auto* t = std::get_if<DTerm>(&c)) return print(*t);
  const auto& root = std::get<RootCenter>(c);
  return "root of " + root.polynomial().to_string("t") + " in " + to_string(root.ball_center()) + " + " +
         std::to_string(root.prime()) + "^" + std::to_string(root.ball_radius()) + "Z";
}

/// One stage of a cell. Absent bounds mean "no condition"; non-strict bounds
/// are admitted and normalized to strict ones by shifting one valuation step.
struct CellCondition {
  std::optional<DTerm> lower;  ///< alpha
  bool lower_strict = true;
  std::optional<DTerm> upper;  ///< beta
  bool upper_strict = true;
  Center center = DTerm::constant(0);
  Coset coset;

  /// Bound for |alpha| < |u| (multiplies a non-strict alpha by p).
  std::optional<DTerm> strict_lower(long p) const {
    if (!lower || lower_strict) return lower;
    return DTerm::mul(DTerm::constant(p), *lower);
  }
  /// Bound for |u| < |beta| (divides a non-strict beta by p).
  std::optional<DTerm> strict_upper(long p) const {
    if (!upper || upper_strict) return upper;
    return DTerm::mul(DTerm::constant(Rational(1, p)), *upper);
  }

  bool is_point() const { return coset.is_point(); }
};

struct Cell {
  std::vector<CellCondition> conditions;

  std::size_t arity() const { return conditions.size(); }
  /// (i_1, ..., i_m): 0 for graph stages (mu = 0), 1 otherwise.
  std::vector<int> type_vector() const {
    std::vector<int> out;
    for (const auto& c : conditions) out.push_back(c.is_point() ? 0 : 1);
    return out;
  }
  const CellCondition& last() const { return conditions.back(); }
  Cell base() const {
    Cell b;
    b.conditions.assign(conditions.begin(), conditions.end() - 1);
    return b;
  }
};

// ---------------------------------------------------------------------------
// Standard one-variable cells.

/// {t : 0 < |t - gamma| <= p^{-r}} around a rational or root center.
inline CellCondition punctured_ball(Center center, long r, long p) {
  CellCondition c;
  c.upper = DTerm::constant(prime_power(p, r - 1));
  c.center = std::move(center);
  c.coset = Coset(Rational(1), 1);
  return c;
}

inline CellCondition point_cell(Center center) {
  CellCondition c;
  c.center = std::move(center);
  c.coset = Coset(Rational(0), 1);
  return c;
}

/// The whole ball c + p^r Z_p as a single cell: with gamma = c - p^{r-1},
/// t - gamma has valuation exactly r - 1 and lies in p^{r-1}(1 + pZ_p),
/// which is the coset p^{r-1} P_{p-1} at that valuation (all of it for p = 2).
inline CellCondition ball_cell(const Rational& c, long r, long p) {
  CellCondition cond;
  cond.lower = DTerm::constant(prime_power(p, r));
  cond.upper = DTerm::constant(prime_power(p, r - 2));
  cond.center = DTerm::constant(c - prime_power(p, r - 1));
  cond.coset = Coset(prime_power(p, r - 1), p == 2 ? 1 : p - 1);
  return cond;
}

// ---------------------------------------------------------------------------
// Level set measures.

struct LevelSetMeasure {
  Rational epsilon;
  long valuation_class = 0;  ///< v(mu) mod n
};

namespace detail {

/// Haar measure of {u : v(u) = s, u in mu P_n}, scaled by p^s, by counting
/// unit residues w mod p^depth with p^s w in mu P_n.
inline Rational scaled_level_measure(const Coset& c, long p, long s, long depth) {
  const Integer modulus = ipow(Integer(p), static_cast<unsigned long>(depth));
  const unsigned long size = modulus.get_ui();
  const Rational shift = prime_power(p, s);
  unsigned long count = 0;
  const long check_depth = std::max(depth, hensel_depth(p, c.n));
  for (unsigned long w = 1; w < size; ++w) {
    if (w % static_cast<unsigned long>(p) == 0) continue;
    if (in_coset(shift * Rational(Integer(w)), c, p, check_depth)) ++count;
  }
  Rational out(Integer(count), modulus);
  out.canonicalize();
  return out;
}

}  // namespace detail

inline LevelSetMeasure level_set_measure(const Coset& c, const Prime& prime) {
  const long p = prime.value();
  if (c.mu == 0) throw Error(ErrorCode::invalid_argument, "level set measure of a point coset");
  const long vmu = valuation(c.mu, p).value();
  const long depth = hensel_depth(p, c.n);
  const Integer unit_class = residue(unit_part(c.mu, p), p, depth);
  using Key = std::tuple<long, long, long, std::string>;
  static std::mutex mutex;
  static std::map<Key, Rational> memo;
  const Key key{p, c.n, mod_floor(vmu, c.n), unit_class.get_str()};
  {
    std::lock_guard lock(mutex);
    if (auto it = memo.find(key); it != memo.end()) return {it->second, mod_floor(vmu, c.n)};
  }
  const Rational eps = detail::scaled_level_measure(c, p, vmu, depth);
  const Rational eps_next_level = detail::scaled_level_measure(c, p, vmu + c.n, depth);
  const Rational eps_finer = detail::scaled_level_measure(c, p, vmu, depth + 1);
  if (eps != eps_next_level || eps != eps_finer || eps == 0 || eps > 1)
    throw Error(ErrorCode::internal, "level set measure depends on the level for n=" + std::to_string(c.n));
  {
    std::lock_guard lock(mutex);
    memo.emplace(key, eps);
  }
  return {eps, mod_floor(vmu, c.n)};
}

// ---------------------------------------------------------------------------
// Evaluating stages at points.

namespace detail {

inline Rational exact_value(const DTerm& t, std::span<const Rational> point, long p, const char* what) {
  const auto pts = exact_point(point);
  const Approx a = evaluate(t, pts, p);
  if (a.is_exact()) return a.value;
  // Series terms: only the valuation and a few unit digits are ever needed,
  // so a truncated value is acceptable when it pins the valuation down.
  if (a.determined_valuation(p)) return a.value;
  throw Error(ErrorCode::invalid_argument, std::string(what) + " not determined at this point");
}

}  // namespace detail

/// u' = t - gamma' with gamma' close enough to the center that u' and
/// u = t - gamma share valuation and unit digits mod p^digits. Zero iff t = gamma.
inline Rational center_offset(const Center& center, std::span<const Rational> base, const Rational& t, long p,
                              long digits) {
  if (const auto* term = std::get_if<DTerm>(&center)) return t - detail::exact_value(*term, base, p, "center");
  const auto& root = std::get<RootCenter>(center);
  for (long target = root.ball_radius() + digits + 4; target < (1L << 14); target *= 2) {
    const Rational u = t - root.approximation(target);
    if (u == 0) continue;
    const long v = valuation(u, p).value();
    if (v + digits <= target) return u;
  }
  throw Error(ErrorCode::precision_exhausted, "point too close to an irrational center");
}

/// Offset for a point known up to an error (oracle classes).
inline Approx center_offset(const Center& center, std::span<const Approx> base, const Approx& t, long p) {
  if (!t.error) return Approx::unknown();
  if (const auto* term = std::get_if<DTerm>(&center)) {
    const Approx g = evaluate(*term, base, p);
    if (!g.error) return Approx::unknown();
    return {t.value - g.value, min(*t.error, *g.error)};
  }
  const auto& root = std::get<RootCenter>(center);
  const long target = t.error->is_infinite() ? 64 : std::max(t.error->value(), root.ball_radius() + 1);
  return {t.value - root.approximation(target), min(*t.error, ExtendedInt(target))};
}

/// {k : |alpha| < p^{-k} <2 |beta|, k = v(mu) mod n} at a base point.
struct ValuationRange {
  std::optional<long> k_min;  ///< absent: unbounded below
  std::optional<long> k_max;  ///< absent: unbounded above
  long residue = 0;
  long modulus = 1;

  bool contains(long k) const {
    if (k_min && k < *k_min) return false;
    if (k_max && k > *k_max) return false;
    return mod_floor(k - residue, modulus) == 0;
  }
  bool empty() const {
    if (!k_min || !k_max) return false;
    const long first = *k_min + mod_floor(residue - *k_min, modulus);
    return first > *k_max;
  }
};

inline ValuationRange fiber_valuation_range(const CellCondition& cond, std::span<const Rational> base, long p) {
  if (cond.coset.mu == 0) throw Error(ErrorCode::invalid_argument, "valuation range of a point fiber");
  ValuationRange range;
  range.modulus = cond.coset.n;
  range.residue = mod_floor(valuation(cond.coset.mu, p).value(), cond.coset.n);
  if (auto alpha = cond.strict_lower(p)) {
    const Rational a = detail::exact_value(*alpha, base, p, "alpha");
    if (a == 0) throw Error(ErrorCode::invalid_argument, "alpha vanishes at the base point");
    range.k_max = valuation(a, p).value() - 1;
  }
  if (auto beta = cond.strict_upper(p)) {
    const Rational b = detail::exact_value(*beta, base, p, "beta");
    if (b == 0) throw Error(ErrorCode::invalid_argument, "beta vanishes at the base point");
    range.k_min = valuation(b, p).value() + 1;
  }
  return range;
}

/// Haar measure of the fiber over a base point.
inline Rational fiber_measure(const CellCondition& cond, std::span<const Rational> base, const Prime& prime) {
  const long p = prime.value();
  if (cond.coset.mu == 0) return Rational(0);
  const ValuationRange range = fiber_valuation_range(cond, base, p);
  if (!range.k_min) throw Error(ErrorCode::infinite_measure, "fiber is unbounded");
  const LevelSetMeasure eps = level_set_measure(cond.coset, prime);
  ProgressionSum s;
  s.l = 0;
  s.t = Rational(1, p);
  s.residue = range.residue;
  s.modulus = range.modulus;
  s.k_min = *range.k_min;
  s.k_max = range.k_max;
  return eps.epsilon * sum_progression(s);
}

/// Whether t belongs to the fiber of one stage over an exact base point.
inline bool stage_membership(const CellCondition& cond, std::span<const Rational> base, const Rational& t, long p,
                             long depth) {
  const long digits = hensel_depth(p, cond.coset.n);
  if (depth < digits)
    throw Error(ErrorCode::depth_too_small, "depth " + std::to_string(depth) + " < " + std::to_string(digits));
  const Rational u = center_offset(cond.center, base, t, p, digits);
  if (cond.coset.mu == 0) return u == 0;
  if (u == 0) return false;
  const long k = valuation(u, p).value();
  if (cond.lower) {
    const Rational a = detail::exact_value(*cond.lower, base, p, "alpha");
    if (a == 0) throw Error(ErrorCode::invalid_argument, "alpha vanishes at the base point");
    const long va = valuation(a, p).value();
    if (cond.lower_strict ? !(va > k) : !(va >= k)) return false;
  }
  if (cond.upper) {
    const Rational b = detail::exact_value(*cond.upper, base, p, "beta");
    if (b == 0) throw Error(ErrorCode::invalid_argument, "beta vanishes at the base point");
    const long vb = valuation(b, p).value();
    if (cond.upper_strict ? !(k > vb) : !(k >= vb)) return false;
  }
  return in_coset(u, cond.coset, p, depth);
}

inline bool fiber_membership(const Cell& cell, std::span<const Rational> point, long p, long depth) {
  if (point.size() < cell.arity()) throw Error(ErrorCode::arity, "point shorter than the cell arity");
  for (std::size_t i = 0; i < cell.arity(); ++i)
    if (!stage_membership(cell.conditions[i], point.first(i), point[i], p, depth)) return false;
  return true;
}

inline bool fiber_membership(const Cell& cell, std::span<const PAdicScalar> point, long depth) {
  if (point.empty()) return cell.arity() == 0;
  std::vector<Rational> xs;
  for (const auto& x : point) xs.push_back(x.value());
  return fiber_membership(cell, xs, point.front().prime().value(), depth);
}

/// Base membership: all stages but the last.
inline bool base_membership(const Cell& cell, std::span<const Rational> point, long p) {
  for (std::size_t i = 0; i + 1 < cell.arity(); ++i) {
    const long depth = hensel_depth(p, cell.conditions[i].coset.n);
    if (!stage_membership(cell.conditions[i], point.first(i), point[i], p, depth)) return false;
  }
  return true;
}

}  // namespace padic_cells
