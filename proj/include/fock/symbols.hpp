#pragma once

// Concrete symbol algebra: finite sums c * z^p * conj(z)^q * (1+|z|^2)^{t/2}.
// These realize the classes of smooth symbols with asymptotic expansions in
// homogeneous layers of decreasing degree at infinity.

#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "core.hpp"

namespace fock {

enum class Wirtinger { holo, anti };

/// One term c * z^p * conj(z)^q * w^e where w is (1+|z|^2)^{1/2} for
/// RadialSymbol and |z| for HomogeneousSymbol.
struct SymbolTerm {
  cplx coeff;
  MultiIndex p;
  MultiIndex q;
  double exponent;

  double degree() const { return p.degree() + q.degree() + exponent; }
};

namespace detail {

struct TermKey {
  MultiIndex p, q;
  double e;
  friend bool operator<(const TermKey& a, const TermKey& b) {
    if (a.p < b.p) return true;
    if (b.p < a.p) return false;
    if (a.q < b.q) return true;
    if (b.q < a.q) return false;
    return a.e < b.e;
  }
};

// Shared storage for both symbol kinds. Terms with equal (p, q, exponent)
// are merged; exact zeros are dropped.
template <class Derived>
class TermSum {
 public:
  explicit TermSum(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("dimension must be >= 1");
  }

  std::size_t dimension() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  std::vector<SymbolTerm> terms() const {
    std::vector<SymbolTerm> out;
    out.reserve(terms_.size());
    for (const auto& [k, c] : terms_) out.push_back({c, k.p, k.q, k.e});
    return out;
  }

  Derived& add_term(cplx c, const MultiIndex& p, const MultiIndex& q, double e) {
    if (p.size() != n_ || q.size() != n_) throw std::invalid_argument("symbol term dimension mismatch");
    if (!std::isfinite(e)) throw std::invalid_argument("symbol exponent must be finite");
    if (c == cplx{}) return self();
    auto [it, inserted] = terms_.try_emplace(TermKey{p, q, e}, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
    return self();
  }
  Derived& add_term(const SymbolTerm& t) { return add_term(t.coeff, t.p, t.q, t.exponent); }

  Derived conj() const {
    Derived out(n_);
    for (const auto& [k, c] : terms_) out.add_term(std::conj(c), k.q, k.p, k.e);
    return out;
  }

  /// max over terms of |p| + |q| + exponent; -inf for the zero symbol.
  double order() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& [k, c] : terms_) m = std::max(m, k.p.degree() + k.q.degree() + k.e);
    return m;
  }

  Derived& operator+=(const Derived& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(c, k.p, k.q, k.e);
    return self();
  }
  Derived& operator-=(const Derived& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(-c, k.p, k.q, k.e);
    return self();
  }
  Derived& operator*=(cplx s) {
    if (s == cplx{}) terms_.clear();
    for (auto& [k, c] : terms_) c *= s;
    return self();
  }

  friend Derived operator+(Derived a, const Derived& b) { return a += b; }
  friend Derived operator-(Derived a, const Derived& b) { return a -= b; }
  friend Derived operator*(Derived a, cplx s) { return a *= s; }
  friend Derived operator*(cplx s, Derived a) { return a *= s; }
  friend Derived operator*(const Derived& a, const Derived& b) {
    a.check(b);
    Derived out(a.n_);
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) out.add_term(ca * cb, ka.p + kb.p, ka.q + kb.q, ka.e + kb.e);
    return out;
  }

  Derived pow(int k) const {
    if (k < 0) throw std::invalid_argument("negative power");
    Derived out(n_);
    out.add_term(1.0, MultiIndex(n_), MultiIndex(n_), 0.0);
    for (int i = 0; i < k; ++i) out = out * self();
    return out;
  }

  /// Wirtinger derivative d/dz_j or d/dzbar_j. The weight w^e obeys
  /// d_j w^e = (e/2) conj(z_j) w^{e-2} for both (1+|z|^2)^{1/2} and |z|.
  Derived wirtinger(std::size_t j, Wirtinger kind) const {
    if (j >= n_) throw std::out_of_range("Wirtinger index out of range");
    Derived out(n_);
    const MultiIndex ej = MultiIndex::unit(n_, j);
    for (const auto& [k, c] : terms_) {
      const MultiIndex& own = kind == Wirtinger::holo ? k.p : k.q;
      if (own[j] > 0) {
        if (kind == Wirtinger::holo)
          out.add_term(c * static_cast<double>(own[j]), k.p.with(j, -1), k.q, k.e);
        else
          out.add_term(c * static_cast<double>(own[j]), k.p, k.q.with(j, -1), k.e);
      }
      if (k.e != 0.0) {
        if (kind == Wirtinger::holo)
          out.add_term(c * (k.e / 2.0), k.p, k.q + ej, k.e - 2.0);
        else
          out.add_term(c * (k.e / 2.0), k.p + ej, k.q, k.e - 2.0);
      }
    }
    return out;
  }

  /// Euclidean Laplacian 4 * sum_j d_j dbar_j.
  Derived laplacian() const {
    Derived out(n_);
    for (std::size_t j = 0; j < n_; ++j) out += wirtinger(j, Wirtinger::anti).wirtinger(j, Wirtinger::holo);
    return out * 4.0;
  }

 protected:
  Derived& self() { return static_cast<Derived&>(*this); }
  const Derived& self() const { return static_cast<const Derived&>(*this); }
  void check(const TermSum& o) const {
    if (o.n_ != n_) throw std::invalid_argument("symbol dimension mismatch");
  }

  // Evaluate with a caller-provided weight value w (>0).
  cplx evaluate_with_weight(std::span<const cplx> z, double w) const {
    if (z.size() != n_) throw std::invalid_argument("evaluation point dimension mismatch");
    cplx sum{};
    for (const auto& [k, c] : terms_) {
      cplx v = c;
      for (std::size_t j = 0; j < n_; ++j) {
        for (int e = 0; e < k.p[j]; ++e) v *= z[j];
        for (int e = 0; e < k.q[j]; ++e) v *= std::conj(z[j]);
      }
      if (k.e != 0.0) v *= std::pow(w, k.e);
      sum += v;
    }
    return sum;
  }

  std::size_t n_;
  std::map<TermKey, cplx> terms_;
};

}  // namespace detail

inline double norm_sq(std::span<const cplx> z) {
  double s = 0.0;
  for (const auto& v : z) s += std::norm(v);
  return s;
}

/// Sum of c * z^p conj(z)^q (1+|z|^2)^{t/2}; smooth on all of C^n.
class RadialSymbol : public detail::TermSum<RadialSymbol> {
 public:
  using TermSum::TermSum;

  static RadialSymbol constant(std::size_t n, cplx c) {
    RadialSymbol s(n);
    s.add_term(c, MultiIndex(n), MultiIndex(n), 0.0);
    return s;
  }
  static RadialSymbol monomial(cplx c, const MultiIndex& p, const MultiIndex& q, double t = 0.0) {
    RadialSymbol s(p.size());
    s.add_term(c, p, q, t);
    return s;
  }
  /// (1+|z|^2)^{t/2}
  static RadialSymbol weight(std::size_t n, double t) { return monomial(1.0, MultiIndex(n), MultiIndex(n), t); }
  static RadialSymbol z(std::size_t n, std::size_t j) { return monomial(1.0, MultiIndex::unit(n, j), MultiIndex(n)); }
  static RadialSymbol zbar(std::size_t n, std::size_t j) { return monomial(1.0, MultiIndex(n), MultiIndex::unit(n, j)); }

  cplx evaluate(std::span<const cplx> z) const { return evaluate_with_weight(z, std::sqrt(1.0 + norm_sq(z))); }

  bool is_polynomial() const {
    for (const auto& [k, c] : terms_)
      if (k.e != 0.0) return false;
    return true;
  }

  /// conj(S) == S as a symbol (so T_S is self-adjoint).
  bool is_real() const {
    for (const auto& [k, c] : terms_) {
      auto it = terms_.find(detail::TermKey{k.q, k.p, k.e});
      if (it == terms_.end() || std::abs(it->second - std::conj(c)) > 1e-14 * std::abs(c)) return false;
    }
    return true;
  }

  /// Largest max(|p|, |q|) over the terms: how far T_S can move total degree.
  int shift_range() const {
    int r = 0;
    for (const auto& [k, c] : terms_) r = std::max({r, k.p.degree(), k.q.degree()});
    return r;
  }

  /// The set of p - q over terms.
  std::vector<Shift> shifts() const {
    std::vector<Shift> out;
    for (const auto& [k, c] : terms_) {
      Shift s = shift_of(k.p, k.q);
      if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
    }
    return out;
  }
};

/// Sum of c * z^p conj(z)^q |z|^s, all terms of one homogeneity degree;
/// meaningful on |z| >= 1.
class HomogeneousSymbol : public detail::TermSum<HomogeneousSymbol> {
 public:
  using TermSum::TermSum;

  cplx evaluate(std::span<const cplx> z) const { return evaluate_with_weight(z, std::sqrt(norm_sq(z))); }

  /// Homogeneity degree, or nullopt for the zero symbol. Throws when terms
  /// disagree.
  std::optional<double> degree() const {
    std::optional<double> d;
    for (const auto& [k, c] : terms_) {
      const double dk = k.p.degree() + k.q.degree() + k.e;
      if (!d) d = dk;
      else if (std::abs(*d - dk) > 1e-12) throw std::logic_error("HomogeneousSymbol mixes degrees");
    }
    return d;
  }

  /// Restriction to the unit sphere (|z|^s -> 1).
  SpherePolynomial restrict_to_sphere() const {
    SpherePolynomial P(n_);
    for (const auto& [k, c] : terms_) P.add_term(k.p, k.q, c);
    return P;
  }
};

/// Generalized binomial coefficient binom(x, i).
inline double generalized_binomial(double x, int i) {
  double r = 1.0;
  for (int k = 0; k < i; ++k) r *= (x - k) / (k + 1);
  return r;
}

struct HomogeneousExpansion {
  double order;
  std::vector<HomogeneousSymbol> layers;  // layers[j] has degree order - j
  double remainder_order;                 // partial-sum error is O(|z|^remainder_order)
};

/// First N homogeneous layers of S at infinity via
/// (1+|z|^2)^{t/2} = |z|^t sum_i binom(t/2, i) |z|^{-2i}.
inline HomogeneousExpansion homogeneous_expansion(const RadialSymbol& S, int N) {
  if (N < 1) throw std::invalid_argument("homogeneous_expansion needs N >= 1");
  if (S.is_zero()) throw std::invalid_argument("homogeneous_expansion of the zero symbol");
  const std::size_t n = S.dimension();
  const double m = S.order();
  HomogeneousExpansion out{m, std::vector<HomogeneousSymbol>(static_cast<std::size_t>(N), HomogeneousSymbol(n)), m - N};
  for (const auto& t : S.terms()) {
    const double gap = m - t.degree();
    const double rounded = std::round(gap);
    if (std::abs(gap - rounded) > 1e-9)
      throw std::invalid_argument("symbol terms are not separated by integer degrees");
    const int offset = static_cast<int>(rounded);
    const double half = t.exponent / 2.0;
    const bool terminating = half >= 0.0 && half == std::floor(half);
    for (int i = 0; offset + 2 * i < N; ++i) {
      if (terminating && i > half) break;
      const double b = generalized_binomial(half, i);
      if (b == 0.0) continue;
      out.layers[static_cast<std::size_t>(offset + 2 * i)].add_term(t.coeff * b, t.p, t.q, t.exponent - 2.0 * i);
    }
  }
  return out;
}

struct LeadingPart {
  double order;
  SpherePolynomial f0;
};

inline LeadingPart leading_sphere_part(const RadialSymbol& S) {
  if (S.is_zero()) throw std::invalid_argument("leading_sphere_part of the zero symbol");
  auto e = homogeneous_expansion(S, 1);
  return {e.order, e.layers.front().restrict_to_sphere()};
}

/// Convert a homogeneous layer back to a sphere polynomial times |z|^deg; used
/// by checks that need f_j of a given layer.
inline SpherePolynomial layer_on_sphere(const HomogeneousSymbol& H) { return H.restrict_to_sphere(); }

// JSON symbol format: {"n": int, "terms": [{"c": [re, im], "p": [...], "q": [...], "t": number}]}

inline RadialSymbol symbol_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    RadialSymbol S(n);
    for (const auto& term : j.at("terms")) {
      const auto& c = term.at("c");
      cplx coeff;
      if (c.is_array()) coeff = {c.at(0).get<double>(), c.size() > 1 ? c.at(1).get<double>() : 0.0};
      else coeff = {c.get<double>(), 0.0};
      auto p = term.value("p", std::vector<int>(n, 0));
      auto q = term.value("q", std::vector<int>(n, 0));
      if (p.size() != n || q.size() != n) throw std::invalid_argument("term exponent length differs from n");
      S.add_term(coeff, MultiIndex(std::move(p)), MultiIndex(std::move(q)), term.value("t", 0.0));
    }
    return S;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid symbol JSON: ") + e.what());
  }
}

inline nlohmann::json symbol_to_json(const RadialSymbol& S) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : S.terms()) {
    std::vector<int> p(t.p.entries().begin(), t.p.entries().end());
    std::vector<int> q(t.q.entries().begin(), t.q.entries().end());
    terms.push_back({{"c", {t.coeff.real(), t.coeff.imag()}}, {"p", p}, {"q", q}, {"t", t.exponent}});
  }
  return {{"n", S.dimension()}, {"terms", terms}};
}

}  // namespace fock
