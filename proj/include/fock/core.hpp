#pragma once

// Multi-indices, the graded monomial basis, and exact integration of
// polynomials in (zeta, conj(zeta)) over the unit sphere S^{2n-1} in C^n.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fock {

using cplx = std::complex<double>;

/// Degree threshold above which factorial-type quantities switch from exact
/// integer arithmetic to log-Gamma.
inline constexpr int kExactFactorialThreshold = 10000;

class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t n) : e_(n, 0) {}
  MultiIndex(std::initializer_list<int> entries) : e_(entries) { validate(); }
  explicit MultiIndex(std::vector<int> entries) : e_(std::move(entries)) { validate(); }

  static MultiIndex unit(std::size_t n, std::size_t j) {
    MultiIndex m(n);
    m.e_.at(j) = 1;
    return m;
  }

  std::size_t size() const { return e_.size(); }
  int operator[](std::size_t j) const { return e_[j]; }
  std::span<const int> entries() const { return e_; }

  int degree() const {
    int d = 0;
    for (int v : e_) d += v;
    return d;
  }

  bool is_zero() const {
    return std::all_of(e_.begin(), e_.end(), [](int v) { return v == 0; });
  }

  /// Componentwise a <= b.
  bool divides(const MultiIndex& other) const {
    for (std::size_t j = 0; j < e_.size(); ++j)
      if (e_[j] > other.e_[j]) return false;
    return true;
  }

  MultiIndex with(std::size_t j, int delta) const {
    MultiIndex m = *this;
    m.e_.at(j) += delta;
    if (m.e_[j] < 0) throw std::domain_error("MultiIndex entry would become negative");
    return m;
  }

  friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    check_same(a, b);
    MultiIndex m = a;
    for (std::size_t j = 0; j < a.size(); ++j) m.e_[j] += b.e_[j];
    return m;
  }

  /// a - b, defined only when b <= a componentwise.
  friend MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
    check_same(a, b);
    MultiIndex m = a;
    for (std::size_t j = 0; j < a.size(); ++j) {
      m.e_[j] -= b.e_[j];
      if (m.e_[j] < 0) throw std::domain_error("MultiIndex difference is negative");
    }
    return m;
  }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

  /// Graded order: total degree first, then reverse lexicographic on entries
  /// so that (1,0) precedes (0,1). This is the global basis order.
  friend bool operator<(const MultiIndex& a, const MultiIndex& b) {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    return std::lexicographical_compare(b.e_.begin(), b.e_.end(), a.e_.begin(), a.e_.end());
  }

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t j = 0; j < e_.size(); ++j) os << (j ? "," : "") << e_[j];
    os << ')';
    return os.str();
  }

 private:
  void validate() const {
    for (int v : e_)
      if (v < 0) throw std::invalid_argument("MultiIndex entries must be nonnegative");
  }
  static void check_same(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size()) throw std::invalid_argument("MultiIndex dimension mismatch");
  }

  std::vector<int> e_;
};

struct MultiIndexHash {
  std::size_t operator()(const MultiIndex& m) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (int v : m.entries()) h ^= std::hash<int>{}(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
  }
};

/// Signed difference p - q of two multi-indices (the "shift" of a monomial
/// z^p conj(z)^q acting on the monomial basis).
using Shift = std::vector<int>;

inline Shift shift_of(const MultiIndex& p, const MultiIndex& q) {
  Shift s(p.size());
  for (std::size_t j = 0; j < p.size(); ++j) s[j] = p[j] - q[j];
  return s;
}

/// All alpha with |alpha| = k, in basis order.
inline std::vector<MultiIndex> multi_indices_of_degree(std::size_t n, int k) {
  if (n == 0) throw std::invalid_argument("dimension must be >= 1");
  std::vector<MultiIndex> out;
  std::vector<int> cur(n, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t j, int left) {
    if (j + 1 == n) {
      cur[j] = left;
      out.emplace_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[j] = v;
      rec(j + 1, left - v);
    }
  };
  rec(0, k);
  return out;
}

/// All alpha with |alpha| <= D in graded order.
inline std::vector<MultiIndex> enumerate_basis(std::size_t n, int D) {
  if (n == 0) throw std::invalid_argument("dimension must be >= 1");
  if (D < 0) throw std::invalid_argument("truncation degree must be >= 0");
  std::vector<MultiIndex> out;
  for (int k = 0; k <= D; ++k) {
    auto layer = multi_indices_of_degree(n, k);
    out.insert(out.end(), std::make_move_iterator(layer.begin()), std::make_move_iterator(layer.end()));
  }
  return out;
}

namespace detail {

using u128 = unsigned __int128;

// Exact binomial in 128-bit arithmetic; false on overflow.
inline bool binomial_exact(std::uint64_t n, std::uint64_t k, u128& out) {
  if (k > n) {
    out = 0;
    return true;
  }
  k = std::min(k, n - k);
  u128 r = 1;
  const u128 limit = ~u128{0};
  for (std::uint64_t i = 1; i <= k; ++i) {
    const u128 num = n - k + i;
    if (r > limit / num) return false;
    r = r * num / i;  // exact: r*num is divisible by i
  }
  out = r;
  return true;
}

}  // namespace detail

inline double log_factorial(double k) { return std::lgamma(k + 1.0); }

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n <= kExactFactorialThreshold) {
    detail::u128 v;
    if (detail::binomial_exact(static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(k), v))
      return static_cast<double>(v);
  }
  return std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k));
}

/// Number of alpha in N^n with |alpha| = k, i.e. binomial(k+n-1, k).
inline std::uint64_t degree_multiplicity(std::size_t n, std::uint64_t k) {
  if (n == 0) throw std::invalid_argument("dimension must be >= 1");
  detail::u128 v;
  if (!detail::binomial_exact(k + n - 1, k, v) || v > std::numeric_limits<std::uint64_t>::max())
    throw std::overflow_error("degree multiplicity exceeds 64 bits");
  return static_cast<std::uint64_t>(v);
}

/// Normalized sphere integral of |zeta^a|^2: (n-1)! a! / (n-1+|a|)!, the
/// reciprocal of a multinomial coefficient.
inline double sphere_monomial_integral(const MultiIndex& a) {
  const std::size_t n = a.size();
  const int deg = a.degree();
  if (deg <= kExactFactorialThreshold) {
    // multinomial(n-1+|a|; n-1, a_1, ..., a_n) as a product of binomials
    detail::u128 acc = 1;
    std::uint64_t running = n - 1;
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) {
      running += static_cast<std::uint64_t>(a[j]);
      detail::u128 b;
      if (!detail::binomial_exact(running, static_cast<std::uint64_t>(a[j]), b) ||
          (b != 0 && acc > (~detail::u128{0}) / b)) {
        ok = false;
        break;
      }
      acc *= b;
    }
    if (ok) return 1.0 / static_cast<double>(acc);
  }
  double lg = log_factorial(static_cast<double>(n) - 1.0) - log_factorial(static_cast<double>(n) - 1.0 + deg);
  for (int v : a.entries()) lg += log_factorial(v);
  return std::exp(lg);
}

/// Surface area of S^{2n-1}: converts normalized-measure integrals to the
/// unnormalized surface measure.
inline double sphere_volume(std::size_t n) {
  return 2.0 * std::pow(std::numbers::pi, static_cast<double>(n)) / std::exp(log_factorial(static_cast<double>(n) - 1.0));
}

/// Finite complex combination of zeta^p conj(zeta)^q, viewed as a function on
/// S^{2n-1}. Not canonical modulo |zeta|^2 = 1; compare with sphere_equal.
class SpherePolynomial {
 public:
  using Key = std::pair<MultiIndex, MultiIndex>;
  using Terms = std::map<Key, cplx>;

  explicit SpherePolynomial(std::size_t n) : n_(n) {
    if (n == 0) throw std::invalid_argument("dimension must be >= 1");
  }

  static SpherePolynomial constant(std::size_t n, cplx c) {
    SpherePolynomial P(n);
    P.add_term(MultiIndex(n), MultiIndex(n), c);
    return P;
  }
  static SpherePolynomial monomial(const MultiIndex& p, const MultiIndex& q, cplx c = 1.0) {
    SpherePolynomial P(p.size());
    P.add_term(p, q, c);
    return P;
  }
  static SpherePolynomial zeta(std::size_t n, std::size_t j) {
    return monomial(MultiIndex::unit(n, j), MultiIndex(n));
  }
  static SpherePolynomial zeta_bar(std::size_t n, std::size_t j) {
    return monomial(MultiIndex(n), MultiIndex::unit(n, j));
  }

  std::size_t dimension() const { return n_; }
  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add_term(const MultiIndex& p, const MultiIndex& q, cplx c) {
    if (p.size() != n_ || q.size() != n_) throw std::invalid_argument("SpherePolynomial term dimension mismatch");
    if (c == cplx{}) return;
    auto [it, inserted] = terms_.try_emplace(Key{p, q}, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx{}) terms_.erase(it);
    }
  }

  SpherePolynomial conj() const {
    SpherePolynomial out(n_);
    for (const auto& [k, c] : terms_) out.add_term(k.second, k.first, std::conj(c));
    return out;
  }

  cplx evaluate(std::span<const cplx> zeta) const {
    if (zeta.size() != n_) throw std::invalid_argument("evaluation point dimension mismatch");
    cplx sum{};
    for (const auto& [k, c] : terms_) {
      cplx v = c;
      for (std::size_t j = 0; j < n_; ++j) {
        for (int e = 0; e < k.first[j]; ++e) v *= zeta[j];
        for (int e = 0; e < k.second[j]; ++e) v *= std::conj(zeta[j]);
      }
      sum += v;
    }
    return sum;
  }

  SpherePolynomial& operator+=(const SpherePolynomial& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, c);
    return *this;
  }
  SpherePolynomial& operator-=(const SpherePolynomial& o) {
    check(o);
    for (const auto& [k, c] : o.terms_) add_term(k.first, k.second, -c);
    return *this;
  }
  SpherePolynomial& operator*=(cplx s) {
    if (s == cplx{}) {
      terms_.clear();
      return *this;
    }
    for (auto& [k, c] : terms_) c *= s;
    return *this;
  }

  friend SpherePolynomial operator+(SpherePolynomial a, const SpherePolynomial& b) { return a += b; }
  friend SpherePolynomial operator-(SpherePolynomial a, const SpherePolynomial& b) { return a -= b; }
  friend SpherePolynomial operator*(SpherePolynomial a, cplx s) { return a *= s; }
  friend SpherePolynomial operator*(cplx s, SpherePolynomial a) { return a *= s; }
  friend SpherePolynomial operator*(const SpherePolynomial& a, const SpherePolynomial& b) {
    a.check(b);
    SpherePolynomial out(a.n_);
    for (const auto& [ka, ca] : a.terms_)
      for (const auto& [kb, cb] : b.terms_) out.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
    return out;
  }

  SpherePolynomial pow(int k) const {
    if (k < 0) throw std::invalid_argument("negative power");
    SpherePolynomial out = constant(n_, 1.0);
    for (int i = 0; i < k; ++i) out = out * *this;
    return out;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [k, c] : terms_) {
      if (!first) os << " + ";
      first = false;
      os << '(' << c.real() << (c.imag() < 0 ? "-" : "+") << std::abs(c.imag()) << "i)*z^" << k.first.str()
         << "*zb^" << k.second.str();
    }
    return os.str();
  }

 private:
  void check(const SpherePolynomial& o) const {
    if (o.n_ != n_) throw std::invalid_argument("SpherePolynomial dimension mismatch");
  }

  std::size_t n_;
  Terms terms_;
};

/// Integral against the normalized surface measure (total mass 1). Only
/// terms with p == q contribute.
inline cplx sphere_integral(const SpherePolynomial& P) {
  cplx sum{};
  for (const auto& [k, c] : P.terms())
    if (k.first == k.second) sum += c * sphere_monomial_integral(k.first);
  return sum;
}

inline double sphere_norm_sq(const SpherePolynomial& P) { return sphere_integral(P.conj() * P).real(); }

/// Equality as functions on the sphere: the L^2(sigma) distance is compared
/// against tol * (1 + |P|^2 + |Q|^2).
inline bool sphere_equal(const SpherePolynomial& P, const SpherePolynomial& Q, double tol = 1e-12) {
  if (P.dimension() != Q.dimension()) throw std::invalid_argument("SpherePolynomial dimension mismatch");
  const double diff = sphere_norm_sq(P - Q);
  return diff <= tol * (1.0 + sphere_norm_sq(P) + sphere_norm_sq(Q));
}

}  // namespace fock
