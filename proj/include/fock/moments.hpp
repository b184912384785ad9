#pragma once

// Radial moments int_0^inf u^d (1+u)^{t/2} e^{-gamma u} du.
//
// Everything is computed in the normalized form
//   J_t(d) = E[(1+U)^{t/2}],  U ~ Gamma(shape d+1, rate gamma),
// so that radial_moment(d,t,gamma) = d!/gamma^{d+1} * J_t(d) never has to be
// formed for large d. Three routes:
//   * t/2 a nonnegative integer: finite binomial sum of Gamma moments.
//   * t/2 a negative integer: forward recurrence in the shape,
//       J_s(a+1) = (gamma/a) (J_{s-1}(a) - J_s(a)),  J_0 = 1,
//     with s = -t/2, which contracts errors once a > gamma.
//   * otherwise: adaptive quadrature for small shapes, and the central-moment
//     expansion of (1+U)^{t/2} about the mean for large shapes.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <vector>

#include "quadrature.hpp"

namespace fock {

namespace detail {

inline bool is_integer(double x) { return x == std::floor(x); }

/// Shape above which the asymptotic central-moment series is used.
inline constexpr double kAsymptoticShape = 400.0;

inline double moment_by_quadrature(double shape, double t, double gamma) {
  const long double a = shape, g = gamma, half = t / 2.0;
  const long double lognorm = a * std::log(g) - std::lgamma(a);
  auto integrand = [&](long double u) -> long double {
    if (u <= 0) return a == 1 ? std::exp(lognorm) : 0.0L;
    const long double logd = (a - 1) * std::log(u) - g * u + lognorm;
    return std::exp(logd + half * std::log1p(u));
  };
  const long double mode = (a - 1) / g;
  const long double spread = std::sqrt(a) / g;
  const long double upper = mode + 14 * spread + (60 + std::fabs(half) * 4) / g + 2;
  std::vector<long double> breaks{1.0L, mode, mode - 3 * spread, mode + 3 * spread};
  auto r = quad::integrate(integrand, 0.0L, upper, 1e-15, 0.0, breaks, 20000);
  return static_cast<double>(r.value);
}

inline double moment_by_series(double shape, double t, double gamma) {
  // E[(1+U)^{-s}] = (1+mu)^{-s} sum_k binom(-s,k) E[X^k]/(1+mu)^k, X = U - mu
  const double s = -t / 2.0;
  const double a = shape, mu = a / gamma, scale = gamma + a;
  double mk_prev = 1.0, mk = 0.0;  // scaled central moments for k-1 = 0, k = 1
  double binom = 1.0, sum = 1.0;
  int small_run = 0;
  const int kmax = static_cast<int>(std::min(400.0, a / 2.0));
  for (int k = 1; k < kmax; ++k) {
    binom *= (-s - (k - 1)) / k;
    const double term = binom * mk;
    sum += term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) {
      if (++small_run >= 2) break;
    } else {
      small_run = 0;
    }
    const double next = k * (mk + a * mk_prev / scale) / scale;
    mk_prev = mk;
    mk = next;
  }
  return std::pow(1.0 + mu, -s) * sum;
}

inline double moment_polynomial(double shape, int m, double gamma) {
  // E[(1+U)^m] = sum_i binom(m,i) a(a+1)...(a+i-1) / gamma^i
  double sum = 0.0, rising = 1.0, binom = 1.0;
  for (int i = 0; i <= m; ++i) {
    sum += binom * rising;
    rising *= (shape + i) / gamma;
    binom *= static_cast<double>(m - i) / (i + 1);
  }
  return sum;
}

}  // namespace detail

/// J_t(d) = E[(1+U)^{t/2}], U ~ Gamma(d+1, gamma).
inline double normalized_radial_moment(int d, double t, double gamma) {
  if (d < 0) throw std::invalid_argument("radial moment degree must be >= 0");
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
  const double shape = d + 1.0, half = t / 2.0;
  if (half == 0.0) return 1.0;
  if (half > 0 && detail::is_integer(half)) return detail::moment_polynomial(shape, static_cast<int>(half), gamma);
  if (shape >= detail::kAsymptoticShape && shape > 4 * gamma) return detail::moment_by_series(shape, t, gamma);
  return detail::moment_by_quadrature(shape, t, gamma);
}

/// int_0^inf u^d (1+u)^{t/2} e^{-gamma u} du.
inline double radial_moment(int d, double t, double gamma) {
  return std::exp(std::lgamma(d + 1.0) - (d + 1.0) * std::log(gamma)) * normalized_radial_moment(d, t, gamma);
}

/// J_t(0..dmax) for one (t, gamma), built with the cheapest exact route.
inline std::vector<double> normalized_moment_table(double t, double gamma, int dmax) {
  if (dmax < 0) return {};
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
  std::vector<double> out(static_cast<std::size_t>(dmax) + 1);
  const double half = t / 2.0;
  if (half < 0 && detail::is_integer(half)) {
    const int s = static_cast<int>(-half);
    // Seed every level by quadrature up to a shape past gamma, then recur.
    const int seed_shape = std::max(1, static_cast<int>(std::ceil(2 * gamma)));
    std::vector<double> level(static_cast<std::size_t>(s) + 1, 1.0);
    for (int a = 1; a <= std::min(seed_shape, dmax + 1); ++a) {
      for (int r = 1; r <= s; ++r) level[static_cast<std::size_t>(r)] = detail::moment_by_quadrature(a, -2.0 * r, gamma);
      out[static_cast<std::size_t>(a - 1)] = level[static_cast<std::size_t>(s)];
    }
    for (int a = seed_shape; a <= dmax; ++a) {
      const double f = gamma / a;
      for (int r = s; r >= 1; --r)
        level[static_cast<std::size_t>(r)] = f * (level[static_cast<std::size_t>(r - 1)] - level[static_cast<std::size_t>(r)]);
      out[static_cast<std::size_t>(a)] = level[static_cast<std::size_t>(s)];
    }
    return out;
  }
  for (int d = 0; d <= dmax; ++d) out[static_cast<std::size_t>(d)] = normalized_radial_moment(d, t, gamma);
  return out;
}

/// Lazily grown tables of J_t(d), one per exponent t, for a fixed gamma.
class MomentCache {
 public:
  explicit MomentCache(double gamma) : gamma_(gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
  }

  double gamma() const { return gamma_; }

  /// Make sure J_t(0..dmax) is available.
  void reserve(double t, int dmax) {
    auto& tab = tables_[t];
    if (static_cast<int>(tab.size()) > dmax) return;
    tab = normalized_moment_table(t, gamma_, std::max(dmax, 2 * static_cast<int>(tab.size())));
  }

  double operator()(double t, int d) {
    auto& tab = tables_[t];
    if (d >= static_cast<int>(tab.size())) reserve(t, d);
    return tables_[t][static_cast<std::size_t>(d)];
  }

 private:
  double gamma_;
  std::map<double, std::vector<double>> tables_;
};

}  // namespace fock
