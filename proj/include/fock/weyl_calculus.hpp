#pragma once

// Weyl calculus on polynomial symbols with the Fock weight e^{-gamma|z|^2}:
// the Moyal-type star product, the heat transform exp(Delta/(8 gamma)) and its
// inverse, the layerwise heat transform of radial symbols at infinity, and a
// direct quadrature of the heat transform used as an oracle.

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "quadrature.hpp"
#include "symbols.hpp"

namespace fock {

/// A RadialSymbol with no radial weight terms.
using PolySymbol = RadialSymbol;

namespace detail {

inline void require_polynomial(const RadialSymbol& a, const char* what) {
  if (!a.is_polynomial()) throw std::invalid_argument(std::string(what) + " needs a polynomial symbol");
}

inline void require_gamma(double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
}

// Componentwise maximum of the holomorphic / antiholomorphic exponents.
inline MultiIndex max_exponents(const RadialSymbol& a, bool holo) {
  std::vector<int> m(a.dimension(), 0);
  for (const auto& t : a.terms())
    for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::max(m[j], holo ? t.p[j] : t.q[j]);
  return MultiIndex(m);
}

inline MultiIndex componentwise_min(const MultiIndex& a, const MultiIndex& b) {
  std::vector<int> m(a.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = std::min(a[j], b[j]);
  return MultiIndex(m);
}

// All alpha with 0 <= alpha <= box componentwise.
inline std::vector<MultiIndex> box(const MultiIndex& upper) {
  std::vector<MultiIndex> out{MultiIndex(upper.size())};
  for (std::size_t j = 0; j < upper.size(); ++j) {
    std::vector<MultiIndex> next;
    for (const auto& a : out)
      for (int v = 0; v <= upper[j]; ++v) next.push_back(a.with(j, v));
    out = std::move(next);
  }
  return out;
}

inline double factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int v : a.entries())
    for (int i = 2; i <= v; ++i) f *= i;
  return f;
}

}  // namespace detail

/// d^alpha dbar^beta S.
inline RadialSymbol derivative(const RadialSymbol& S, const MultiIndex& alpha, const MultiIndex& beta) {
  RadialSymbol out = S;
  for (std::size_t j = 0; j < S.dimension(); ++j) {
    for (int i = 0; i < alpha[j]; ++i) out = out.wirtinger(j, Wirtinger::holo);
    for (int i = 0; i < beta[j]; ++i) out = out.wirtinger(j, Wirtinger::anti);
  }
  return out;
}

/// a # b = sum_{alpha,beta} (-1)^{|beta|} / (alpha! beta! (-2 gamma)^{|alpha|+|beta|})
///         * d^alpha dbar^beta a * d^beta dbar^alpha b.
inline PolySymbol star(const PolySymbol& a, const PolySymbol& b, double gamma) {
  detail::require_polynomial(a, "star");
  detail::require_polynomial(b, "star");
  detail::require_gamma(gamma);
  if (a.dimension() != b.dimension()) throw std::invalid_argument("star dimension mismatch");
  const auto alpha_box = detail::componentwise_min(detail::max_exponents(a, true), detail::max_exponents(b, false));
  const auto beta_box = detail::componentwise_min(detail::max_exponents(a, false), detail::max_exponents(b, true));
  PolySymbol out(a.dimension());
  for (const auto& alpha : detail::box(alpha_box)) {
    for (const auto& beta : detail::box(beta_box)) {
      const RadialSymbol da = derivative(a, alpha, beta);
      if (da.is_zero()) continue;
      const RadialSymbol db = derivative(b, beta, alpha);
      if (db.is_zero()) continue;
      const int order = alpha.degree() + beta.degree();
      const double coeff = (beta.degree() % 2 ? -1.0 : 1.0) /
                           (detail::factorial(alpha) * detail::factorial(beta) * std::pow(-2.0 * gamma, order));
      out += da * db * coeff;
    }
  }
  return out;
}

namespace detail {

inline PolySymbol heat_series(const PolySymbol& a, double gamma, double sign) {
  require_polynomial(a, "heat transform");
  require_gamma(gamma);
  PolySymbol out = a, term = a;
  for (int l = 1;; ++l) {
    term = term.laplacian() * (sign / (l * 8.0 * gamma));
    if (term.is_zero()) break;
    out += term;
  }
  return out;
}

}  // namespace detail

/// sum_l Delta^l a / (l! (8 gamma)^l).
inline PolySymbol heat(const PolySymbol& a, double gamma) { return detail::heat_series(a, gamma, 1.0); }

/// sum_l (-1)^l Delta^l a / (l! (8 gamma)^l).
inline PolySymbol heat_inverse(const PolySymbol& a, double gamma) { return detail::heat_series(a, gamma, -1.0); }

/// First N homogeneous layers of the heat transform of S at infinity:
/// layer k = sum_{j+2l=k} Delta^l / (l! (8 gamma)^l) applied to layer j of S.
inline std::vector<HomogeneousSymbol> heat_asymptotic(const RadialSymbol& S, int N, double gamma) {
  detail::require_gamma(gamma);
  if (S.order() > 0) throw std::invalid_argument("heat_asymptotic needs a symbol of order <= 0");
  const auto expansion = homogeneous_expansion(S, N);
  std::vector<HomogeneousSymbol> out(static_cast<std::size_t>(N), HomogeneousSymbol(S.dimension()));
  for (int j = 0; j < N; ++j) {
    HomogeneousSymbol term = expansion.layers[static_cast<std::size_t>(j)];
    for (int l = 0; j + 2 * l < N; ++l) {
      if (l > 0) term = term.laplacian() * (1.0 / (l * 8.0 * gamma));
      if (term.is_zero()) break;
      out[static_cast<std::size_t>(j + 2 * l)] += term;
    }
  }
  return out;
}

/// (1/gamma) sum_j d_j conj(f) * dbar_j g. The leading-symbol statement needs
/// orders <= 0; the formula itself is evaluated for any symbols.
inline RadialSymbol prop8_leading(const RadialSymbol& f, const RadialSymbol& g, double gamma) {
  detail::require_gamma(gamma);
  if (f.dimension() != g.dimension()) throw std::invalid_argument("prop8_leading dimension mismatch");
  const RadialSymbol fb = f.conj();
  RadialSymbol out(f.dimension());
  for (std::size_t j = 0; j < f.dimension(); ++j) out += fb.wirtinger(j, Wirtinger::holo) * g.wirtinger(j, Wirtinger::anti);
  return out * (1.0 / gamma);
}

/// Heat transform by direct quadrature in one complex dimension:
///   (gamma/pi) int_0^inf e^{-2 gamma u} int_0^{2 pi} S(z + sqrt(u) e^{i theta}) dtheta du.
/// Trapezoid in theta (spectrally accurate for these analytic integrands),
/// adaptive Gauss-Kronrod in u.
inline cplx heat_transform_numeric(const RadialSymbol& S, cplx z, double gamma, int angular_points = 256,
                                   double rel_tol = 1e-14) {
  if (S.dimension() != 1) throw std::invalid_argument("heat_transform_numeric is one-dimensional");
  detail::require_gamma(gamma);
  const auto terms = S.terms();
  auto eval = [&](std::complex<long double> w) {
    const long double r2 = std::norm(w);
    std::complex<long double> sum{};
    for (const auto& t : terms) {
      std::complex<long double> v(t.coeff.real(), t.coeff.imag());
      for (int e = 0; e < t.p[0]; ++e) v *= w;
      for (int e = 0; e < t.q[0]; ++e) v *= std::conj(w);
      if (t.exponent != 0.0) v *= std::pow(1.0L + r2, static_cast<long double>(t.exponent) / 2);
      sum += v;
    }
    return sum;
  };
  const std::complex<long double> zl(z.real(), z.imag());
  auto angular = [&](long double u, bool imag) {
    const long double rho = std::sqrt(u);
    std::complex<long double> acc{};
    for (int i = 0; i < angular_points; ++i) {
      const long double th = 2 * std::numbers::pi_v<long double> * i / angular_points;
      acc += eval(zl + std::polar(rho, th));
    }
    acc *= 2 * std::numbers::pi_v<long double> / angular_points;
    return imag ? acc.imag() : acc.real();
  };
  const long double g = gamma, upper = 40.0L / g;
  auto part = [&](bool imag, long double abs_tol) {
    auto f = [&](long double u) { return std::exp(-2 * g * u) * angular(u, imag); };
    return quad::integrate(f, 0.0L, upper, rel_tol, static_cast<double>(abs_tol), {1.0L / g, 4.0L / g}).value;
  };
  const long double scale = g / std::numbers::pi_v<long double>;
  const long double re = part(false, 0.0L);
  // The imaginary part is often exactly zero; bound it relative to the real part.
  const long double im = part(true, rel_tol * std::fabs(re) + 1e-300L);
  return {static_cast<double>(scale * re), static_cast<double>(scale * im)};
}

}  // namespace fock
