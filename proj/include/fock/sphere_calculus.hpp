#pragma once

// Tangential calculus on S^{2n-1}. Every operator acts on the degree-0
// homogeneous extension z^p conj(z)^q |z|^{-|p|-|q|} of a sphere polynomial and
// the result is restricted back to |z| = 1, which gives closed monomial rules.

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "core.hpp"
#include "symbols.hpp"

namespace fock {

enum class TangentialKind { d_b, dbar_b, reeb, radial_R, radial_Rbar };

struct TangentialOperatorTag {
  TangentialKind kind;
  std::size_t j = 0;  // coordinate, 0-based; ignored for reeb / radial fields
};

namespace detail {

template <class F>
SpherePolynomial map_terms(const SpherePolynomial& P, F&& f) {
  SpherePolynomial out(P.dimension());
  for (const auto& [k, c] : P.terms()) f(out, k.first, k.second, c);
  return out;
}

inline void check_index(const SpherePolynomial& P, std::size_t j) {
  if (j >= P.dimension()) throw std::out_of_range("tangential index out of range");
}

}  // namespace detail

/// R = sum z_j d/dz_j: multiplies zeta^p zbar^q by (|p|-|q|)/2.
inline SpherePolynomial radial_R(const SpherePolynomial& P) {
  return detail::map_terms(P, [](SpherePolynomial& out, const MultiIndex& p, const MultiIndex& q, cplx c) {
    out.add_term(p, q, c * (0.5 * (p.degree() - q.degree())));
  });
}

/// Rbar = sum zbar_j d/dzbar_j: multiplies by (|q|-|p|)/2.
inline SpherePolynomial radial_Rbar(const SpherePolynomial& P) {
  return detail::map_terms(P, [](SpherePolynomial& out, const MultiIndex& p, const MultiIndex& q, cplx c) {
    out.add_term(p, q, c * (0.5 * (q.degree() - p.degree())));
  });
}

/// Reeb field E = (Rbar - R)/(2|z|) on the sphere.
inline SpherePolynomial reeb(const SpherePolynomial& P) {
  return detail::map_terms(P, [](SpherePolynomial& out, const MultiIndex& p, const MultiIndex& q, cplx c) {
    out.add_term(p, q, c * (0.5 * (q.degree() - p.degree())));
  });
}

/// d_j - (zbar_j/|z|^2) R.
inline SpherePolynomial d_b(std::size_t j, const SpherePolynomial& P) {
  detail::check_index(P, j);
  const std::size_t n = P.dimension();
  return detail::map_terms(P, [&](SpherePolynomial& out, const MultiIndex& p, const MultiIndex& q, cplx c) {
    if (p[j] > 0) out.add_term(p.with(j, -1), q, c * static_cast<double>(p[j]));
    if (p.degree() > 0) out.add_term(p, q + MultiIndex::unit(n, j), -c * static_cast<double>(p.degree()));
  });
}

/// dbar_j - (z_j/|z|^2) Rbar.
inline SpherePolynomial dbar_b(std::size_t j, const SpherePolynomial& P) {
  detail::check_index(P, j);
  const std::size_t n = P.dimension();
  return detail::map_terms(P, [&](SpherePolynomial& out, const MultiIndex& p, const MultiIndex& q, cplx c) {
    if (q[j] > 0) out.add_term(p, q.with(j, -1), c * static_cast<double>(q[j]));
    if (q.degree() > 0) out.add_term(p + MultiIndex::unit(n, j), q, -c * static_cast<double>(q.degree()));
  });
}

inline SpherePolynomial apply(const TangentialOperatorTag& op, const SpherePolynomial& P) {
  switch (op.kind) {
    case TangentialKind::d_b: return d_b(op.j, P);
    case TangentialKind::dbar_b: return dbar_b(op.j, P);
    case TangentialKind::reeb: return reeb(P);
    case TangentialKind::radial_R: return radial_R(P);
    case TangentialKind::radial_Rbar: return radial_Rbar(P);
  }
  throw std::logic_error("unknown tangential operator");
}

/// {phi, psi}_F = sum_j d_b phi * dbar_b psi - E phi * E psi.
inline SpherePolynomial bracket_F(const SpherePolynomial& phi, const SpherePolynomial& psi) {
  if (phi.dimension() != psi.dimension()) throw std::invalid_argument("bracket dimension mismatch");
  SpherePolynomial out = reeb(phi) * reeb(psi) * -1.0;
  for (std::size_t j = 0; j < phi.dimension(); ++j) out += d_b(j, phi) * dbar_b(j, psi);
  return out;
}

/// Leading coefficient of r^{m+k+2} sum_j d_j conj(f) dbar_j g for f of
/// order -m and g of order -k with leading sphere parts f_m, g_k:
///   (m/2 + E) conj(f_m) * (k/2 - E) g_k + sum_j d_b conj(f_m) * dbar_b g_k.
/// The first slot is conjugated.
inline SpherePolynomial q_symbolic(const SpherePolynomial& f_lead, double m, const SpherePolynomial& g_lead, double k) {
  if (f_lead.dimension() != g_lead.dimension()) throw std::invalid_argument("q_symbolic dimension mismatch");
  const SpherePolynomial fb = f_lead.conj();
  SpherePolynomial out = (fb * (m / 2.0) + reeb(fb)) * (g_lead * (k / 2.0) - reeb(g_lead));
  for (std::size_t j = 0; j < fb.dimension(); ++j) out += d_b(j, fb) * dbar_b(j, g_lead);
  return out;
}

/// Degree-0 extension z^p zbar^q |z|^{-|p|-|q|} as a homogeneous symbol.
inline HomogeneousSymbol degree0_extension(const SpherePolynomial& P) {
  HomogeneousSymbol H(P.dimension());
  for (const auto& [k, c] : P.terms()) H.add_term(c, k.first, k.second, -static_cast<double>(k.first.degree() + k.second.degree()));
  return H;
}

/// sum_j d_b dbar_b P - E E P, the operator L written with the tangential
/// fields. Only for n = 1 (or P annihilated by E) is this Laplacian/4 of the
/// degree-0 extension; see sphere_laplacian.
inline SpherePolynomial tangential_laplacian(const SpherePolynomial& P) {
  SpherePolynomial out = reeb(reeb(P)) * -1.0;
  for (std::size_t j = 0; j < P.dimension(); ++j) out += d_b(j, dbar_b(j, P));
  return out;
}

/// Laplacian/4 on the sphere via tangential fields. d_b and dbar_b do not
/// commute: sum_j [dbar_b, d_b] = 2(n-1) E on the sphere, so the symmetric
/// form picks up (n-1) E relative to tangential_laplacian.
inline SpherePolynomial sphere_laplacian(const SpherePolynomial& P) {
  return tangential_laplacian(P) + reeb(P) * static_cast<double>(P.dimension() - 1);
}

inline SpherePolynomial extension_laplacian(const SpherePolynomial& P) {
  return degree0_extension(P).laplacian().restrict_to_sphere();
}

struct QNumericResult {
  std::vector<double> radii;
  std::vector<cplx> values;        // r^exponent * sum_j d_j conj(f) dbar_j g at r zeta
  std::vector<cplx> extrapolated;  // Richardson in r^{-2} on consecutive radii
  cplx limit{};
  double cauchy_gap = 0.0;  // relative difference of the last two estimates
  bool converged = false;
};

inline constexpr double kQNumericTolerance = 1e-6;
inline const std::vector<double> kQNumericRadii{1e2, 1e3, 1e4};

/// r^exponent * sum_j (d_j conj f)(r zeta) (dbar_j g)(r zeta) over the radii.
/// The expansion of these symbols steps by |z|^{-2}, so consecutive pairs are
/// Richardson-extrapolated in r^{-2}; convergence is the Cauchy test on the
/// last two extrapolated values (or on the raw values with only two radii).
inline QNumericResult q_numeric(const RadialSymbol& f, const RadialSymbol& g, std::span<const cplx> zeta,
                                const std::vector<double>& radii, double exponent,
                                double rel_tol = kQNumericTolerance) {
  const std::size_t n = f.dimension();
  if (g.dimension() != n || zeta.size() != n) throw std::invalid_argument("q_numeric dimension mismatch");
  if (std::abs(norm_sq(zeta) - 1.0) > 2e-12) throw std::invalid_argument("q_numeric point is not on the unit sphere");
  if (radii.empty()) throw std::invalid_argument("q_numeric needs at least one radius");
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (!(radii[i] > 0) || (i && !(radii[i] > radii[i - 1])))
      throw std::invalid_argument("q_numeric radii must be positive and increasing");

  const RadialSymbol fb = f.conj();
  std::vector<RadialSymbol> df, dg;
  for (std::size_t j = 0; j < n; ++j) {
    df.push_back(fb.wirtinger(j, Wirtinger::holo));
    dg.push_back(g.wirtinger(j, Wirtinger::anti));
  }
  QNumericResult res;
  res.radii = radii;
  std::vector<cplx> z(n);
  for (double r : radii) {
    for (std::size_t j = 0; j < n; ++j) z[j] = r * zeta[j];
    cplx s{};
    for (std::size_t j = 0; j < n; ++j) s += df[j].evaluate(z) * dg[j].evaluate(z);
    res.values.push_back(std::pow(r, exponent) * s);
  }
  for (std::size_t i = 1; i < radii.size(); ++i) {
    const double a = radii[i - 1] * radii[i - 1], b = radii[i] * radii[i];
    res.extrapolated.push_back((b * res.values[i] - a * res.values[i - 1]) / (b - a));
  }
  const auto& seq = res.extrapolated.size() >= 2 ? res.extrapolated : res.values;
  res.limit = res.extrapolated.empty() ? res.values.back() : res.extrapolated.back();
  if (seq.size() >= 2) {
    const cplx last = seq.back(), prev = seq[seq.size() - 2];
    res.cauchy_gap = std::abs(last - prev) / std::max(1.0, std::abs(last));
    res.converged = res.cauchy_gap <= rel_tol;
  }
  return res;
}

inline QNumericResult q_numeric(const RadialSymbol& f, const RadialSymbol& g, std::span<const cplx> zeta, double exponent) {
  return q_numeric(f, g, zeta, kQNumericRadii, exponent);
}

}  // namespace fock
