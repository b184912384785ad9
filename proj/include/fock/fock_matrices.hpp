#pragma once

// Truncated operator matrices on the Fock space F_gamma in the orthonormal
// basis e_alpha = z^alpha / ||z^alpha||, |alpha| <= D, graded order.
//
// Toeplitz entries separate into angular x radial parts. For a term
// c z^p zbar^q (1+|z|^2)^{t/2}, with a = alpha + p and beta = a - q,
//   <T e_alpha, e_beta> = c * J_t(|a|+n-1) * gamma^{-(|p|+|q|)/2}
//                         * sqrt((a!/alpha!) (a!/beta!))
// where J_t(d) = E[(1+U)^{t/2}], U ~ Gamma(d+1, gamma).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "core.hpp"
#include "moments.hpp"
#include "symbols.hpp"
#include "weyl_calculus.hpp"

namespace fock {

using ComplexMatrix = Eigen::MatrixXcd;

struct FockContext {
  std::size_t n = 1;
  double gamma = 1.0;

  FockContext(std::size_t n_, double gamma_) : n(n_), gamma(gamma_) {
    if (n == 0) throw std::invalid_argument("dimension must be >= 1");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
  }
};

struct OperatorMatrix {
  FockContext ctx;
  int D = 0;
  std::vector<MultiIndex> basis;
  ComplexMatrix entries;
  std::vector<Shift> shifts;  // beta - alpha values that may be nonzero
  int shift_range = 0;        // max change of total degree
  bool hermitian = false;
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t dim() const { return basis.size(); }
};

/// Largest |M - M^*| entry relative to the largest |M| entry.
inline double hermitian_defect(const ComplexMatrix& M) {
  const double scale = M.size() ? M.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) return 0.0;
  return (M - M.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline constexpr double kHermitianGate = 1e-12;

/// ||z^alpha||^2 = (pi/gamma)^n alpha! / gamma^{|alpha|}.
inline double monomial_norm_sq(const FockContext& ctx, const MultiIndex& alpha) {
  if (alpha.size() != ctx.n) throw std::invalid_argument("multi-index dimension differs from context");
  double lg = ctx.n * std::log(std::numbers::pi / ctx.gamma) - alpha.degree() * std::log(ctx.gamma);
  for (int v : alpha.entries()) lg += log_factorial(v);
  return std::exp(lg);
}

namespace detail {

inline std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> index_of(const std::vector<MultiIndex>& basis) {
  std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> idx;
  idx.reserve(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) idx.emplace(basis[i], i);
  return idx;
}

// sqrt((a!/alpha!) (a!/beta!)) with a = alpha + p, beta = a - q, as rising
// products (p, q are small).
inline double ladder_factor(const MultiIndex& alpha, const MultiIndex& p, const MultiIndex& beta, const MultiIndex& q) {
  double prod = 1.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    for (int i = 1; i <= p[j]; ++i) prod *= alpha[j] + i;
    for (int i = 1; i <= q[j]; ++i) prod *= beta[j] + i;
  }
  return std::sqrt(prod);
}

}  // namespace detail

/// Compression of multiplication by S to span{e_alpha : |alpha| <= D}.
inline OperatorMatrix toeplitz_matrix(const FockContext& ctx, const RadialSymbol& S, int D) {
  if (S.dimension() != ctx.n) throw std::invalid_argument("symbol dimension differs from context");
  OperatorMatrix M{ctx, D, enumerate_basis(ctx.n, D), {}, S.shifts(), S.shift_range(), S.is_real(), {}};
  const std::size_t N = M.basis.size();
  M.entries = ComplexMatrix::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  const auto idx = detail::index_of(M.basis);
  const auto terms = S.terms();
  MomentCache moments(ctx.gamma);
  const int nn = static_cast<int>(ctx.n);
  for (const auto& term : terms) moments.reserve(term.exponent, D + term.p.degree() + nn);

  for (std::size_t col = 0; col < N; ++col) {
    const MultiIndex& alpha = M.basis[col];
    for (const auto& term : terms) {
      const MultiIndex a = alpha + term.p;
      if (!term.q.divides(a)) continue;
      const MultiIndex beta = a - term.q;
      if (beta.degree() > D) continue;
      const std::size_t row = idx.at(beta);
      const double radial = moments(term.exponent, a.degree() + nn - 1);
      const double scale = std::pow(ctx.gamma, -0.5 * (term.p.degree() + term.q.degree()));
      M.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) +=
          term.coeff * (radial * scale * detail::ladder_factor(alpha, term.p, beta, term.q));
    }
  }
  if (M.hermitian && hermitian_defect(M.entries) > kHermitianGate) M.hermitian = false;
  M.provenance = {{"kind", "toeplitz"}, {"symbol", symbol_to_json(S)}, {"D", D}, {"buffer", 0},
                  {"gamma", ctx.gamma}, {"n", ctx.n}};
  return M;
}

/// One factor of a product: a builder that assembles it at any degree, with
/// its shift range and a description for provenance.
struct FactorSpec {
  std::function<OperatorMatrix(int)> build;
  int shift_range = 0;
  nlohmann::json description;
};

inline FactorSpec toeplitz_factor(const FockContext& ctx, const RadialSymbol& S) {
  return {[ctx, S](int D) { return toeplitz_matrix(ctx, S, D); }, S.shift_range(),
          {{"kind", "toeplitz"}, {"symbol", symbol_to_json(S)}}};
}

/// A precomputed matrix; usable only while the requested degree fits.
inline FactorSpec matrix_factor(const OperatorMatrix& M) {
  return {[M](int D) {
            if (D > M.D)
              throw std::invalid_argument("matrix factor was assembled at degree " + std::to_string(M.D) +
                                          " but degree " + std::to_string(D) + " is needed");
            OperatorMatrix out = M;
            const auto dim = static_cast<Eigen::Index>(enumerate_basis(M.ctx.n, D).size());
            out.D = D;
            out.basis.resize(static_cast<std::size_t>(dim));
            out.entries = M.entries.topLeftCorner(dim, dim);
            return out;
          },
          M.shift_range, M.provenance};
}

inline FactorSpec identity_factor(const FockContext& ctx) {
  return toeplitz_factor(ctx, RadialSymbol::constant(ctx.n, 1.0));
}

/// Product of the factors (left to right) on the degree-<=D block. Each factor
/// is assembled at degree D + B, B the summed shift ranges, so every
/// intermediate state of a degree-<=D input stays inside the truncation and
/// the returned block is exact.
inline OperatorMatrix buffered_product(const FockContext& ctx, const std::vector<FactorSpec>& factors, int D) {
  if (factors.empty()) throw std::invalid_argument("buffered_product needs at least one factor");
  int B = 0;
  for (const auto& f : factors) B += f.shift_range;
  ComplexMatrix prod;
  nlohmann::json desc = nlohmann::json::array();
  std::vector<Shift> shifts{Shift(ctx.n, 0)};
  bool all_hermitian = factors.size() == 1;
  for (const auto& f : factors) {
    OperatorMatrix F = f.build(D + B);
    prod = prod.size() ? ComplexMatrix(prod * F.entries) : F.entries;
    std::vector<Shift> next;
    for (const auto& s : shifts)
      for (const auto& t : F.shifts) {
        Shift u(ctx.n);
        for (std::size_t j = 0; j < ctx.n; ++j) u[j] = s[j] + t[j];
        if (std::find(next.begin(), next.end(), u) == next.end()) next.push_back(u);
      }
    shifts = std::move(next);
    if (factors.size() == 1) all_hermitian = F.hermitian;
    desc.push_back(f.description);
  }
  OperatorMatrix M{ctx, D, enumerate_basis(ctx.n, D), {}, shifts, B, false, {}};
  const auto dim = static_cast<Eigen::Index>(M.basis.size());
  M.entries = prod.topLeftCorner(dim, dim);
  M.hermitian = all_hermitian || (hermitian_defect(M.entries) <= kHermitianGate);
  M.provenance = {{"kind", "product"}, {"factors", desc}, {"D", D}, {"buffer", B}, {"gamma", ctx.gamma}, {"n", ctx.n}};
  return M;
}

/// H_f^* H_g = T_{conj(f) g} - T_{conj f} T_g.
inline OperatorMatrix hankel_product(const FockContext& ctx, const RadialSymbol& f, const RadialSymbol& g, int D) {
  const RadialSymbol fb = f.conj();
  OperatorMatrix M = toeplitz_matrix(ctx, fb * g, D);
  const OperatorMatrix P = buffered_product(ctx, {toeplitz_factor(ctx, fb), toeplitz_factor(ctx, g)}, D);
  M.entries -= P.entries;
  M.shift_range = std::max(M.shift_range, P.shift_range);
  for (const auto& s : P.shifts)
    if (std::find(M.shifts.begin(), M.shifts.end(), s) == M.shifts.end()) M.shifts.push_back(s);
  M.hermitian = hermitian_defect(M.entries) <= kHermitianGate;
  M.provenance = {{"kind", "hankel_product"}, {"f", symbol_to_json(f)}, {"g", symbol_to_json(g)}, {"D", D},
                  {"buffer", P.shift_range}, {"gamma", ctx.gamma}, {"n", ctx.n}};
  return M;
}

/// W_a := T_{heat_inverse(a)} for polynomial a.
inline OperatorMatrix weyl_matrix(const FockContext& ctx, const PolySymbol& a, int D) {
  OperatorMatrix M = toeplitz_matrix(ctx, heat_inverse(a, ctx.gamma), D);
  M.provenance["kind"] = "weyl";
  M.provenance["symbol"] = symbol_to_json(a);
  return M;
}

inline FactorSpec weyl_factor(const FockContext& ctx, const PolySymbol& a) {
  return {[ctx, a](int D) { return weyl_matrix(ctx, a, D); }, a.shift_range(),
          {{"kind", "weyl"}, {"symbol", symbol_to_json(a)}}};
}

struct BerezinResult {
  cplx value;
  bool truncation_warning = false;  // degree too small for the kernel mass at w
};

/// Normalized coherent-state expectation <M k_w, k_w>.
inline BerezinResult berezin(const OperatorMatrix& M, std::span<const cplx> w) {
  const FockContext& ctx = M.ctx;
  if (w.size() != ctx.n) throw std::invalid_argument("Berezin point dimension differs from context");
  const double x = ctx.gamma * norm_sq(w);
  BerezinResult res;
  res.truncation_warning = M.D < x + 10.0 * std::sqrt(x) + 20.0;
  // e_alpha(w) / sqrt(K(w,w)) computed in logs: K = (gamma/pi)^n e^{gamma |w|^2}.
  const std::size_t N = M.dim();
  Eigen::VectorXcd e(static_cast<Eigen::Index>(N));
  for (std::size_t i = 0; i < N; ++i) {
    const MultiIndex& a = M.basis[i];
    double logmag = 0.5 * (a.degree() * std::log(ctx.gamma) - x);
    double phase = 0.0;
    bool zero = false;
    for (std::size_t j = 0; j < ctx.n; ++j) {
      logmag -= 0.5 * log_factorial(a[j]);
      if (a[j] == 0) continue;
      if (w[j] == cplx{}) {
        zero = true;
        break;
      }
      logmag += a[j] * std::log(std::abs(w[j]));
      phase += a[j] * std::arg(w[j]);
    }
    e(static_cast<Eigen::Index>(i)) = zero ? cplx{} : std::polar(std::exp(logmag), phase);
  }
  // sum_{beta,alpha} e_beta(w) M_{beta alpha} conj(e_alpha(w))
  res.value = (e.transpose() * (M.entries * e.conjugate()))(0);
  return res;
}

inline void write_matrix_csv(const OperatorMatrix& M, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "row,col,re,im\n";
  os.precision(17);
  for (Eigen::Index c = 0; c < M.entries.cols(); ++c)
    for (Eigen::Index r = 0; r < M.entries.rows(); ++r) {
      const cplx v = M.entries(r, c);
      if (v != cplx{}) os << r << ',' << c << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

/// int64 rows, int64 cols, then row-major (re, im) doubles.
inline void write_matrix_binary(const OperatorMatrix& M, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  const std::int64_t rows = M.entries.rows(), cols = M.entries.cols();
  os.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  os.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double re = M.entries(r, c).real(), im = M.entries(r, c).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof re);
      os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
}

inline ComplexMatrix read_matrix_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::int64_t rows = 0, cols = 0;
  is.read(reinterpret_cast<char*>(&rows), sizeof rows);
  is.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!is || rows < 0 || cols < 0) throw std::runtime_error("bad matrix header in " + path);
  ComplexMatrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double re = 0, im = 0;
      is.read(reinterpret_cast<char*>(&re), sizeof re);
      is.read(reinterpret_cast<char*>(&im), sizeof im);
      M(r, c) = {re, im};
    }
  if (!is) throw std::runtime_error("truncated matrix data in " + path);
  return M;
}

inline void write_provenance(const OperatorMatrix& M, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << M.provenance.dump(2) << '\n';
}

}  // namespace fock
