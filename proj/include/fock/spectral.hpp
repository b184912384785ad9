#pragma once

// s-number sequences, dense spectra of truncated matrices, and the exact
// spectrum of torus-diagonal operator expressions (products of sums of
// Toeplitz chains whose shifts cancel), which is read off per multi-index
// without any truncation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "fock_matrices.hpp"
#include "moments.hpp"
#include "symbols.hpp"

namespace fock {

enum class SpectrumProvenance { exact_diagonal, truncated };

/// Nonincreasing nonnegative values stored as (value, multiplicity) runs with
/// compensated prefix sums, so ranks up to ~1e8 are cheap.
class SNumberSequence {
 public:
  struct Run {
    double value;
    std::uint64_t multiplicity;
  };

  SNumberSequence() = default;

  /// Runs in any order; sorted here. Negative values are rejected.
  SNumberSequence(std::vector<Run> runs, SpectrumProvenance provenance, std::int64_t parameter)
      : provenance_(provenance), parameter_(parameter) {
    for (const auto& r : runs)
      if (!(r.value >= 0) || !std::isfinite(r.value)) throw std::invalid_argument("s-numbers must be finite and >= 0");
    std::stable_sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.value > b.value; });
    for (const auto& r : runs) {
      if (r.multiplicity == 0) continue;
      if (!runs_.empty() && runs_.back().value == r.value) runs_.back().multiplicity += r.multiplicity;
      else runs_.push_back(r);
    }
    build_prefix();
    exact_ranks_ = size();
  }

  static SNumberSequence from_values(const std::vector<double>& values, SpectrumProvenance provenance,
                                     std::int64_t parameter) {
    std::vector<Run> runs;
    runs.reserve(values.size());
    for (double v : values) runs.push_back({v, 1});
    return SNumberSequence(std::move(runs), provenance, parameter);
  }

  SpectrumProvenance provenance() const { return provenance_; }
  /// K_max (highest degree) for exact-diagonal data, D for truncated data.
  std::int64_t parameter() const { return parameter_; }
  const std::vector<Run>& runs() const { return runs_; }

  std::uint64_t size() const { return cum_count_.empty() ? 0 : cum_count_.back(); }
  bool empty() const { return size() == 0; }

  /// Leading ranks guaranteed to coincide with the s-numbers of the full
  /// operator (all of them for truncated data, by convention).
  std::uint64_t exact_ranks() const { return exact_ranks_; }
  void set_exact_ranks(std::uint64_t k) { exact_ranks_ = std::min(k, size()); }

  /// s_j, 0-based.
  double operator[](std::uint64_t j) const {
    if (j >= size()) throw std::out_of_range("s-number rank out of range");
    return runs_[run_of(j)].value;
  }

  /// sum_{j <= K} s_j, 0-based inclusive.
  double partial_sum(std::uint64_t K) const {
    if (K >= size()) throw std::out_of_range("partial sum rank out of range");
    const std::size_t r = run_of(K);
    const std::uint64_t before = r ? cum_count_[r - 1] : 0;
    const double head = r ? cum_sum_[r - 1] : 0.0;
    return head + runs_[r].value * static_cast<double>(K + 1 - before);
  }

  /// sum_{j <= K} s_j^p.
  double power_sum(double p, std::uint64_t K) const {
    if (K >= size()) throw std::out_of_range("power sum rank out of range");
    double sum = 0.0, comp = 0.0;
    std::uint64_t seen = 0;
    for (const auto& r : runs_) {
      const std::uint64_t take = std::min<std::uint64_t>(r.multiplicity, K + 1 - seen);
      neumaier_add(sum, comp, std::pow(r.value, p) * static_cast<double>(take));
      seen += take;
      if (seen > K) break;
    }
    return sum + comp;
  }

  SNumberSequence scaled(double lambda) const {
    if (!(lambda >= 0)) throw std::invalid_argument("scale must be >= 0");
    std::vector<Run> runs = runs_;
    for (auto& r : runs) r.value *= lambda;
    SNumberSequence out(std::move(runs), provenance_, parameter_);
    out.exact_ranks_ = exact_ranks_;
    return out;
  }

  /// Spectrum of the direct sum: the sorted merge. Exactness is kept only for
  /// values above both inputs' exactness thresholds.
  static SNumberSequence merged(const SNumberSequence& a, const SNumberSequence& b) {
    std::vector<Run> runs = a.runs_;
    runs.insert(runs.end(), b.runs_.begin(), b.runs_.end());
    SNumberSequence out(std::move(runs), a.provenance_ == b.provenance_ ? a.provenance_ : SpectrumProvenance::truncated,
                        std::min(a.parameter_, b.parameter_));
    const double ta = a.exact_threshold(), tb = b.exact_threshold();
    const double t = std::max(ta, tb);
    std::uint64_t count = 0;
    for (const auto& r : out.runs_) {
      if (!(r.value > t)) break;
      count += r.multiplicity;
    }
    out.exact_ranks_ = (ta < 0 && tb < 0) ? out.size() : count;
    return out;
  }

  /// CSV "rank,value"; run-length form writes "first_rank,multiplicity,value".
  void write_csv(const std::string& path, bool run_length = false) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.precision(17);
    std::uint64_t rank = 0;
    if (run_length) {
      os << "first_rank,multiplicity,value\n";
      for (const auto& r : runs_) {
        os << rank << ',' << r.multiplicity << ',' << r.value << '\n';
        rank += r.multiplicity;
      }
    } else {
      os << "rank,value\n";
      for (const auto& r : runs_)
        for (std::uint64_t m = 0; m < r.multiplicity; ++m) os << rank++ << ',' << r.value << '\n';
    }
  }

 private:
  static void neumaier_add(double& sum, double& comp, double x) {
    const double t = sum + x;
    comp += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }

  void build_prefix() {
    cum_count_.resize(runs_.size());
    cum_sum_.resize(runs_.size());
    std::uint64_t count = 0;
    double sum = 0.0, comp = 0.0;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      count += runs_[i].multiplicity;
      neumaier_add(sum, comp, runs_[i].value * static_cast<double>(runs_[i].multiplicity));
      cum_count_[i] = count;
      cum_sum_[i] = sum + comp;
    }
  }

  std::size_t run_of(std::uint64_t j) const {
    return static_cast<std::size_t>(std::upper_bound(cum_count_.begin(), cum_count_.end(), j) - cum_count_.begin());
  }

  // Values strictly above this are exact; -1 when everything is.
  double exact_threshold() const {
    if (exact_ranks_ >= size()) return -1.0;
    return (*this)[exact_ranks_];
  }

  std::vector<Run> runs_;
  std::vector<std::uint64_t> cum_count_;
  std::vector<double> cum_sum_;
  SpectrumProvenance provenance_ = SpectrumProvenance::truncated;
  std::int64_t parameter_ = 0;
  std::uint64_t exact_ranks_ = 0;
};

inline constexpr double kResidualTolerance = 1e-10;

/// Eigenvalues of a Hermitian truncation, sorted by |lambda| descending, with
/// the residual contract ||M v - lambda v|| <= 1e-10 ||M|| checked per pair.
inline std::vector<double> signed_eigenvalues(const OperatorMatrix& M) {
  if (!M.hermitian) throw std::invalid_argument("hermitian_spectrum needs a matrix that passed the hermitian gate");
  const ComplexMatrix H = (M.entries + M.entries.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  const double norm = H.size() ? H.operatorNorm() : 0.0;
  const ComplexMatrix R = M.entries * es.eigenvectors() - es.eigenvectors() * es.eigenvalues().asDiagonal();
  for (Eigen::Index k = 0; k < R.cols(); ++k)
    if (R.col(k).norm() > kResidualTolerance * std::max(norm, 1e-300))
      throw std::runtime_error("eigenpair residual exceeds tolerance");
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end(), [](double a, double b) { return std::fabs(a) > std::fabs(b); });
  return out;
}

inline SNumberSequence hermitian_spectrum(const OperatorMatrix& M) {
  std::vector<double> ev = signed_eigenvalues(M);
  for (double& v : ev) v = std::fabs(v);
  return SNumberSequence::from_values(ev, SpectrumProvenance::truncated, M.D);
}

inline std::vector<double> singular_values(const ComplexMatrix& A) {
  Eigen::BDCSVD<ComplexMatrix> svd(A);
  const auto& s = svd.singularValues();
  std::vector<double> out(s.data(), s.data() + s.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// s-numbers of the truncation. For moderate sizes s_j(M^*) = s_j(M) is
/// checked as an internal consistency test.
inline SNumberSequence singular_values(const OperatorMatrix& M, bool check_adjoint = true) {
  std::vector<double> s = singular_values(M.entries);
  if (check_adjoint && M.dim() <= 512) {
    const std::vector<double> t = singular_values(ComplexMatrix(M.entries.adjoint()));
    const double scale = s.empty() ? 0.0 : s.front();
    for (std::size_t j = 0; j < s.size(); ++j)
      if (std::fabs(s[j] - t[j]) > 1e-10 * std::max(scale, 1e-300))
        throw std::runtime_error("s_j(M*) differs from s_j(M)");
  }
  return SNumberSequence::from_values(s, SpectrumProvenance::truncated, M.D);
}

// ---------------------------------------------------------------------------
// Operator expressions: products of sums of Toeplitz chains.

/// coeff * T_{f_1} T_{f_2} ... T_{f_k}
struct ToeplitzChain {
  cplx coeff = 1.0;
  std::vector<RadialSymbol> factors;
};

/// A sum of chains; the expression is the product of its sums, left to right.
struct ChainSum {
  std::vector<ToeplitzChain> chains;
};

struct OperatorExpression {
  std::size_t n = 1;
  std::vector<ChainSum> product;

  static OperatorExpression single(std::size_t n, ToeplitzChain c) { return {n, {ChainSum{{std::move(c)}}}}; }

  /// Expand the product of sums into one flat sum of chains.
  std::vector<ToeplitzChain> expanded() const {
    std::vector<ToeplitzChain> acc{ToeplitzChain{1.0, {}}};
    for (const auto& sum : product) {
      std::vector<ToeplitzChain> next;
      for (const auto& a : acc)
        for (const auto& b : sum.chains) {
          ToeplitzChain c{a.coeff * b.coeff, a.factors};
          c.factors.insert(c.factors.end(), b.factors.begin(), b.factors.end());
          next.push_back(std::move(c));
        }
      acc = std::move(next);
    }
    return acc;
  }

  /// Every factor has a single shift p - q and every chain's shifts add to 0.
  bool is_torus_diagonal() const {
    for (const auto& sum : product)
      for (const auto& chain : sum.chains) {
        Shift total(n, 0);
        for (const auto& f : chain.factors) {
          if (f.dimension() != n) return false;
          const auto sh = f.shifts();
          if (sh.size() > 1) return false;
          if (sh.empty()) continue;  // zero symbol
          for (std::size_t j = 0; j < n; ++j) total[j] += sh.front()[j];
        }
        if (std::any_of(total.begin(), total.end(), [](int v) { return v != 0; })) return false;
      }
    return true;
  }

  /// Only p = q = 0 terms: the eigenvalue then depends on |alpha| alone.
  bool is_radial() const {
    if (n == 1) return true;
    for (const auto& sum : product)
      for (const auto& chain : sum.chains)
        for (const auto& f : chain.factors)
          for (const auto& t : f.terms())
            if (!t.p.is_zero() || !t.q.is_zero()) return false;
    return true;
  }

  int max_shift() const {
    int m = 0;
    for (const auto& sum : product)
      for (const auto& chain : sum.chains)
        for (const auto& f : chain.factors) m = std::max(m, f.shift_range());
    return m;
  }

  int total_shift_range() const {
    int B = 0;
    for (const auto& sum : product) {
      int best = 0;
      for (const auto& chain : sum.chains) {
        int r = 0;
        for (const auto& f : chain.factors) r += f.shift_range();
        best = std::max(best, r);
      }
      B += best;
    }
    return B;
  }
};

/// Dense truncation of the expression: every expanded chain is a buffered
/// product, so the degree-<=D block is exact.
inline OperatorMatrix assemble(const FockContext& ctx, const OperatorExpression& expr, int D) {
  if (expr.n != ctx.n) throw std::invalid_argument("expression dimension differs from context");
  const auto chains = expr.expanded();
  OperatorMatrix out = toeplitz_matrix(ctx, RadialSymbol(ctx.n), D);
  int B = 0;
  for (const auto& chain : chains) {
    if (chain.factors.empty()) {
      out.entries += chain.coeff * ComplexMatrix::Identity(out.entries.rows(), out.entries.cols());
      continue;
    }
    std::vector<FactorSpec> specs;
    for (const auto& f : chain.factors) specs.push_back(toeplitz_factor(ctx, f));
    const OperatorMatrix P = buffered_product(ctx, specs, D);
    out.entries += chain.coeff * P.entries;
    B = std::max(B, P.shift_range);
    for (const auto& s : P.shifts)
      if (std::find(out.shifts.begin(), out.shifts.end(), s) == out.shifts.end()) out.shifts.push_back(s);
  }
  out.shift_range = B;
  out.hermitian = hermitian_defect(out.entries) <= kHermitianGate;
  out.provenance = {{"kind", "expression"}, {"chains", chains.size()}, {"D", D}, {"buffer", B},
                    {"gamma", ctx.gamma}, {"n", ctx.n}};
  return out;
}

namespace detail {

struct CompiledTerm {
  cplx coeff;
  std::vector<int> p, q;
  int pdeg, qdeg;
  double t;
  double gamma_scale;
};

struct CompiledFactor {
  std::vector<int> shift;
  std::vector<CompiledTerm> terms;
};

struct CompiledChain {
  cplx coeff;
  std::vector<CompiledFactor> factors;  // applied right to left
};

// Per-multi-index evaluator of a torus-diagonal expression.
class DiagonalEvaluator {
 public:
  DiagonalEvaluator(const OperatorExpression& expr, double gamma, int max_degree) : n_(expr.n), moments_(gamma) {
    for (const auto& sum : expr.product) {
      std::vector<CompiledChain> cs;
      for (const auto& chain : sum.chains) {
        CompiledChain cc{chain.coeff, {}};
        for (const auto& f : chain.factors) {
          CompiledFactor cf{std::vector<int>(n_, 0), {}};
          for (const auto& t : f.terms()) {
            CompiledTerm ct{t.coeff,
                            {t.p.entries().begin(), t.p.entries().end()},
                            {t.q.entries().begin(), t.q.entries().end()},
                            t.p.degree(),
                            t.q.degree(),
                            t.exponent,
                            std::pow(gamma, -0.5 * (t.p.degree() + t.q.degree()))};
            for (std::size_t j = 0; j < n_; ++j) cf.shift[j] = ct.p[j] - ct.q[j];
            moments_.reserve(t.exponent, max_degree + expr.total_shift_range() + static_cast<int>(n_) + 1);
            cf.terms.push_back(std::move(ct));
          }
          cc.factors.push_back(std::move(cf));
        }
        cs.push_back(std::move(cc));
      }
      sums_.push_back(std::move(cs));
    }
    state_.resize(n_);
  }

  cplx operator()(const std::vector<int>& alpha) {
    cplx total = 1.0;
    for (const auto& sum : sums_) {
      cplx s{};
      for (const auto& chain : sum) s += chain.coeff * chain_value(chain, alpha);
      total *= s;
      if (total == cplx{}) break;
    }
    return total;
  }

 private:
  cplx chain_value(const CompiledChain& chain, const std::vector<int>& alpha) {
    state_ = alpha;
    cplx value = 1.0;
    for (auto f = chain.factors.rbegin(); f != chain.factors.rend(); ++f) {
      cplx amp{};
      int deg = 0;
      for (int v : state_) deg += v;
      for (const auto& t : f->terms) {
        // a = state + p must dominate q
        bool ok = true;
        double ladder = 1.0;
        for (std::size_t j = 0; j < n_ && ok; ++j) {
          const int a = state_[j] + t.p[j];
          const int b = a - t.q[j];
          if (b < 0) ok = false;
          for (int i = 1; i <= t.p[j]; ++i) ladder *= state_[j] + i;
          for (int i = 1; i <= t.q[j]; ++i) ladder *= b + i;
        }
        if (!ok) continue;
        amp += t.coeff * (moments_(t.t, deg + t.pdeg + static_cast<int>(n_) - 1) * t.gamma_scale * std::sqrt(ladder));
      }
      if (amp == cplx{}) return 0.0;
      value *= amp;
      for (std::size_t j = 0; j < n_; ++j) state_[j] += f->shift[j];
    }
    return value;
  }

  std::size_t n_;
  MomentCache moments_;
  std::vector<std::vector<CompiledChain>> sums_;
  std::vector<int> state_;
};

}  // namespace detail

struct DiagonalSpectrum {
  SNumberSequence s_numbers;  // |lambda|
  SNumberSequence positive;   // lambda > 0
  SNumberSequence negative;   // -lambda for lambda < 0
  int K_degree = 0;
  bool radial = false;
  double max_imag_ratio = 0.0;  // max |Im lambda| / max |lambda|
};

/// Exact eigenvalues for all alpha with |alpha| <= K_degree. Ranks above the
/// largest |lambda| at degree K_degree are marked exact (eigenvalues here
/// decay in the degree).
inline DiagonalSpectrum diagonal_spectrum(const OperatorExpression& expr, double gamma, int K_degree) {
  if (!expr.is_torus_diagonal()) throw std::invalid_argument("operator configuration is not torus-diagonal");
  if (K_degree < 0) throw std::invalid_argument("K_degree must be >= 0");
  detail::DiagonalEvaluator eval(expr, gamma, K_degree);
  using Run = SNumberSequence::Run;
  std::vector<Run> absr, posr, negr;
  double tail_max = 0.0, max_abs = 0.0, max_imag = 0.0;
  auto record = [&](cplx lam, std::uint64_t mult, int degree) {
    const double a = std::abs(lam);
    max_abs = std::max(max_abs, a);
    max_imag = std::max(max_imag, std::fabs(lam.imag()));
    if (degree == K_degree) tail_max = std::max(tail_max, a);
    absr.push_back({a, mult});
    if (lam.real() > 0) posr.push_back({lam.real(), mult});
    else if (lam.real() < 0) negr.push_back({-lam.real(), mult});
  };
  const bool radial = expr.is_radial();
  if (radial) {
    std::vector<int> alpha(expr.n, 0);
    for (int k = 0; k <= K_degree; ++k) {
      alpha[0] = k;
      record(eval(alpha), degree_multiplicity(expr.n, static_cast<std::uint64_t>(k)), k);
    }
  } else {
    for (int k = 0; k <= K_degree; ++k)
      for (const auto& a : multi_indices_of_degree(expr.n, k))
        record(eval(std::vector<int>(a.entries().begin(), a.entries().end())), 1, k);
  }
  DiagonalSpectrum out{SNumberSequence(std::move(absr), SpectrumProvenance::exact_diagonal, K_degree),
                       SNumberSequence(std::move(posr), SpectrumProvenance::exact_diagonal, K_degree),
                       SNumberSequence(std::move(negr), SpectrumProvenance::exact_diagonal, K_degree),
                       K_degree, radial, max_abs > 0 ? max_imag / max_abs : 0.0};
  for (SNumberSequence* s : {&out.s_numbers, &out.positive, &out.negative}) {
    std::uint64_t count = 0;
    for (const auto& r : s->runs()) {
      if (!(r.value > tail_max)) break;
      count += r.multiplicity;
    }
    s->set_exact_ranks(count);
  }
  return out;
}

/// Per-multi-index eigenvalue of a torus-diagonal expression (for checks).
inline cplx diagonal_eigenvalue(const OperatorExpression& expr, double gamma, const MultiIndex& alpha) {
  if (!expr.is_torus_diagonal()) throw std::invalid_argument("operator configuration is not torus-diagonal");
  detail::DiagonalEvaluator eval(expr, gamma, alpha.degree());
  return eval(std::vector<int>(alpha.entries().begin(), alpha.entries().end()));
}

// Convenience builders for the standard configurations.

/// H_f^* H_g = T_{conj(f) g} - T_{conj f} T_g
inline ChainSum hankel_sum(const RadialSymbol& f, const RadialSymbol& g) {
  const RadialSymbol fb = f.conj();
  return ChainSum{{ToeplitzChain{1.0, {fb * g}}, ToeplitzChain{-1.0, {fb, g}}}};
}

/// [T_f, T_g]
inline ChainSum commutator_sum(const RadialSymbol& f, const RadialSymbol& g) {
  return ChainSum{{ToeplitzChain{1.0, {f, g}}, ToeplitzChain{-1.0, {g, f}}}};
}

inline ChainSum toeplitz_sum(const RadialSymbol& f) { return ChainSum{{ToeplitzChain{1.0, {f}}}}; }

}  // namespace fock
