#pragma once

// Dixmier-trace estimators for measurable operators: the log-Cesaro mean
// (1/log(K+2)) sum_{j<=K} s_j, the pointwise law (j+1) s_j, and a least
// squares fit c + b/log(K+2) across a rank grid to remove the 1/log K bias.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "spectral.hpp"

namespace fock {

inline double log_mean(const SNumberSequence& s, std::uint64_t K) {
  if (K < 2) throw std::out_of_range("log_mean needs K >= 2");
  if (K >= s.exact_ranks()) throw std::out_of_range("log_mean rank beyond the exactly known s-numbers");
  return s.partial_sum(K) / std::log(static_cast<double>(K) + 2.0);
}

struct PointwiseStats {
  double median = 0.0;
  double spread = 0.0;  // (max - min) / median over the window
  std::uint64_t lo = 0, hi = 0;
};

/// Median and relative spread of (j+1) s_j for lo <= j <= hi. Long windows are
/// sampled at a fixed stride for the median; max/min are exact.
inline PointwiseStats pointwise(const SNumberSequence& s, std::uint64_t lo, std::uint64_t hi) {
  if (lo > hi || hi >= s.exact_ranks()) throw std::out_of_range("pointwise window outside the known s-numbers");
  constexpr std::uint64_t kMaxSamples = 2'000'000;
  const std::uint64_t stride = std::max<std::uint64_t>(1, (hi - lo + 1) / kMaxSamples);
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>((hi - lo) / stride + 1));
  double mx = -INFINITY, mn = INFINITY;
  std::uint64_t rank = 0;
  for (const auto& r : s.runs()) {
    const std::uint64_t first = rank, last = rank + r.multiplicity - 1;
    rank += r.multiplicity;
    if (last < lo) continue;
    if (first > hi) break;
    const std::uint64_t a = std::max(first, lo), b = std::min(last, hi);
    // (j+1) v is increasing in j within a run
    mn = std::min(mn, (a + 1) * r.value);
    mx = std::max(mx, (b + 1) * r.value);
    std::uint64_t j = a;
    if ((j - lo) % stride) j += stride - (j - lo) % stride;
    for (; j <= b; j += stride) vals.push_back(static_cast<double>(j + 1) * r.value);
  }
  PointwiseStats out{0, 0, lo, hi};
  if (vals.empty()) return out;
  auto mid = vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2);
  std::nth_element(vals.begin(), mid, vals.end());
  out.median = *mid;
  if (vals.size() % 2 == 0) out.median = (out.median + *std::max_element(vals.begin(), mid)) / 2;
  out.spread = out.median != 0.0 ? (mx - mn) / std::fabs(out.median) : INFINITY;
  return out;
}

enum class EstimateMethod { log_mean, pointwise_tail, extrapolated };

inline std::string to_string(EstimateMethod m) {
  switch (m) {
    case EstimateMethod::log_mean: return "log-mean";
    case EstimateMethod::pointwise_tail: return "pointwise-tail";
    case EstimateMethod::extrapolated: return "extrapolated";
  }
  return "?";
}

struct DixmierEstimate {
  double value = 0.0;
  EstimateMethod method = EstimateMethod::extrapolated;
  std::uint64_t K_used = 0;
  // diagnostics
  std::vector<std::uint64_t> grid;
  std::vector<double> log_means;
  double slope = 0.0;           // b in c + b/log(K+2)
  double residual = 0.0;        // rms misfit of the linear model
  double stability = 0.0;       // max relative change of c over leave-one-out fits
  bool ill_conditioned = false;
  PointwiseStats tail;          // over the upper half of the last grid interval
  bool measurable_consistent = false;
};

/// Threshold on the leave-one-out stability for "measurable-consistent".
inline constexpr double kMeasurableSpread = 0.02;

namespace detail {

struct LineFit {
  double c, b, residual, cond;
};

inline LineFit fit_inverse_log(const std::vector<std::uint64_t>& grid, const std::vector<double>& y) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd A(m, 2);
  Eigen::VectorXd rhs(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = 1.0 / std::log(static_cast<double>(grid[static_cast<std::size_t>(i)]) + 2.0);
    rhs(i) = y[static_cast<std::size_t>(i)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd x = svd.solve(rhs);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  return {x(0), x(1), std::sqrt((A * x - rhs).squaredNorm() / static_cast<double>(m)), cond};
}

}  // namespace detail

/// Fit log_mean(K) = c + b/log(K+2) over the grid and report c.
inline DixmierEstimate extrapolate(const SNumberSequence& s, std::vector<std::uint64_t> grid) {
  if (grid.size() < 3) throw std::invalid_argument("extrapolate needs at least 3 grid points");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.size() < 3) throw std::invalid_argument("extrapolate needs at least 3 distinct grid points");
  DixmierEstimate est;
  est.method = EstimateMethod::extrapolated;
  est.grid = grid;
  for (auto K : grid) est.log_means.push_back(log_mean(s, K));
  const auto fit = detail::fit_inverse_log(grid, est.log_means);
  est.value = fit.c;
  est.slope = fit.b;
  est.residual = fit.residual;
  // The two regressors 1 and 1/log K are nearly collinear on a short grid.
  est.ill_conditioned = !(fit.cond < 1e6) || !std::isfinite(fit.c);
  est.K_used = grid.back();
  if (grid.size() >= 4) {
    for (std::size_t drop = 0; drop < grid.size(); ++drop) {
      std::vector<std::uint64_t> g;
      std::vector<double> y;
      for (std::size_t i = 0; i < grid.size(); ++i)
        if (i != drop) {
          g.push_back(grid[i]);
          y.push_back(est.log_means[i]);
        }
      const auto sub = detail::fit_inverse_log(g, y);
      est.stability = std::max(est.stability, std::fabs(sub.c - fit.c) / std::max(std::fabs(fit.c), 1e-300));
    }
  } else {
    est.stability = INFINITY;
  }
  const std::uint64_t hi = grid.back(), lo = std::max(grid[grid.size() - 2], hi / 2);
  est.tail = pointwise(s, lo, hi);
  est.measurable_consistent = !est.ill_conditioned && est.stability < kMeasurableSpread;
  return est;
}

/// Plain log-mean at the largest grid rank, for truncated spectra.
inline DixmierEstimate log_mean_estimate(const SNumberSequence& s, std::uint64_t K) {
  DixmierEstimate est;
  est.method = EstimateMethod::log_mean;
  est.value = log_mean(s, K);
  est.K_used = K;
  est.grid = {K};
  est.log_means = {est.value};
  est.tail = pointwise(s, K / 2, K);
  est.stability = INFINITY;
  return est;
}

/// 2^lo, 2^{lo+step}, ..., 2^hi.
inline std::vector<std::uint64_t> dyadic_grid(int lo, int hi, int step = 2) {
  std::vector<std::uint64_t> g;
  for (int e = lo; e <= hi; e += step) g.push_back(std::uint64_t{1} << e);
  return g;
}

/// Last rank of the complete degrees: binomial(K+n, n) - 1 for each K.
inline std::vector<std::uint64_t> degree_grid(std::size_t n, const std::vector<int>& degrees) {
  std::vector<std::uint64_t> g;
  for (int K : degrees) {
    std::uint64_t count = 0;
    for (int k = 0; k <= K; ++k) count += degree_multiplicity(n, static_cast<std::uint64_t>(k));
    g.push_back(count - 1);
  }
  return g;
}

/// Default grid for an exact-diagonal sequence: dyadic ranks 2^10..2^20 for
/// n = 1; for n >= 2 complete degrees K/32, ..., K/2, K with K the largest
/// fully exact degree, falling back to halvings of the exact rank count.
inline std::vector<std::uint64_t> default_grid(const SNumberSequence& s, std::size_t n, int K_degree) {
  const std::uint64_t limit = s.exact_ranks();
  std::vector<std::uint64_t> g;
  if (n == 1) {
    for (auto K : dyadic_grid(10, 20))
      if (K < limit) g.push_back(K);
    if (g.size() >= 3) return g;
    g.clear();
  } else {
    std::vector<int> degrees;
    for (int d = K_degree - 1; d >= 8 && degrees.size() < 6; d /= 2) degrees.push_back(d);
    std::reverse(degrees.begin(), degrees.end());
    for (auto K : degree_grid(n, degrees))
      if (K < limit) g.push_back(K);
    if (g.size() >= 4) return g;
    g.clear();
  }
  for (std::uint64_t K = limit > 0 ? limit - 1 : 0; K >= 64 && g.size() < 6; K /= 2) g.push_back(K);
  std::reverse(g.begin(), g.end());
  return g;
}

}  // namespace fock
