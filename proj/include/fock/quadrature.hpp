#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace fock::quad {

struct Result {
  long double value = 0;
  long double error = 0;
  int intervals = 0;
};

namespace detail {

// Kronrod nodes on [0,1] half (symmetric), with the embedded Gauss weights.
inline constexpr std::array<long double, 8> kNodes = {
    0.991455371120812639206854697526329L, 0.949107912342758524526189684047851L,
    0.864864423359769072789712788640926L, 0.741531185599394439863864773280788L,
    0.586087235467691130294144845693013L, 0.405845151377397166906606412076961L,
    0.207784955007898467600689403773245L, 0.000000000000000000000000000000000L};
inline constexpr std::array<long double, 8> kKronrod = {
    0.022935322010529224963732008058970L, 0.063092092629978553290700663189204L,
    0.104790010322250183839876322541518L, 0.140653259715525918745189590510238L,
    0.169004726639267902826583426598550L, 0.190350578064785409913256402421014L,
    0.204432940075298892414161999234649L, 0.209482141084727828012999174891714L};
inline constexpr std::array<long double, 4> kGauss = {
    0.129484966168869693270611432679082L, 0.279705391489276667901467771423780L,
    0.381830050505118944950369775488975L, 0.417959183673469387755102040816327L};

struct Segment {
  long double a, b, value, error;
  friend bool operator<(const Segment& x, const Segment& y) { return x.error < y.error; }
};

template <class F>
Segment gk15(F& f, long double a, long double b) {
  const long double c = (a + b) / 2, h = (b - a) / 2;
  const long double fc = f(c);
  long double k = fc * kKronrod[7];
  long double g = fc * kGauss[3];
  for (int i = 0; i < 7; ++i) {
    const long double x = h * kNodes[static_cast<std::size_t>(i)];
    const long double s = f(c - x) + f(c + x);
    k += kKronrod[static_cast<std::size_t>(i)] * s;
    if (i % 2 == 1) g += kGauss[static_cast<std::size_t>(i / 2)] * s;
  }
  return {a, b, k * h, std::fabs((k - g) * h)};
}

}  // namespace detail

/// Integrate f over [a, b] until the summed error estimate is below
/// max(abs_tol, rel_tol * |value|). `breaks` are interior points where the
/// interval is pre-split.
template <class F>
Result integrate(F&& f, long double a, long double b, double rel_tol, double abs_tol = 0.0,
                 const std::vector<long double>& breaks = {}, int max_intervals = 4000) {
  if (!(b > a)) return {};
  std::priority_queue<detail::Segment> heap;
  std::vector<long double> pts{a};
  for (auto x : breaks)
    if (x > a && x < b) pts.push_back(x);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  pts.push_back(b);
  long double total = 0, err = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    auto s = detail::gk15(f, pts[i], pts[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
  }
  int count = static_cast<int>(heap.size());
  while (err > std::max<long double>(abs_tol, rel_tol * std::fabs(total)) && count < max_intervals) {
    auto worst = heap.top();
    heap.pop();
    const long double mid = (worst.a + worst.b) / 2;
    auto left = detail::gk15(f, worst.a, mid);
    auto right = detail::gk15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
    // Once the estimate is at rounding level there is nothing left to refine.
    if (worst.b - worst.a < 64 * std::numeric_limits<long double>::epsilon() * std::fabs(worst.a)) break;
  }
  // Recompute sums from the final partition to shed accumulated drift.
  total = 0;
  err = 0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  return {total, err, count};
}

}  // namespace fock::quad
