#include <gtest/gtest.h>

#include <random>

#include "fock/weyl_calculus.hpp"

using namespace fock;

namespace {

PolySymbol mono(cplx c, std::vector<int> p, std::vector<int> q, double t = 0.0) {
  return RadialSymbol::monomial(c, MultiIndex(std::move(p)), MultiIndex(std::move(q)), t);
}

PolySymbol random_poly(std::mt19937_64& rng, std::size_t n, int deg, int terms) {
  std::uniform_int_distribution<int> d(0, deg);
  std::normal_distribution<double> g;
  PolySymbol a(n);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> p(n, 0), q(n, 0);
    int total = d(rng);
    std::uniform_int_distribution<std::size_t> c(0, 2 * n - 1);
    for (int i = 0; i < total; ++i) {
      const auto k = c(rng);
      if (k < n) ++p[k];
      else ++q[k - n];
    }
    a.add_term({g(rng), g(rng)}, MultiIndex(p), MultiIndex(q), 0.0);
  }
  return a;
}

double coeff_distance(const RadialSymbol& a, const RadialSymbol& b) {
  double scale = 0, diff = 0;
  for (const auto& t : a.terms()) scale = std::max(scale, std::abs(t.coeff));
  for (const auto& t : (a - b).terms()) diff = std::max(diff, std::abs(t.coeff));
  return diff / std::max(scale, 1e-300);
}

}  // namespace

TEST(WeylCalculus, StarUnitAndGenerators) {
  std::mt19937_64 rng(1);
  const auto a = random_poly(rng, 2, 3, 4);
  EXPECT_LT(coeff_distance(star(a, RadialSymbol::constant(2, 1.0), 1.3), a), 1e-15);
  EXPECT_LT(coeff_distance(star(RadialSymbol::constant(2, 1.0), a, 1.3), a), 1e-15);
  for (double gamma : {1.0, 2.0}) {
    const auto z = RadialSymbol::z(1, 0), zb = RadialSymbol::zbar(1, 0);
    const auto expect = mono(1.0, {1}, {1}) - RadialSymbol::constant(1, 1.0 / (2 * gamma));
    EXPECT_LT(coeff_distance(star(z, zb, gamma), expect), 1e-15);
    // zbar # z - z # zbar = 1/gamma
    const auto comm = star(zb, z, gamma) - star(z, zb, gamma);
    EXPECT_LT(coeff_distance(comm, RadialSymbol::constant(1, 1.0 / gamma)), 1e-15);
  }
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k) {
      const auto zj = RadialSymbol::z(3, j), zk = RadialSymbol::zbar(3, k);
      const auto c = star(zj, zk, 2.0) - star(zk, zj, 2.0);
      if (j == k) EXPECT_LT(coeff_distance(c, RadialSymbol::constant(3, -0.5)), 1e-15);
      else EXPECT_TRUE(c.is_zero());
    }
}

TEST(WeylCalculus, StarSixteenTermOracle) {
  // a = b = z1 zbar1 in n = 2: every d^alpha dbar^beta with alpha, beta in
  // {0,1}^2 written out by hand
  const double gamma = 1.0;
  const std::vector<cplx> z{cplx(0.4, -1.1), cplx(0.9, 0.3)};
  auto deriv = [&](int a1, int a2, int b1, int b2) -> cplx {
    if (a2 || b2) return 0.0;
    return std::pow(z[0], 1 - a1) * std::pow(std::conj(z[0]), 1 - b1);
  };
  cplx oracle{};
  int terms = 0;
  for (int a1 = 0; a1 <= 1; ++a1)
    for (int a2 = 0; a2 <= 1; ++a2)
      for (int b1 = 0; b1 <= 1; ++b1)
        for (int b2 = 0; b2 <= 1; ++b2) {
          const int na = a1 + a2, nb = b1 + b2;
          const double c = (nb % 2 ? -1.0 : 1.0) / std::pow(-2 * gamma, na + nb);
          oracle += c * deriv(a1, a2, b1, b2) * deriv(b1, b2, a1, a2);
          ++terms;
        }
  EXPECT_EQ(terms, 16);
  const auto a = mono(1.0, {1, 0}, {1, 0});
  EXPECT_LT(std::abs(star(a, a, gamma).evaluate(z) - oracle), 1e-14);
}

TEST(WeylCalculus, Associativity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial % 2 + 1;
    const auto a = random_poly(rng, n, 3, 4), b = random_poly(rng, n, 3, 4), c = random_poly(rng, n, 3, 4);
    EXPECT_LT(coeff_distance(star(star(a, b, 1.5), c, 1.5), star(a, star(b, c, 1.5), 1.5)), 1e-12);
  }
}

TEST(WeylCalculus, ConjugationAntihomomorphism) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_poly(rng, 2, 3, 4), b = random_poly(rng, 2, 3, 4);
    EXPECT_LT(coeff_distance(star(a, b, 0.7).conj(), star(b.conj(), a.conj(), 0.7)), 1e-12);
  }
}

TEST(WeylCalculus, DegreeFiltration) {
  // a # b - ab has order <= deg a + deg b - 2
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_poly(rng, 2, 3, 3), b = random_poly(rng, 2, 3, 3);
    const auto rest = star(a, b, 1.0) - a * b;
    if (!rest.is_zero()) EXPECT_LE(rest.order(), a.order() + b.order() - 2);
  }
}

TEST(WeylCalculus, HeatExamples) {
  const auto z2 = mono(1.0, {2}, {0});
  EXPECT_LT(coeff_distance(heat(z2, 1.0), z2), 1e-15);
  for (double gamma : {1.0, 3.0}) {
    const auto zz = mono(1.0, {1}, {1});
    EXPECT_LT(coeff_distance(heat(zz, gamma), zz + RadialSymbol::constant(1, 1 / (2 * gamma))), 1e-15);
    EXPECT_LT(coeff_distance(heat_inverse(zz, gamma), zz - RadialSymbol::constant(1, 1 / (2 * gamma))), 1e-15);
  }
}

TEST(WeylCalculus, HeatRoundTrip) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_poly(rng, trial % 2 + 1, 8, 6);
    EXPECT_LT(coeff_distance(heat_inverse(heat(a, 2.0), 2.0), a), 1e-12);
    EXPECT_LT(coeff_distance(heat(heat_inverse(a, 2.0), 2.0), a), 1e-12);
  }
}

TEST(WeylCalculus, HeatQuadratureMatchesSeries) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 4; ++trial) {
    const auto a = random_poly(rng, 1, 4, 4);
    const cplx z(0.3, -0.6);
    const cplx num = heat_transform_numeric(a, z, 1.5);
    const cplx ex = heat(a, 1.5).evaluate(std::vector<cplx>{z});
    EXPECT_LT(std::abs(num - ex), 1e-10 * std::max(1.0, std::abs(ex)));
  }
}

TEST(WeylCalculus, HeatAsymptoticLayers) {
  const double gamma = 1.0;
  const auto S = RadialSymbol::weight(1, -2.0);
  const auto L = heat_asymptotic(S, 3, gamma);
  ASSERT_EQ(L.size(), 3u);
  const std::vector<cplx> z{cplx(3.0, 4.0)};
  const double r2 = 25.0;
  EXPECT_NEAR(std::abs(L[0].evaluate(z) - 1 / r2), 0.0, 1e-16);
  EXPECT_TRUE(L[1].is_zero());
  // -|z|^-4 + Delta(|z|^-2)/8 with Delta |z|^-2 = 4 |z|^-4 in the plane
  EXPECT_NEAR(std::abs(L[2].evaluate(z) - (-1.0 + 4.0 / (8 * gamma)) / (r2 * r2)), 0.0, 1e-16);
  EXPECT_THROW(heat_asymptotic(mono(1.0, {1}, {0}), 2, 1.0), std::invalid_argument);
}

TEST(WeylCalculus, HeatAsymptoticAgainstQuadrature) {
  // at |z| = 30 the N = 3 partial sum gains about |z|^-2 over N = 1
  const auto S = RadialSymbol::weight(1, -2.0);
  const cplx z(30.0, 0.0);
  const cplx exact = heat_transform_numeric(S, z, 1.0);
  auto partial = [&](int N) {
    cplx s{};
    for (const auto& h : heat_asymptotic(S, N, 1.0)) s += h.evaluate(std::vector<cplx>{z});
    return s;
  };
  EXPECT_LT(std::abs(exact - partial(3)), 3e-3 * std::abs(exact - partial(1)));
}

TEST(WeylCalculus, SemiCommutatorLeading) {
  const auto z = mono(1.0, {1}, {0});
  EXPECT_TRUE(prop8_leading(z, mono(1.0, {0}, {1}, -2.0), 1.0).is_zero());
  EXPECT_TRUE(prop8_leading(mono(1.0, {0}, {1}, -2.0), mono(1.0, {2}, {0}), 1.0).is_zero());
  const auto f = mono(1.0, {1}, {0}, -1.0);
  const auto h = prop8_leading(f, f, 1.0);
  // conj(f) = zbar w^-1: d conj(f) = -zbar^2 w^-3 / 2, dbar g = -z^2 w^-3 / 2
  const auto expect = mono(0.25, {2}, {2}, -6.0);
  const std::vector<cplx> pt{cplx(0.8, 1.7)};
  EXPECT_LT(std::abs(h.evaluate(pt) - expect.evaluate(pt)), 1e-15);
  const auto lead = leading_sphere_part(h);
  EXPECT_DOUBLE_EQ(lead.order, -2.0);
  EXPECT_TRUE(sphere_equal(lead.f0, SpherePolynomial::constant(1, 0.25)));
}

TEST(WeylCalculus, RejectsNonPolynomial) {
  EXPECT_THROW(star(RadialSymbol::weight(1, -2.0), RadialSymbol::z(1, 0), 1.0), std::invalid_argument);
  EXPECT_THROW(heat(RadialSymbol::weight(1, -2.0), 1.0), std::invalid_argument);
}
