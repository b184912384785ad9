#include <gtest/gtest.h>

#include <random>

#include "fock/symbols.hpp"

using namespace fock;

namespace {

RadialSymbol mono(cplx c, std::vector<int> p, std::vector<int> q, double t) {
  return RadialSymbol::monomial(c, MultiIndex(std::move(p)), MultiIndex(std::move(q)), t);
}

// central differences of direct evaluation: d/dz = (d/dx - i d/dy)/2, d/dzbar = (d/dx + i d/dy)/2
template <class S>
cplx fd_wirtinger(const S& f, std::vector<cplx> z, std::size_t j, Wirtinger kind, double h = 1e-5) {
  auto at = [&](cplx dz) {
    auto w = z;
    w[j] += dz;
    return f.evaluate(w);
  };
  const cplx dx = (at(h) - at(-h)) / (2 * h);
  const cplx dy = (at(cplx(0, h)) - at(cplx(0, -h))) / (2 * h);
  const cplx i(0, 1);
  return kind == Wirtinger::holo ? (dx - i * dy) / 2.0 : (dx + i * dy) / 2.0;
}

RadialSymbol random_symbol(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> e(0, 2);
  std::uniform_int_distribution<int> tt(-6, 2);
  std::normal_distribution<double> g;
  RadialSymbol S(n);
  for (int k = 0; k < 3; ++k) {
    std::vector<int> p(n), q(n);
    for (auto& v : p) v = e(rng);
    for (auto& v : q) v = e(rng);
    S.add_term({g(rng), g(rng)}, MultiIndex(p), MultiIndex(q), double(tt(rng)));
  }
  return S;
}

}  // namespace

TEST(Symbols, WirtingerExamples) {
  const auto w = RadialSymbol::weight(2, -3.0);
  const auto d = w.wirtinger(0, Wirtinger::anti);
  const auto expect = mono(-1.5, {1, 0}, {0, 0}, -5.0);
  EXPECT_TRUE((d - expect).is_zero());
  EXPECT_TRUE(RadialSymbol::zbar(1, 0).wirtinger(0, Wirtinger::holo).is_zero());
  const auto zz = mono(1.0, {1}, {1}, 0.0);
  const auto lap = zz.laplacian();
  const std::vector<cplx> pt{cplx(0.3, -0.2)};
  EXPECT_NEAR(std::abs(lap.evaluate(pt) - 4.0), 0.0, 1e-14);
}

TEST(Symbols, WirtingerAgainstFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = trial % 2 + 1;
    const auto S = random_symbol(rng, n);
    std::vector<cplx> z(n);
    for (auto& v : z) v = {u(rng), u(rng)};
    const double r = 1 + 9 * std::abs(u(rng));
    const double nz = std::sqrt(norm_sq(z));
    for (auto& v : z) v *= r / nz;
    for (std::size_t j = 0; j < n; ++j)
      for (auto kind : {Wirtinger::holo, Wirtinger::anti}) {
        const cplx exact = S.wirtinger(j, kind).evaluate(z);
        const cplx fd = fd_wirtinger(S, z, j, kind);
        EXPECT_LT(std::abs(exact - fd), 1e-6 * std::max(1.0, std::abs(exact)));
      }
  }
}

TEST(Symbols, LaplacianSecondDifferences) {
  const auto S = mono(1.0, {1}, {1}, 0.0) * RadialSymbol::weight(1, -1.0) + mono(cplx(0, 2), {2}, {0}, -3.0);
  const std::vector<cplx> z{cplx(1.3, 0.4)};
  const double h = 1e-3;
  auto at = [&](cplx dz) { return S.evaluate(std::vector<cplx>{z[0] + dz}); };
  const cplx fd = (at(h) + at(-h) + at(cplx(0, h)) + at(cplx(0, -h)) - 4.0 * at(0)) / (h * h);
  EXPECT_LT(std::abs(S.laplacian().evaluate(z) - fd), 1e-5);
}

TEST(Symbols, HomogeneousDerivativeLowersDegree) {
  HomogeneousSymbol H(2);
  H.add_term(1.0, MultiIndex({1, 0}), MultiIndex({0, 1}), -4.0);
  const auto d = H.wirtinger(1, Wirtinger::holo);
  ASSERT_TRUE(d.degree().has_value());
  EXPECT_DOUBLE_EQ(*d.degree(), *H.degree() - 1);
  // d/dz2 |z|^s = (s/2) zbar_2 |z|^{s-2}
  const std::vector<cplx> z{cplx(0.7, 0.2), cplx(-1.1, 0.5)};
  EXPECT_LT(std::abs(d.evaluate(z) - fd_wirtinger(H, z, 1, Wirtinger::holo)), 1e-7);
}

TEST(Symbols, Orders) {
  EXPECT_DOUBLE_EQ(mono(1.0, {1}, {1}, -2.0).order(), 0.0);
  for (std::size_t n = 1; n <= 3; ++n) EXPECT_DOUBLE_EQ(RadialSymbol::weight(n, -2.0 * n).order(), -2.0 * n);
  EXPECT_DOUBLE_EQ(mono(1.0, {1, 0}, {0, 0}, -1.0).order(), 0.0);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto S = random_symbol(rng, 2), T = random_symbol(rng, 2);
    const auto ST = S * T;
    if (!ST.is_zero()) EXPECT_LE(ST.order(), S.order() + T.order() + 1e-12);
    for (std::size_t j = 0; j < 2; ++j) {
      const auto d = S.wirtinger(j, Wirtinger::holo);
      if (!d.is_zero()) EXPECT_LE(d.order(), S.order() - 1 + 1e-12);
    }
  }
}

TEST(Symbols, HomogeneousExpansionExamples) {
  const auto e = homogeneous_expansion(RadialSymbol::weight(1, -2.0), 3);
  ASSERT_EQ(e.layers.size(), 3u);
  const std::vector<cplx> z{cplx(2.0, 1.0)};
  const double r2 = norm(z[0]);
  EXPECT_NEAR(std::abs(e.layers[0].evaluate(z) - 1.0 / r2), 0.0, 1e-15);
  EXPECT_TRUE(e.layers[1].is_zero());
  EXPECT_NEAR(std::abs(e.layers[2].evaluate(z) + 1.0 / (r2 * r2)), 0.0, 1e-15);

  const auto lead = leading_sphere_part(mono(1.0, {1, 0}, {0, 0}, -1.0));
  EXPECT_DOUBLE_EQ(lead.order, 0.0);
  EXPECT_TRUE(sphere_equal(lead.f0, SpherePolynomial::zeta(2, 0)));

  const auto poly = homogeneous_expansion(mono(2.0, {2}, {1}, 0.0), 4);
  EXPECT_FALSE(poly.layers[0].is_zero());
  for (int j = 1; j < 4; ++j) EXPECT_TRUE(poly.layers[j].is_zero());
}

TEST(Symbols, LeadingPartOfTestSymbols) {
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto l = leading_sphere_part(RadialSymbol::weight(n, -2.0 * n));
    EXPECT_DOUBLE_EQ(l.order, -2.0 * n);
    EXPECT_NEAR(sphere_integral(l.f0).real(), 1.0, 1e-15);
    std::vector<int> e1(n, 0);
    e1[0] = 1;
    const auto l2 = leading_sphere_part(mono(1.0, e1, e1, -2.0 * n - 2));
    EXPECT_DOUBLE_EQ(l2.order, -2.0 * n);
    EXPECT_TRUE(sphere_equal(l2.f0, SpherePolynomial::zeta(n, 0) * SpherePolynomial::zeta_bar(n, 0)));
  }
}

TEST(Symbols, ExpansionRemainderBound) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto S = random_symbol(rng, 2);
    for (int N : {1, 2, 4}) {
      const auto e = homogeneous_expansion(S, N);
      std::vector<double> scaled;
      for (double r : {10.0, 100.0, 1000.0}) {
        const std::vector<cplx> z{r * cplx(0.6, 0.0), r * cplx(0.0, 0.8)};
        cplx partial{};
        for (const auto& L : e.layers) partial += L.evaluate(z);
        scaled.push_back(std::abs(S.evaluate(z) - partial) * std::pow(r, N - e.order));
      }
      // bounded: no growth across decades beyond rounding
      const double base = std::max(scaled[0], 1e-300);
      EXPECT_LT(scaled[1], 10 * base + 1e-6);
      EXPECT_LT(scaled[2], 10 * base + 1e-3);
    }
  }
}

TEST(Symbols, LeadingPartCommutesWithConjugation) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const auto S = random_symbol(rng, 2);
    const auto a = leading_sphere_part(S.conj()), b = leading_sphere_part(S);
    EXPECT_DOUBLE_EQ(a.order, b.order);
    EXPECT_TRUE(sphere_equal(a.f0, b.f0.conj()));
  }
}

TEST(Symbols, JsonRoundTripAndErrors) {
  const auto S = mono(cplx(1, -2), {1, 0}, {0, 2}, -3.0) + RadialSymbol::weight(2, -4.0);
  const auto T = symbol_from_json(symbol_to_json(S));
  EXPECT_TRUE((S - T).is_zero());
  const auto d = symbol_from_json(nlohmann::json::parse(R"({"n": 1, "terms": [{"c": 2}]})"));
  EXPECT_TRUE((d - RadialSymbol::constant(1, 2.0)).is_zero());
  EXPECT_THROW(symbol_from_json(nlohmann::json::parse(R"({"terms": []})")), std::invalid_argument);
  EXPECT_THROW(symbol_from_json(nlohmann::json::parse(R"({"n": 2, "terms": [{"c": [1, 0], "p": [1]}]})")),
               std::invalid_argument);
}
