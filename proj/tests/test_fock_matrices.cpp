#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>

#include "fock/fock_matrices.hpp"

using namespace fock;

namespace {

RadialSymbol mono(cplx c, std::vector<int> p, std::vector<int> q, double t = 0.0) {
  return RadialSymbol::monomial(c, MultiIndex(std::move(p)), MultiIndex(std::move(q)), t);
}

// 2 pi int_0^R r^{2k+1} (1+r^2)^{t/2} e^{-gamma r^2} dr on a fixed partition
double radial_integral(int k, double t, double gamma) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  auto f = [&](double r) { return 2 * std::numbers::pi * std::pow(r, 2 * k + 1) * std::pow(1 + r * r, t / 2) * std::exp(-gamma * r * r); };
  const double hi = std::sqrt((k + 1.0) / gamma) + 14 / std::sqrt(gamma);
  double s = 0;
  for (int i = 0; i < 60; ++i) s += GK::integrate(f, hi * i / 60, hi * (i + 1) / 60, 0);
  return s;
}

// Independent matrix entry for n = 1 and a single term c z^p zbar^q w^t:
// <T e_alpha, e_beta> with the angular integral done by hand.
cplx entry_oracle(cplx c, int p, int q, double t, int alpha, int beta, double gamma) {
  if (alpha + p != beta + q) return 0.0;
  const double num = radial_integral(alpha + p, t, gamma);
  return c * num / std::sqrt(radial_integral(alpha, 0, gamma) * radial_integral(beta, 0, gamma));
}

double max_abs(const ComplexMatrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(FockMatrices, MonomialNorms) {
  EXPECT_NEAR(monomial_norm_sq(FockContext(1, 1.0), MultiIndex({0})), std::numbers::pi, 1e-14);
  EXPECT_NEAR(monomial_norm_sq(FockContext(1, 1.0), MultiIndex({2})), 2 * std::numbers::pi, 1e-14);
  EXPECT_NEAR(monomial_norm_sq(FockContext(2, 2.0), MultiIndex({1, 0})), std::numbers::pi * std::numbers::pi / 8, 1e-14);
  for (int k : {0, 3, 9})
    EXPECT_NEAR(monomial_norm_sq(FockContext(1, 1.7), MultiIndex({k})) / radial_integral(k, 0, 1.7), 1.0, 1e-12);
}

TEST(FockMatrices, ToeplitzOfOneIsIdentity) {
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto M = toeplitz_matrix(FockContext(n, 1.3), RadialSymbol::constant(n, 1.0), 5);
    EXPECT_LT(max_abs(M.entries - ComplexMatrix::Identity(M.entries.rows(), M.entries.cols())), 1e-14);
    EXPECT_TRUE(M.hermitian);
  }
}

TEST(FockMatrices, ModelSymbolDiagonal) {
  const auto M = toeplitz_matrix(FockContext(1, 1.0), RadialSymbol::weight(1, -2.0), 50);
  EXPECT_NEAR(M.entries(0, 0).real(), 0.596347362323194, 1e-14);
  for (int k : {0, 1, 7, 30, 50}) EXPECT_NEAR(M.entries(k, k).real(), entry_oracle(1.0, 0, 0, -2.0, k, k, 1.0).real(), 1e-12);
  auto off = M.entries;
  off.diagonal().setZero();
  EXPECT_EQ(max_abs(off), 0.0);
}

TEST(FockMatrices, EntriesAgainstQuadrature) {
  const double gamma = 1.6;
  const std::vector<std::tuple<cplx, int, int, double>> terms{
      {cplx(1, 0), 1, 0, 0.0}, {cplx(0.5, -1), 0, 2, -3.0}, {cplx(2, 0), 2, 1, -5.0}, {cplx(-1, 0.3), 1, 1, -1.0}};
  for (const auto& [c, p, q, t] : terms) {
    const auto S = mono(c, {p}, {q}, t);
    const auto M = toeplitz_matrix(FockContext(1, gamma), S, 12);
    for (int a = 0; a <= 12; ++a)
      for (int b = 0; b <= 12; ++b) {
        const cplx o = entry_oracle(c, p, q, t, a, b, gamma);
        EXPECT_LT(std::abs(M.entries(b, a) - o), 1e-11 * std::max(1.0, std::abs(o))) << p << q << t << " " << a << b;
      }
  }
}

TEST(FockMatrices, ShiftOperator) {
  const double gamma = 2.0;
  const auto M = toeplitz_matrix(FockContext(1, gamma), RadialSymbol::z(1, 0), 10);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(M.entries(k + 1, k).real(), std::sqrt((k + 1) / gamma), 1e-14);
}

TEST(FockMatrices, RealSymbolsAreHermitian) {
  const auto f = mono(1.0, {1, 0}, {0, 1}, -3.0) + mono(1.0, {0, 1}, {1, 0}, -3.0) + RadialSymbol::weight(2, -4.0);
  for (int D : {0, 3, 8, 15}) {
    const auto M = toeplitz_matrix(FockContext(2, 1.0), f, D);
    EXPECT_TRUE(M.hermitian);
    EXPECT_LE(hermitian_defect(M.entries), kHermitianGate);
  }
  EXPECT_FALSE(toeplitz_matrix(FockContext(1, 1.0), RadialSymbol::z(1, 0), 4).hermitian);
}

TEST(FockMatrices, BufferedProductExamples) {
  for (double gamma : {1.0, 2.5}) {
    const FockContext ctx(1, gamma);
    const auto P = buffered_product(ctx, {toeplitz_factor(ctx, RadialSymbol::zbar(1, 0)), toeplitz_factor(ctx, RadialSymbol::z(1, 0))}, 9);
    for (int k = 0; k <= 9; ++k) EXPECT_NEAR(P.entries(k, k).real(), (k + 1) / gamma, 1e-13);
    auto off = P.entries;
    off.diagonal().setZero();
    EXPECT_LT(max_abs(off), 1e-14);
  }
  const FockContext ctx(2, 1.0);
  const auto M = toeplitz_matrix(ctx, mono(1.0, {1, 0}, {0, 1}, -2.0), 12);
  const auto IM = buffered_product(ctx, {identity_factor(ctx), matrix_factor(M)}, 10);
  const auto top = M.entries.topLeftCorner(IM.entries.rows(), IM.entries.cols());
  EXPECT_LT(max_abs(IM.entries - top), 1e-15);
}

TEST(FockMatrices, BufferedProductAssociative) {
  const FockContext ctx(2, 1.0);
  const auto a = mono(1.0, {1, 0}, {0, 0}, -1.0), b = mono(1.0, {0, 0}, {0, 1}, -1.0), c = mono(1.0, {1, 1}, {0, 0}, -2.0);
  const int D = 8;
  const auto abc = buffered_product(ctx, {toeplitz_factor(ctx, a), toeplitz_factor(ctx, b), toeplitz_factor(ctx, c)}, D);
  const int B = a.shift_range() + b.shift_range() + c.shift_range();
  const auto ab = buffered_product(ctx, {toeplitz_factor(ctx, a), toeplitz_factor(ctx, b)}, D + B);
  const auto bc = buffered_product(ctx, {toeplitz_factor(ctx, b), toeplitz_factor(ctx, c)}, D + B);
  const auto left = buffered_product(ctx, {matrix_factor(ab), toeplitz_factor(ctx, c)}, D);
  const auto right = buffered_product(ctx, {toeplitz_factor(ctx, a), matrix_factor(bc)}, D);
  EXPECT_LT(max_abs(left.entries - abc.entries), 1e-14);
  EXPECT_LT(max_abs(right.entries - abc.entries), 1e-14);
}

TEST(FockMatrices, HankelProductExamples) {
  const double gamma = 1.5;
  const FockContext ctx(1, gamma);
  const auto Z = hankel_product(ctx, RadialSymbol::z(1, 0), RadialSymbol::z(1, 0), 10);
  EXPECT_LT(max_abs(Z.entries), 1e-13);
  const auto Zb = hankel_product(ctx, RadialSymbol::zbar(1, 0), RadialSymbol::zbar(1, 0), 10);
  EXPECT_LT(max_abs(Zb.entries - ComplexMatrix::Identity(11, 11) / gamma), 1e-13);
  const auto f = mono(1.0, {1}, {0}, -1.0);
  const auto H = hankel_product(ctx, f, f, 30);
  auto off = H.entries;
  off.diagonal().setZero();
  EXPECT_LT(max_abs(off), 1e-15);
  EXPECT_TRUE(H.hermitian);
  for (int k = 0; k <= 30; ++k) EXPECT_GE(H.entries(k, k).real(), -1e-15);
}

TEST(FockMatrices, HankelProductPositive) {
  const FockContext ctx(2, 1.0);
  const auto f = mono(1.0, {1, 0}, {0, 0}, -1.0) + mono(0.5, {0, 0}, {0, 1}, -1.0);
  const auto H = hankel_product(ctx, f, f, 8);
  ASSERT_TRUE(H.hermitian);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(H.entries);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
}

TEST(FockMatrices, WeylMatrices) {
  for (double gamma : {1.0, 2.0}) {
    const FockContext ctx(2, gamma);
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_EQ(max_abs(weyl_matrix(ctx, RadialSymbol::z(2, j), 7).entries - toeplitz_matrix(ctx, RadialSymbol::z(2, j), 7).entries), 0.0);
      EXPECT_EQ(max_abs(weyl_matrix(ctx, RadialSymbol::zbar(2, j), 7).entries - toeplitz_matrix(ctx, RadialSymbol::zbar(2, j), 7).entries), 0.0);
    }
    const FockContext c1(1, gamma);
    const auto zz = mono(1.0, {1}, {1});
    const auto W = weyl_matrix(c1, zz, 10), T = toeplitz_matrix(c1, zz, 10);
    EXPECT_LT(max_abs(W.entries - (T.entries - ComplexMatrix::Identity(11, 11) / (2 * gamma))), 1e-14);
  }
}

TEST(FockMatrices, WeylProductIsStar) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t n = trial % 2 + 1;
    const FockContext ctx(n, 1.0 + trial * 0.3);
    auto rnd = [&] {
      PolySymbol a(n);
      for (int t = 0; t < 4; ++t) {
        std::vector<int> p(n), q(n);
        std::uniform_int_distribution<int> e(0, 2);
        for (auto& v : p) v = e(rng);
        for (auto& v : q) v = e(rng);
        if (MultiIndex(p).degree() + MultiIndex(q).degree() > 4) continue;
        a.add_term({g(rng), g(rng)}, MultiIndex(p), MultiIndex(q), 0.0);
      }
      return a;
    };
    const auto a = rnd(), b = rnd();
    const auto lhs = buffered_product(ctx, {weyl_factor(ctx, a), weyl_factor(ctx, b)}, 12);
    const auto rhs = weyl_matrix(ctx, star(a, b, ctx.gamma), 12);
    EXPECT_LT(max_abs(lhs.entries - rhs.entries), 1e-10 * std::max(1.0, max_abs(rhs.entries)));
  }
}

TEST(FockMatrices, BerezinExamples) {
  const FockContext ctx(1, 1.0);
  const std::vector<cplx> w{cplx(0.6, -0.3)};
  const double w2 = norm(w[0]);
  EXPECT_NEAR(std::abs(berezin(toeplitz_matrix(ctx, RadialSymbol::constant(1, 1.0), 40), w).value - 1.0), 0.0, 1e-13);
  const auto zz = mono(1.0, {1}, {1});
  EXPECT_NEAR(std::abs(berezin(toeplitz_matrix(ctx, zz, 40), w).value - (w2 + 1.0)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(berezin(weyl_matrix(ctx, zz, 40), w).value - (w2 + 0.5)), 0.0, 1e-12);
  const std::vector<cplx> far{cplx(6.0, 0.0)};
  EXPECT_TRUE(berezin(toeplitz_matrix(ctx, zz, 40), far).truncation_warning);
  EXPECT_FALSE(berezin(toeplitz_matrix(ctx, zz, 40), w).truncation_warning);
}

TEST(FockMatrices, BerezinIdentitiesRandom) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = trial < 3 ? 1 : 2;
    const FockContext ctx(n, 1.0 + 0.5 * trial);
    PolySymbol f(n);
    for (int t = 0; t < 4; ++t) {
      std::vector<int> p(n), q(n);
      std::uniform_int_distribution<int> e(0, 2);
      for (auto& v : p) v = e(rng);
      for (auto& v : q) v = e(rng);
      f.add_term({g(rng), g(rng)}, MultiIndex(p), MultiIndex(q), 0.0);
    }
    const auto T = toeplitz_matrix(ctx, f, 40), W = weyl_matrix(ctx, f, 40);
    for (int k = 0; k < 10; ++k) {
      std::vector<cplx> w(n);
      for (auto& v : w) v = {u(rng), u(rng)};
      const cplx et = heat(heat(f, ctx.gamma), ctx.gamma).evaluate(w), ew = heat(f, ctx.gamma).evaluate(w);
      EXPECT_LT(std::abs(berezin(T, w).value - et), 1e-6 * std::max(std::abs(et), 1e-3));
      EXPECT_LT(std::abs(berezin(W, w).value - ew), 1e-6 * std::max(std::abs(ew), 1e-3));
    }
  }
}

TEST(FockMatrices, CompressionMonotone) {
  // positive nonradial symbol: eigenvalues grow with the truncation degree
  const FockContext ctx(1, 1.0);
  const auto f = RadialSymbol::weight(1, -2.0) + mono(0.25, {2}, {0}, -4.0) + mono(0.25, {0}, {2}, -4.0);
  auto eig = [&](int D) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(toeplitz_matrix(ctx, f, D).entries);
    Eigen::VectorXd v = es.eigenvalues().reverse();
    return v;
  };
  const auto a = eig(20), b = eig(40), c = eig(80);
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    EXPECT_LE(a(j), b(j) + 1e-14);
    EXPECT_LE(b(j), c(j) + 1e-14);
  }
}

TEST(FockMatrices, BinaryAndCsvRoundTrip) {
  const FockContext ctx(2, 1.0);
  const auto M = toeplitz_matrix(ctx, mono(cplx(1, 2), {1, 0}, {0, 1}, -3.0), 5);
  const auto dir = std::filesystem::temp_directory_path() / "fock_matrices_test";
  std::filesystem::create_directories(dir);
  write_matrix_binary(M, (dir / "m.bin").string());
  EXPECT_EQ(max_abs(read_matrix_binary((dir / "m.bin").string()) - M.entries), 0.0);
  write_matrix_csv(M, (dir / "m.csv").string());
  write_provenance(M, (dir / "m.json").string());
  EXPECT_GT(std::filesystem::file_size(dir / "m.csv"), 10u);
  std::ifstream pj(dir / "m.json");
  const auto j = nlohmann::json::parse(pj);
  EXPECT_EQ(j.at("kind"), "toeplitz");
  EXPECT_EQ(j.at("D"), 5);
  std::filesystem::remove_all(dir);
}
