#pragma once

// Experiment driver: each experiment builds an operator expression, obtains
// its s-numbers (exact diagonal path when the shifts cancel, dense truncation
// otherwise), estimates the Dixmier trace, and compares it with a closed-form
// target computed on the sphere by a disjoint symbolic path.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "dixmier.hpp"
#include "fock_matrices.hpp"
#include "sphere_calculus.hpp"
#include "spectral.hpp"
#include "symbols.hpp"
#include "weyl_calculus.hpp"

namespace fock {

/// Bad or unsupported configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"model-operator", "toeplitz-trace", "hankel-trace",
                                              "commutator-trace", "mixed-trace", "calculus-check"};
  return names;
}

struct ExperimentConfig {
  std::string name;
  nlohmann::json raw = nlohmann::json::object();  // experiment-specific fields
  int max_dense_dim = 3000;
  std::uint64_t seed = 1;
  std::optional<std::string> csv_dir;

  std::size_t n() const { return raw.value("n", std::size_t{1}); }
  double gamma() const { return raw.value("gamma", 1.0); }
};

/// Deviation against a closed-form target; zero targets use an absolute band.
struct Check {
  std::string name;
  double computed = 0.0;
  double target = 0.0;
  double deviation = 0.0;  // |computed - target| / max(|target|, 1e-12)
  double tolerance = 0.0;
  bool absolute = false;  // tolerance applies to |computed - target|
  bool passed = false;
  std::string note;

  nlohmann::json to_json() const {
    nlohmann::json j{{"name", name},           {"computed", computed}, {"target", target},
                     {"deviation", deviation}, {"tolerance", tolerance},
                     {"tolerance_kind", absolute ? "absolute" : "relative"}, {"pass", passed}};
    if (!note.empty()) j["note"] = note;
    return j;
  }
};

inline constexpr double kDeviationFloor = 1e-12;

inline Check make_check(std::string name, double computed, double target, double tol, bool absolute = false) {
  Check c{std::move(name), computed, target, std::fabs(computed - target) / std::max(std::fabs(target), kDeviationFloor),
          tol, absolute, false, {}};
  c.passed = absolute ? std::fabs(computed - target) <= tol : c.deviation <= tol;
  return c;
}

struct Report {
  nlohmann::json body;
  bool passed = false;
};

namespace detail {

inline RadialSymbol config_symbol(const nlohmann::json& cfg, const nlohmann::json& j, std::size_t n) {
  nlohmann::json s = j;
  if (!s.contains("n")) s["n"] = n;
  RadialSymbol S = [&] {
    try {
      return symbol_from_json(s);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }();
  if (S.dimension() != n) throw ConfigError("symbol dimension " + std::to_string(S.dimension()) + " differs from n = " + std::to_string(n));
  (void)cfg;
  return S;
}

inline RadialSymbol required_symbol(const nlohmann::json& cfg, const char* key, std::size_t n) {
  if (!cfg.contains(key)) throw ConfigError(std::string("config is missing symbol \"") + key + "\"");
  return config_symbol(cfg, cfg.at(key), n);
}

inline double integer_order(const RadialSymbol& S, const char* what) {
  if (S.is_zero()) throw ConfigError(std::string(what) + " is the zero symbol");
  const double m = S.order();
  if (std::fabs(m - std::round(m)) > 1e-12) throw ConfigError(std::string(what) + " must have integer order");
  return std::round(m);
}

inline double factorial(std::size_t n) { return std::exp(log_factorial(static_cast<double>(n))); }

inline int default_K_degree(const OperatorExpression& expr) {
  if (expr.n == 1) return (1 << 20) + 8;
  if (expr.n == 2) return expr.is_radial() ? 10000 : 4000;
  return expr.is_radial() ? 400 : 120;
}

struct SpectrumData {
  SNumberSequence s_numbers, positive, negative;
  bool diagonal = false;
  bool signed_available = false;
  int K_degree = 0;
  int D = 0;
  double max_imag_ratio = 0.0;
};

/// Exact diagonal spectrum when the expression allows it, otherwise a dense
/// truncation at degree D (refused beyond the size cap).
inline SpectrumData compute_spectrum(const ExperimentConfig& cfg, const OperatorExpression& expr) {
  const double gamma = cfg.gamma();
  SpectrumData out;
  if (expr.is_torus_diagonal() && !cfg.raw.contains("D")) {
    const int K = cfg.raw.value("K_degree", default_K_degree(expr));
    if (K < 16) throw ConfigError("K_degree must be at least 16");
    auto d = diagonal_spectrum(expr, gamma, K);
    out.s_numbers = std::move(d.s_numbers);
    out.positive = std::move(d.positive);
    out.negative = std::move(d.negative);
    out.diagonal = true;
    out.signed_available = d.max_imag_ratio < 1e-12;
    out.K_degree = K;
    out.max_imag_ratio = d.max_imag_ratio;
    return out;
  }
  const FockContext ctx(expr.n, gamma);
  const int D = cfg.raw.value("D", 0);
  if (D <= 0)
    throw ConfigError("configuration is not torus-diagonal; set \"D\" to use a dense truncation (dimension <= " +
                      std::to_string(cfg.max_dense_dim) + ")");
  const auto dim = static_cast<std::uint64_t>(binomial(D + static_cast<int>(expr.n), static_cast<int>(expr.n)));
  const int B = expr.total_shift_range();
  const auto work = static_cast<std::uint64_t>(binomial(D + B + static_cast<int>(expr.n), static_cast<int>(expr.n)));
  if (dim > static_cast<std::uint64_t>(cfg.max_dense_dim) || work > 4ull * static_cast<std::uint64_t>(cfg.max_dense_dim))
    throw ConfigError("dense truncation at D = " + std::to_string(D) + " has dimension " + std::to_string(dim) +
                      " (buffered " + std::to_string(work) + "), above --max-dense-dim " +
                      std::to_string(cfg.max_dense_dim) +
                      "; lower D, raise --max-dense-dim, or use a configuration whose symbol shifts cancel");
  const OperatorMatrix M = assemble(ctx, expr, D);
  out.D = D;
  if (M.hermitian) {
    const auto ev = signed_eigenvalues(M);
    std::vector<double> a, pos, neg;
    for (double v : ev) {
      a.push_back(std::fabs(v));
      if (v > 0) pos.push_back(v);
      else if (v < 0) neg.push_back(-v);
    }
    out.s_numbers = SNumberSequence::from_values(a, SpectrumProvenance::truncated, D);
    out.positive = SNumberSequence::from_values(pos, SpectrumProvenance::truncated, D);
    out.negative = SNumberSequence::from_values(neg, SpectrumProvenance::truncated, D);
    out.signed_available = true;
  } else {
    out.s_numbers = singular_values(M);
  }
  return out;
}

inline nlohmann::json estimate_json(const DixmierEstimate& e) {
  nlohmann::json grid = nlohmann::json::array(), lm = nlohmann::json::array();
  for (auto K : e.grid) grid.push_back(K);
  for (double v : e.log_means) lm.push_back(v);
  return {{"value", e.value},
          {"method", to_string(e.method)},
          {"K_used", e.K_used},
          {"diagnostics",
           {{"grid", grid},
            {"log_means", lm},
            {"slope", e.slope},
            {"fit_residual", e.residual},
            {"leave_one_out_spread", e.stability},
            {"ill_conditioned", e.ill_conditioned},
            {"pointwise_median", e.tail.median},
            {"pointwise_spread", e.tail.spread},
            {"measurable_consistent", e.measurable_consistent}}}};
}

/// Dixmier estimate of one sequence. Finite sequences are finite-rank parts
/// whose trace functional vanishes.
inline DixmierEstimate estimate_sequence(const ExperimentConfig& cfg, const SpectrumData& sp, const SNumberSequence& s,
                                         std::size_t n) {
  if (!sp.diagonal) {
    // Truncated spectra: the top half of the ranks feels the cut, so fit on
    // halvings of size/2.
    if (s.size() < 8) return DixmierEstimate{0.0, EstimateMethod::log_mean, s.size()};
    std::vector<std::uint64_t> grid;
    for (std::uint64_t K = s.size() / 2; K >= 16 && grid.size() < 5; K /= 2) grid.push_back(K);
    if (grid.size() < 3) return log_mean_estimate(s, s.size() / 2);
    return extrapolate(s, grid);
  }
  if (s.exact_ranks() < 1024 && s.exact_ranks() == s.size()) {
    DixmierEstimate e{0.0, EstimateMethod::log_mean, s.size()};
    e.measurable_consistent = true;
    return e;
  }
  std::vector<std::uint64_t> grid;
  if (cfg.raw.contains("grid")) {
    for (const auto& v : cfg.raw.at("grid")) {
      const auto K = v.get<std::uint64_t>();
      if (K >= s.exact_ranks())
        throw ConfigError("grid rank " + std::to_string(K) + " exceeds the exact ranks (" +
                          std::to_string(s.exact_ranks()) + "); raise K_degree");
      grid.push_back(K);
    }
  } else {
    grid = default_grid(s, n, sp.K_degree);
  }
  if (grid.size() < 3) throw ConfigError("not enough exact ranks for extrapolation; raise K_degree");
  return extrapolate(s, grid);
}

inline void maybe_write_csv(const ExperimentConfig& cfg, const SpectrumData& sp) {
  if (!cfg.csv_dir) return;
  std::filesystem::create_directories(*cfg.csv_dir);
  const std::string base = (std::filesystem::path(*cfg.csv_dir) / cfg.name).string();
  sp.s_numbers.write_csv(base + "_s_numbers.csv", true);
  if (sp.signed_available) {
    sp.positive.write_csv(base + "_positive.csv", true);
    sp.negative.write_csv(base + "_negative.csv", true);
  }
}

inline nlohmann::json spectrum_json(const SpectrumData& sp) {
  return {{"provenance", sp.diagonal ? "exact-diagonal" : "truncated"},
          {"K_degree", sp.K_degree},
          {"D", sp.D},
          {"count", sp.s_numbers.size()},
          {"exact_ranks", sp.s_numbers.exact_ranks()},
          {"largest", sp.s_numbers.empty() ? 0.0 : sp.s_numbers[0]}};
}

inline double tolerance(const ExperimentConfig& cfg, const char* key, double dflt) {
  if (cfg.raw.contains("tolerances") && cfg.raw.at("tolerances").contains(key))
    return cfg.raw.at("tolerances").at(key).get<double>();
  return dflt;
}

inline std::string sphere_text(const SpherePolynomial& P) { return P.str(); }

// --- individual experiments -------------------------------------------------

inline void run_model_operator(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const std::size_t n = cfg.n();
  const double gamma = cfg.gamma();
  const auto expr = OperatorExpression::single(n, {1.0, {RadialSymbol::weight(n, -2.0 * static_cast<double>(n))}});
  const auto sp = compute_spectrum(cfg, expr);
  maybe_write_csv(cfg, sp);
  const double target = std::pow(gamma, static_cast<double>(n)) / factorial(n);
  const auto est = estimate_sequence(cfg, sp, sp.s_numbers, n);
  body["spectrum"] = spectrum_json(sp);
  body["estimates"]["extrapolated"] = estimate_json(est);
  body["targets"]["gamma^n/n!"] = target;
  checks.push_back(make_check("extrapolated log-mean", est.value, target, tolerance(cfg, "extrapolated", 0.02)));
  if (sp.diagonal) {
    std::uint64_t lo, hi;
    if (cfg.raw.contains("window")) {
      lo = cfg.raw.at("window").at(0).get<std::uint64_t>();
      hi = cfg.raw.at("window").at(1).get<std::uint64_t>();
    } else if (n == 1 && sp.s_numbers.exact_ranks() > 1'000'000) {
      lo = 500'000;
      hi = 1'000'000;
    } else {
      hi = sp.s_numbers.exact_ranks() - 1;
      lo = hi / 2;
    }
    if (hi >= sp.s_numbers.exact_ranks()) throw ConfigError("pointwise window exceeds the exact ranks");
    const auto pw = pointwise(sp.s_numbers, lo, hi);
    body["estimates"]["pointwise"] = {{"median", pw.median}, {"spread", pw.spread}, {"window", {lo, hi}}};
    checks.push_back(make_check("pointwise median (j+1)s_j", pw.median, target,
                                tolerance(cfg, "pointwise", n == 1 ? 0.005 : 0.02)));
  }
}

inline void run_toeplitz_trace(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const std::size_t n = cfg.n();
  const double gamma = cfg.gamma();
  const RadialSymbol f = required_symbol(cfg.raw, "f", n);
  const double m = integer_order(f, "f");
  if (m != -2.0 * static_cast<double>(n)) throw ConfigError("toeplitz-trace needs f of order -2n");
  const auto lead = leading_sphere_part(f);
  const double target = (std::pow(gamma, static_cast<double>(n)) / factorial(n) * sphere_integral(lead.f0)).real();
  const auto expr = OperatorExpression::single(n, {1.0, {f}});
  const auto sp = compute_spectrum(cfg, expr);
  maybe_write_csv(cfg, sp);
  DixmierEstimate est;
  if (sp.signed_available && !sp.negative.empty()) {
    const auto ep = estimate_sequence(cfg, sp, sp.positive, n), en = estimate_sequence(cfg, sp, sp.negative, n);
    est = ep;
    est.value = ep.value - en.value;
    body["estimates"]["positive_part"] = estimate_json(ep);
    body["estimates"]["negative_part"] = estimate_json(en);
  } else {
    est = estimate_sequence(cfg, sp, sp.s_numbers, n);
  }
  body["spectrum"] = spectrum_json(sp);
  body["estimates"]["trace"] = estimate_json(est);
  body["targets"]["f0"] = sphere_text(lead.f0);
  body["targets"]["(gamma^n/n!) int f0"] = target;
  checks.push_back(make_check("Dixmier trace of T_f", est.value, target, tolerance(cfg, "trace", 0.02)));
}

/// Q_{mk}(f, g) on the sphere from the leading parts.
inline SpherePolynomial q_form(const RadialSymbol& f, const RadialSymbol& g) {
  const auto lf = leading_sphere_part(f), lg = leading_sphere_part(g);
  return q_symbolic(lf.f0, -lf.order, lg.f0, -lg.order);
}

inline void run_hankel_trace(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const std::size_t n = cfg.n();
  const RadialSymbol f = required_symbol(cfg.raw, "f", n);
  const RadialSymbol g = cfg.raw.contains("g") ? required_symbol(cfg.raw, "g", n) : f;
  if (integer_order(f, "f") != 0.0 || integer_order(g, "g") != 0.0)
    throw ConfigError("hankel-trace needs f and g of order 0 (use mixed-trace for other orders)");
  const auto f0 = leading_sphere_part(f).f0, g0 = leading_sphere_part(g).f0;
  const SpherePolynomial bracket = bracket_F(f0.conj(), g0);
  const SpherePolynomial q = q_symbolic(f0, 0.0, g0, 0.0);
  const cplx target_c = sphere_integral(bracket.pow(static_cast<int>(n))) / factorial(n);
  OperatorExpression expr{n, {}};
  for (std::size_t i = 0; i < n; ++i) expr.product.push_back(hankel_sum(f, g));
  const auto sp = compute_spectrum(cfg, expr);
  maybe_write_csv(cfg, sp);
  const auto est = estimate_sequence(cfg, sp, sp.s_numbers, n);
  body["spectrum"] = spectrum_json(sp);
  body["estimates"]["trace"] = estimate_json(est);
  body["targets"]["bracket"] = sphere_text(bracket);
  body["targets"]["(1/n!) int bracket^n"] = target_c.real();
  body["targets"]["imag"] = target_c.imag();
  checks.push_back(make_check("Dixmier trace of (H_f*H_g)^n", est.value, target_c.real(),
                              tolerance(cfg, "trace", n == 1 ? 0.01 : 0.05)));
  Check same{"bracket equals q_symbolic", sphere_equal(bracket, q) ? 0.0 : 1.0, 0.0, 0.0, 0.0, true, false, {}};
  same.passed = same.computed == 0.0;
  checks.push_back(same);
}

inline void run_commutator_trace(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const std::size_t n = cfg.n();
  std::vector<std::pair<RadialSymbol, RadialSymbol>> pairs;
  if (cfg.raw.contains("pairs")) {
    for (const auto& p : cfg.raw.at("pairs"))
      pairs.emplace_back(required_symbol(p, "f", n), required_symbol(p, "g", n));
  } else {
    const RadialSymbol f = required_symbol(cfg.raw, "f", n), g = required_symbol(cfg.raw, "g", n);
    pairs.assign(n, {f, g});
  }
  if (pairs.size() != n) throw ConfigError("commutator-trace needs exactly n pairs");
  SpherePolynomial integrand = SpherePolynomial::constant(n, 1.0);
  double scale_int = 1.0;
  OperatorExpression expr{n, {}};
  for (const auto& [f, g] : pairs) {
    if (integer_order(f, "f") != 0.0 || integer_order(g, "g") != 0.0)
      throw ConfigError("commutator-trace needs symbols of order 0");
    const SpherePolynomial qa = q_form(g.conj(), f), qb = q_form(f.conj(), g);
    integrand = integrand * (qa - qb);
    scale_int *= std::sqrt(sphere_norm_sq(qa)) + std::sqrt(sphere_norm_sq(qb));
    expr.product.push_back(commutator_sum(f, g));
  }
  const double target = (sphere_integral(integrand) / factorial(n)).real();
  // L2(sigma) norms bound the L1 norms of the two Q-products from above.
  const double scale = scale_int / factorial(n);
  const auto sp = compute_spectrum(cfg, expr);
  maybe_write_csv(cfg, sp);
  if (!sp.signed_available) throw ConfigError("commutator spectrum is not real; signed Dixmier estimate unavailable");
  const auto ep = estimate_sequence(cfg, sp, sp.positive, n), en = estimate_sequence(cfg, sp, sp.negative, n);
  const double value = ep.value - en.value;
  body["spectrum"] = spectrum_json(sp);
  body["estimates"]["positive_part"] = estimate_json(ep);
  body["estimates"]["negative_part"] = estimate_json(en);
  body["estimates"]["trace"] = value;
  body["targets"]["integrand"] = sphere_text(integrand);
  body["targets"]["(1/n!) int prod(Q(gbar,f) - Q(fbar,g))"] = target;
  body["targets"]["scale"] = scale;
  const double rel = tolerance(cfg, "trace", 0.05);
  if (std::fabs(target) <= 1e-12 * std::max(scale, 1.0)) {
    auto c = make_check("Dixmier trace of commutator product", value, target, rel * scale, true);
    c.note = "zero target: absolute band tolerance * int(|Q(gbar,f)| + |Q(fbar,g)|)";
    checks.push_back(c);
  } else {
    checks.push_back(make_check("Dixmier trace of commutator product", value, target, rel));
  }
}

inline void run_mixed_trace(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const std::size_t n = cfg.n();
  const double gamma = cfg.gamma();
  const std::string mode = cfg.raw.value("mode", cfg.raw.contains("factors") ? "toeplitz-product" : "hankel");
  OperatorExpression expr{n, {}};
  SpherePolynomial integrand = SpherePolynomial::constant(n, 1.0);
  double prefactor = 0.0;
  if (mode == "hankel") {
    if (!cfg.raw.contains("pairs")) throw ConfigError("mixed-trace (hankel) needs \"pairs\"");
    double weight = 0.0;
    std::size_t l = 0;
    for (const auto& p : cfg.raw.at("pairs")) {
      const RadialSymbol f = required_symbol(p, "f", n), g = required_symbol(p, "g", n);
      const double m = -integer_order(f, "f"), k = -integer_order(g, "g");
      if (m < 0 || k < 0) throw ConfigError("mixed-trace pairs need orders <= 0");
      weight += m + k + 2.0;
      ++l;
      integrand = integrand * q_form(f, g);
      expr.product.push_back(hankel_sum(f, g));
    }
    if (weight != 2.0 * static_cast<double>(n)) throw ConfigError("mixed-trace needs sum(m_j + k_j) + 2l = 2n");
    if (cfg.raw.contains("h"))
      for (const auto& hj : cfg.raw.at("h")) {
        const RadialSymbol h = config_symbol(cfg.raw, hj, n);
        if (integer_order(h, "h") != 0.0) throw ConfigError("mixed-trace h symbols need order 0");
        integrand = integrand * leading_sphere_part(h).f0;
        expr.product.push_back(toeplitz_sum(h));
      }
    prefactor = std::pow(gamma, static_cast<double>(n) - static_cast<double>(l)) / factorial(n);
  } else if (mode == "toeplitz-product") {
    if (!cfg.raw.contains("factors")) throw ConfigError("mixed-trace (toeplitz-product) needs \"factors\"");
    ToeplitzChain chain{1.0, {}};
    double total = 0.0;
    for (const auto& fj : cfg.raw.at("factors")) {
      const RadialSymbol f = config_symbol(cfg.raw, fj, n);
      total += integer_order(f, "factor");
      integrand = integrand * leading_sphere_part(f).f0;
      chain.factors.push_back(f);
    }
    if (total != -2.0 * static_cast<double>(n)) throw ConfigError("toeplitz-product factors need orders summing to -2n");
    expr = OperatorExpression::single(n, chain);
    prefactor = std::pow(gamma, static_cast<double>(n)) / factorial(n);
  } else {
    throw ConfigError("unknown mixed-trace mode \"" + mode + "\"");
  }
  const cplx target_c = prefactor * sphere_integral(integrand);
  const auto sp = compute_spectrum(cfg, expr);
  maybe_write_csv(cfg, sp);
  DixmierEstimate est;
  double value;
  if (sp.signed_available && !sp.negative.empty() && sp.negative.exact_ranks() >= 1024) {
    const auto ep = estimate_sequence(cfg, sp, sp.positive, n), en = estimate_sequence(cfg, sp, sp.negative, n);
    value = ep.value - en.value;
    body["estimates"]["positive_part"] = estimate_json(ep);
    body["estimates"]["negative_part"] = estimate_json(en);
  } else {
    est = estimate_sequence(cfg, sp, sp.s_numbers, n);
    value = est.value;
    body["estimates"]["s_numbers"] = estimate_json(est);
  }
  body["mode"] = mode;
  body["spectrum"] = spectrum_json(sp);
  body["estimates"]["trace"] = value;
  body["targets"]["integrand"] = sphere_text(integrand);
  body["targets"]["trace"] = target_c.real();
  checks.push_back(make_check("Dixmier trace of product", value, target_c.real(),
                              tolerance(cfg, "trace", mode == "hankel" ? 0.05 : 0.02)));
}

// --- calculus-check ---------------------------------------------------------

inline cplx random_coeff(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng)};
}

/// Random polynomial in z, zbar with total degree <= deg and a few terms.
inline PolySymbol random_poly(std::mt19937_64& rng, std::size_t n, int deg, int terms) {
  PolySymbol a(n);
  std::uniform_int_distribution<int> d(0, deg);
  for (int t = 0; t < terms; ++t) {
    const int total = d(rng);
    std::vector<int> p(n, 0), q(n, 0);
    std::uniform_int_distribution<std::size_t> coord(0, 2 * n - 1);
    for (int i = 0; i < total; ++i) {
      const std::size_t c = coord(rng);
      if (c < n) ++p[c];
      else ++q[c - n];
    }
    a.add_term(random_coeff(rng), MultiIndex(p), MultiIndex(q), 0.0);
  }
  if (a.is_zero()) a.add_term(1.0, MultiIndex(n), MultiIndex(n), 0.0);
  return a;
}

inline SpherePolynomial random_sphere_poly(std::mt19937_64& rng, std::size_t n, int deg, int terms) {
  SpherePolynomial P(n);
  for (const auto& t : random_poly(rng, n, deg, terms).terms()) P.add_term(t.p, t.q, t.coeff);
  return P;
}

/// Max coefficient difference relative to the largest coefficient of either.
inline double symbol_distance(const RadialSymbol& a, const RadialSymbol& b) {
  double scale = 0.0, diff = 0.0;
  for (const auto& t : a.terms()) scale = std::max(scale, std::abs(t.coeff));
  for (const auto& t : b.terms()) scale = std::max(scale, std::abs(t.coeff));
  for (const auto& t : (a - b).terms()) diff = std::max(diff, std::abs(t.coeff));
  return scale > 0 ? diff / scale : diff;
}

inline double matrix_distance(const ComplexMatrix& A, const ComplexMatrix& B) {
  const double scale = std::max(A.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff());
  return scale > 0 ? (A - B).cwiseAbs().maxCoeff() / scale : 0.0;
}

inline std::vector<cplx> random_sphere_point(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<cplx> z(n);
  for (auto& v : z) v = {g(rng), g(rng)};
  const double r = std::sqrt(norm_sq(z));
  for (auto& v : z) v /= r;
  return z;
}

/// max |A - B| over random sphere points, relative to max(1, max |B|).
inline double sphere_distance(const SpherePolynomial& A, const SpherePolynomial& B, std::mt19937_64& rng,
                              int points = 32) {
  double diff = 0.0, scale = 1.0;
  for (int k = 0; k < points; ++k) {
    const auto z = random_sphere_point(rng, A.dimension());
    const cplx b = B.evaluate(z);
    diff = std::max(diff, std::abs(A.evaluate(z) - b));
    scale = std::max(scale, std::abs(b));
  }
  return diff / scale;
}

inline std::vector<cplx> random_ball_point(std::mt19937_64& rng, std::size_t n, double radius) {
  auto z = random_sphere_point(rng, n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::pow(u(rng), 1.0 / (2.0 * static_cast<double>(n)));
  for (auto& v : z) v *= r;
  return z;
}

/// Monomial symbols of order -m with a polynomial angular part, for the
/// q_numeric / q_symbolic comparison.
inline std::vector<std::pair<RadialSymbol, RadialSymbol>> q_test_pairs(std::size_t n) {
  auto mono = [n](std::vector<int> p, std::vector<int> q, double order) {
    MultiIndex P(p), Q(q);
    return RadialSymbol::monomial(1.0, P, Q, order - P.degree() - Q.degree());
  };
  std::vector<int> e1(n, 0), e2(n, 0), z0(n, 0), e11(n, 0);
  e1[0] = 1;
  e2[n > 1 ? 1 : 0] = 1;
  e11[0] = 2;
  return {
      {mono(e1, z0, 0), mono(e1, z0, 0)},   {mono(e1, z0, -1), mono(e1, z0, -1)}, {mono(e1, z0, -2), mono(e2, z0, 0)},
      {mono(z0, e1, 0), mono(e1, z0, -1)},  {mono(e1, e2, 0), mono(e2, e1, -2)},  {mono(e11, z0, -1), mono(e1, z0, 0)},
      {mono(z0, z0, -2), mono(e1, e1, -1)}, {mono(e1, e1, -1), mono(z0, e2, -2)}, {mono(e2, z0, -2), mono(e1, e2, -2)},
      {mono(z0, e11, -1), mono(e11, z0, -2)}};
}

inline void run_calculus_check(const ExperimentConfig& cfg, nlohmann::json& body, std::vector<Check>& checks) {
  const double gamma = cfg.gamma();
  std::mt19937_64 rng(cfg.seed);
  auto max_check = [&](std::string name, double worst, double tol) {
    checks.push_back(make_check(std::move(name), worst, 0.0, tol, true));
  };

  // star product
  double assoc = 0.0, anti = 0.0, unit = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = trial % 2 ? 2 : 1;
    const auto a = random_poly(rng, n, 3, 4), b = random_poly(rng, n, 3, 4), c = random_poly(rng, n, 3, 4);
    assoc = std::max(assoc, symbol_distance(star(star(a, b, gamma), c, gamma), star(a, star(b, c, gamma), gamma)));
    anti = std::max(anti, symbol_distance(star(a, b, gamma).conj(), star(b.conj(), a.conj(), gamma)));
    unit = std::max(unit, symbol_distance(star(a, RadialSymbol::constant(n, 1.0), gamma), a));
  }
  max_check("star associativity", assoc, 1e-12);
  max_check("star conjugation antihomomorphism", anti, 1e-12);
  max_check("star unit", unit, 1e-12);

  double gen = 0.0;
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t k = 0; k < 2; ++k) {
      const auto zj = RadialSymbol::z(2, j), zk = RadialSymbol::zbar(2, k);
      const auto comm = star(zj, zk, gamma) - star(zk, zj, gamma);
      const auto expect = RadialSymbol::constant(2, j == k ? -1.0 / gamma : 0.0);
      double d = 0.0;
      for (const auto& t : (comm - expect).terms()) d = std::max(d, std::abs(t.coeff));
      gen = std::max(gen, d * gamma);
    }
  max_check("generator commutators z_j#zbar_k - zbar_k#z_j", gen, 1e-14);

  double round = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = random_poly(rng, trial % 2 ? 2 : 1, 8, 6);
    round = std::max(round, symbol_distance(heat_inverse(heat(a, gamma), gamma), a));
    round = std::max(round, symbol_distance(heat(heat_inverse(a, gamma), gamma), a));
  }
  max_check("heat / heat_inverse roundtrip", round, 1e-12);

  // Weyl matrices
  const int D = 12;
  double gen_w = 0.0;
  for (std::size_t n : {std::size_t{1}, std::size_t{2}}) {
    const FockContext ctx(n, gamma);
    for (std::size_t j = 0; j < n; ++j)
      for (const auto& a : {RadialSymbol::z(n, j), RadialSymbol::zbar(n, j)})
        gen_w = std::max(gen_w, matrix_distance(weyl_matrix(ctx, a, D).entries, toeplitz_matrix(ctx, a, D).entries));
  }
  max_check("W_{z_j} = T_{z_j}, W_{zbar_j} = T_{zbar_j}", gen_w, 1e-14);

  double wab = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = trial % 2 ? 2 : 1;
    const FockContext ctx(n, gamma);
    const auto a = random_poly(rng, n, 4, 4), b = random_poly(rng, n, 4, 4);
    const auto lhs = buffered_product(ctx, {weyl_factor(ctx, a), weyl_factor(ctx, b)}, D);
    const auto rhs = weyl_matrix(ctx, star(a, b, gamma), D);
    wab = std::max(wab, matrix_distance(lhs.entries, rhs.entries));
  }
  max_check("W_a W_b = W_{a#b} (D=12, buffered)", wab, 1e-10);

  // Berezin transforms
  double bt = 0.0, bw = 0.0;
  bool warned = false;
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = trial < 3 ? 1 : 2;
    const FockContext ctx(n, gamma);
    const auto f = random_poly(rng, n, 4, 4);
    const auto T = toeplitz_matrix(ctx, f, 40), W = weyl_matrix(ctx, f, 40);
    const auto hf = heat(f, gamma), hhf = heat(hf, gamma);
    for (int k = 0; k < 10; ++k) {
      const auto w = random_ball_point(rng, n, 1.0);
      const auto rt = berezin(T, w), rw = berezin(W, w);
      warned = warned || rt.truncation_warning || rw.truncation_warning;
      const cplx et = hhf.evaluate(w), ew = hf.evaluate(w);
      bt = std::max(bt, std::abs(rt.value - et) / std::max(std::abs(et), 1e-12));
      bw = std::max(bw, std::abs(rw.value - ew) / std::max(std::abs(ew), 1e-12));
    }
  }
  max_check("Berezin of T_f = E^2 f", bt, 1e-6);
  max_check("Berezin of W_f = E f", bw, 1e-6);
  if (warned) checks.back().note = "Berezin truncation warning raised";

  // Leading symbol of the semi-commutator vs the sphere formula
  double p8 = 0.0;
  for (std::size_t n : {std::size_t{1}, std::size_t{2}})
    for (const auto& [f, g] : q_test_pairs(n)) {
      const auto lf = leading_sphere_part(f), lg = leading_sphere_part(g);
      const SpherePolynomial q = q_symbolic(lf.f0, -lf.order, lg.f0, -lg.order);
      const RadialSymbol h = prop8_leading(f, g, gamma);
      const double expected_order = lf.order + lg.order - 2.0;
      SpherePolynomial lead(n);
      if (!h.is_zero() && h.order() >= expected_order - 1e-12) lead = leading_sphere_part(h).f0 * gamma;
      p8 = std::max(p8, sphere_distance(lead, q, rng));
    }
  max_check("gamma * leading part of semi-commutator symbol = q_symbolic", p8, 1e-12);

  // q_numeric vs q_symbolic
  double pq = 0.0;
  bool all_converged = true;
  for (std::size_t n : {std::size_t{1}, std::size_t{2}})
    for (const auto& [f, g] : q_test_pairs(n)) {
      const auto lf = leading_sphere_part(f), lg = leading_sphere_part(g);
      const SpherePolynomial q = q_symbolic(lf.f0, -lf.order, lg.f0, -lg.order);
      for (int k = 0; k < 20; ++k) {
        const auto zeta = random_sphere_point(rng, n);
        const auto r = q_numeric(f, g, zeta, -lf.order - lg.order + 2.0);
        all_converged = all_converged && r.converged;
        pq = std::max(pq, std::abs(r.limit - q.evaluate(zeta)));
      }
    }
  max_check("q_numeric limit = q_symbolic (20 points x 10 pairs)", pq, 1e-6);
  if (!all_converged) checks.back().note = "some q_numeric sequences did not pass the Cauchy test";

  // spherical Laplacian
  // The identity as usually written (sum d_b dbar_b - E^2 = Laplacian/4)
  // only holds for n = 1; the commutator of d_b and dbar_b adds (n-1)E.
  double lap_written = 0.0, lap = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t n = trial % 3 + 1;
    const auto P = random_sphere_poly(rng, n, 4, 5);
    const auto rhs = extension_laplacian(P) * 0.25;
    lap_written = std::max(lap_written, sphere_distance(tangential_laplacian(P), rhs, rng));
    lap = std::max(lap, sphere_distance(sphere_laplacian(P), rhs, rng));
  }
  max_check("sum d_b dbar_b + (n-1)E - E^2 = Laplacian/4 on degree-0 extensions", lap, 1e-12);
  body["diagnostics"]["laplacian_without_reeb_term"] = {
      {"max_relative_difference", lap_written},
      {"note", "sum d_b dbar_b - E^2 differs from Laplacian/4 for n >= 2 by (n-1)E"}};

  // heat transform asymptotics: slope of (E S - partial sum) in log |z|
  const RadialSymbol S = RadialSymbol::weight(1, -2.0);
  const auto many = heat_asymptotic(S, 12, gamma);
  const std::vector<double> radii{10.0, 30.0, 100.0};
  std::vector<cplx> exact;
  for (double r : radii) exact.push_back(heat_transform_numeric(S, r, gamma));
  nlohmann::json slopes = nlohmann::json::array();
  for (int N = 1; N <= 3; ++N) {
    const auto layers = heat_asymptotic(S, N, gamma);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const std::vector<cplx> z{radii[i]};
      cplx partial{};
      for (const auto& h : layers) partial += h.evaluate(z);
      lx.push_back(std::log(radii[i]));
      ly.push_back(std::log(std::abs(exact[i] - partial)));
    }
    const double mx = (lx[0] + lx[1] + lx[2]) / 3, my = (ly[0] + ly[1] + ly[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    const double slope = sxy / sxx;
    // Degree of the first omitted layer that does not vanish.
    double next = S.order() - static_cast<double>(N);
    for (int k = N; k < static_cast<int>(many.size()); ++k)
      if (!many[static_cast<std::size_t>(k)].is_zero()) {
        next = S.order() - k;
        break;
      }
    slopes.push_back({{"N", N}, {"slope", slope}, {"first_nonzero_omitted_degree", next},
                      {"stated_target_-1-N", -1.0 - N}});
    auto c = make_check("heat expansion remainder slope, N=" + std::to_string(N), slope, next, 0.3, true);
    c.note = "target: degree of the first nonzero omitted layer";
    checks.push_back(c);
  }
  body["heat_asymptotics"] = slopes;
}

}  // namespace detail

/// Run one experiment. Throws ConfigError for unusable configurations.
inline Report run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.n() == 0) throw ConfigError("n must be >= 1");
  if (!(cfg.gamma() > 0)) throw ConfigError("gamma must be positive");
  nlohmann::json body{{"schema", 1}, {"experiment", cfg.name}};
  nlohmann::json echo = cfg.raw;
  echo["max_dense_dim"] = cfg.max_dense_dim;
  echo["seed"] = cfg.seed;
  body["config"] = echo;
  std::vector<Check> checks;
  if (cfg.name == "model-operator") detail::run_model_operator(cfg, body, checks);
  else if (cfg.name == "toeplitz-trace") detail::run_toeplitz_trace(cfg, body, checks);
  else if (cfg.name == "hankel-trace") detail::run_hankel_trace(cfg, body, checks);
  else if (cfg.name == "commutator-trace") detail::run_commutator_trace(cfg, body, checks);
  else if (cfg.name == "mixed-trace") detail::run_mixed_trace(cfg, body, checks);
  else if (cfg.name == "calculus-check") detail::run_calculus_check(cfg, body, checks);
  else throw ConfigError("unknown experiment \"" + cfg.name + "\"");
  Report rep;
  rep.passed = true;
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : checks) {
    cj.push_back(c.to_json());
    rep.passed = rep.passed && c.passed;
  }
  body["checks"] = cj;
  body["pass"] = rep.passed;
  body["timing_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rep.body = std::move(body);
  return rep;
}

/// Built-in configurations used when no --config is given.
inline nlohmann::json default_config(const std::string& name) {
  auto sym = [](std::size_t n, std::vector<int> p, std::vector<int> q, double t) {
    return nlohmann::json{{"n", n}, {"terms", {{{"c", {1.0, 0.0}}, {"p", p}, {"q", q}, {"t", t}}}}};
  };
  if (name == "model-operator") return {{"n", 1}, {"gamma", 1.0}};
  if (name == "toeplitz-trace") return {{"n", 2}, {"gamma", 1.0}, {"f", sym(2, {1, 0}, {1, 0}, -6)}};
  if (name == "hankel-trace") return {{"n", 1}, {"gamma", 1.0}, {"f", sym(1, {1}, {0}, -1)}, {"g", sym(1, {1}, {0}, -1)}};
  if (name == "commutator-trace")
    return {{"n", 1}, {"gamma", 1.0}, {"f", sym(1, {1}, {0}, -1)}, {"g", sym(1, {0}, {1}, -1)}};
  if (name == "mixed-trace")
    return {{"n", 2},
            {"gamma", 1.0},
            {"mode", "hankel"},
            {"pairs", {{{"f", sym(2, {1, 0}, {0, 0}, -2)}, {"g", sym(2, {1, 0}, {0, 0}, -2)}}}},
            {"h", {sym(2, {1, 0}, {1, 0}, -2)}}};
  if (name == "calculus-check") return {{"gamma", 1.0}};
  throw ConfigError("unknown experiment \"" + name + "\"");
}

}  // namespace fock
