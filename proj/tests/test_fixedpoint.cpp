#include <catch2/catch_amalgamated.hpp>

#include "gnls/fixedpoint.hpp"
#include "support/oracles.hpp"

using namespace gnls;

namespace {

struct SolverFixture {
  TorusGrid g{1, 2.0, 64};
  DispersionSymbol sym = power_symbol(1, 2.0);
  SymbolTable table = make_symbol_table(g, sym);

  LatticeField band_data(std::uint64_t seed, double l2) {
    auto rng = make_rng(seed, 0);
    LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
      return std::abs(xi[0]) <= 2.0;
    });
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
      double xi = g.freq(static_cast<int>(i));
      f.samples[i] *= std::exp(-xi * xi);
    }
    return scale_to_l2(f, l2);
  }
};

}  // namespace

TEST_CASE("phi_z pointwise identities") {
  TorusGrid g(1, 1.0, 16);
  TimeGrid tg(0.0, 1.0, 4);
  auto rng = make_rng(31, 0);
  SpaceTimeField z(tg, g, Register::Space), v(tg, g, Register::Space);
  for (int i = 0; i < tg.count; ++i) {
    for (auto& c : z.at(i).samples) c = draw_complex_gaussian(rng);
    for (auto& c : v.at(i).samples) c = draw_complex_gaussian(rng);
  }

  SECTION("v = 0 gives zero") {
    SpaceTimeField zero(tg, g, Register::Space);
    SpaceTimeField out = phi_z(z, zero);
    CHECK(l2l2_norm(out) == 0.0);
  }

  SECTION("z = 0 gives the plain cubic") {
    SpaceTimeField zero(tg, g, Register::Space);
    SpaceTimeField out = phi_z(zero, v);
    SpaceTimeField direct = cubic_product(v, v, v);
    CHECK(l2l2_distance(out, direct) < 1e-14);
  }

  SECTION("seven-term expansion matches the closed form") {
    SpaceTimeField lhs = phi_z(z, v);
    SpaceTimeField rhs(tg, g, Register::Space);
    for (int i = 0; i < tg.count; ++i) {
      for (std::size_t m = 0; m < rhs.at(i).samples.size(); ++m) {
        Complex zz = z.at(i).samples[m], vv = v.at(i).samples[m];
        Complex acc(0.0, 0.0);
        const Complex* pick[2] = {&zz, &vv};
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) {
              if (a == 0 && b == 0 && c == 0) continue;
              acc += (*pick[a]) * std::conj(*pick[b]) * (*pick[c]);
            }
        rhs.at(i).samples[m] = acc;
      }
    }
    double err = 0.0;
    for (int i = 0; i < tg.count; ++i)
      for (std::size_t m = 0; m < lhs.at(i).samples.size(); ++m)
        err = std::max(err,
                       std::abs(lhs.at(i).samples[m] - rhs.at(i).samples[m]));
    CHECK(err < 1e-12);
  }

  SECTION("difference of identical arguments vanishes") {
    SpaceTimeField a = phi_z(z, v);
    SpaceTimeField b = phi_z(z, v);
    CHECK(l2l2_distance(a, b) == 0.0);
  }
}

TEST_CASE_METHOD(SolverFixture, "trivial fixed point converges in one step") {
  TimeGrid tg(0.0, 0.1, 17);
  LatticeField zero_v0(g, Register::Frequency);
  SpaceTimeField zero(tg, g, Register::Frequency);
  auto res = iterate_K(zero_v0, zero, zero, table, 0.0, Sign::Minus);
  CHECK(res.converged);
  CHECK(res.iterations == 1);
  CHECK(l2l2_norm(res.v) == 0.0);
}

TEST_CASE_METHOD(SolverFixture, "small data contracts and solves") {
  TimeGrid tg(0.0, 0.1, 129);
  LatticeField v0 = band_data(41, 1e-2);
  SpaceTimeField zero(tg, g, Register::Frequency);
  auto res = iterate_K(v0, zero, zero, table, 0.0, Sign::Minus);
  REQUIRE(res.converged);
  for (double r : res.history.ratios) CHECK(r < 0.5);
  CHECK(res.final_residual < 1e-6);

  SECTION("idempotence at the fixed point") {
    SpaceTimeField forcing = add(phi_z(zero, res.v), zero);
    SpaceTimeField again = duhamel(v0, forcing, table, 0.0, Sign::Minus);
    double scale = std::max(l2l2_norm(res.v), 1e-300);
    CHECK(l2l2_distance(again, res.v) / scale < 1e-6);
  }

  SECTION("split-step oracle agreement") {
    LatticeField u_final = to_space(res.v.at(tg.count - 1));
    LatticeField oracle =
        oracles::split_step_solve(v0, table, -1.0, 0.1, 4096);
    double rel = l2_distance(u_final, oracle) / l2_norm(oracle);
    CHECK(rel < 1e-3);
  }
}

TEST_CASE_METHOD(SolverFixture, "halving the window keeps convergence") {
  // monotone trust region on a fixed seed suite
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    LatticeField v0 = band_data(seed, 5e-2);
    for (double T : {0.1, 0.05}) {
      TimeGrid tg(0.0, T, 65);
      SpaceTimeField zero(tg, g, Register::Frequency);
      auto res = iterate_K(v0, zero, zero, table, 0.0, Sign::Minus);
      INFO("seed " << seed << " T " << T);
      CHECK(res.converged);
    }
  }
}

TEST_CASE_METHOD(SolverFixture, "divergence is reported, not thrown") {
  TimeGrid tg(0.0, 2.0, 65);
  LatticeField v0 = band_data(47, 40.0);  // drastically supercritical data
  SpaceTimeField zero(tg, g, Register::Frequency);
  auto res = iterate_K(v0, zero, zero, table, 0.0, Sign::Minus, 30);
  CHECK_FALSE(res.converged);
  CHECK(res.history.increments.size() >= 2);
}

TEST_CASE_METHOD(SolverFixture, "contraction window formula") {
  double t = contraction_time_bound(1.0, 0.1, 0.1, 0.1);
  CHECK(t > 0.0);
  CHECK(t < 1e-29);  // the literal 2^{-100} prefactor
  double loose = contraction_time_bound(1.0, 0.1, 0.1, 0.1, 1.0, 1.0, 0);
  CHECK(loose > 1e-3);
}

TEST_CASE_METHOD(SolverFixture, "degenerate-law solve matches the unsplit oracle") {
  // g == 1, M = 1, tiny data: u from the split solver equals the plain
  // unsplit Picard fixed point of the full Duhamel map
  TimeGrid tg(0.0, 0.1, 129);
  LatticeField f = band_data(53, 1e-2);
  RandomDraw ones{9, RandomLaw::Ones};
  auto res = solve_u(f, ones, 1, sym, tg, Sign::Minus);
  REQUIRE(res.converged);

  // unsplit oracle: u_{k+1} = e^{itL} f - i int e^{i(t-s)L} |u_k|^2 u_k
  SpaceTimeField u(tg, g, Register::Frequency);
  for (int i = 0; i < tg.count; ++i) u.at(i) = propagate(f, table, tg.time(i));
  for (int it = 0; it < 40; ++it) {
    SpaceTimeField cubic = cubic_product(u, u, u);
    SpaceTimeField next = duhamel(f, cubic, table, 0.0, Sign::Minus);
    double inc = l2l2_distance(next, u);
    u = next;
    if (inc < 1e-14) break;
  }
  CHECK(l2l2_distance(res.u, u) / l2l2_norm(u) < 1e-6);
}

TEST_CASE_METHOD(SolverFixture, "randomized solve: residual and oracle") {
  TimeGrid tg(0.0, 0.1, 257);
  LatticeField f = band_data(59, 1e-2);
  RandomDraw draw{31415, RandomLaw::ComplexGaussian};
  LatticeField fo = randomize(to_frequency(f), draw);
  auto res = solve_u(fo, 3, sym, tg, Sign::Minus);
  REQUIRE(res.converged);
  CHECK(res.diagnostics.worst_ratio < 0.5);
  CHECK(res.diagnostics.full_equation_residual < 1e-5);
  LatticeField oracle = oracles::split_step_solve(fo, table, -1.0, 0.1, 4096);
  double rel = l2_distance(to_space(res.u.at(tg.count - 1)), oracle) /
               l2_norm(oracle);
  CHECK(rel < 1e-3);
}

TEST_CASE_METHOD(SolverFixture, "order-one data in both signs vs split-step") {
  // at unit mass the cubic term is O(1), so the oracle comparison is
  // decisive for the nonlinearity algebra, not just the linear flow
  TimeGrid tg(0.0, 0.1, 257);
  auto rng = make_rng(41, 0);
  LatticeField v0 = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 2.0;
  });
  v0 = scale_to_l2(v0, 1.0);
  SpaceTimeField zero(tg, g, Register::Frequency);
  for (Sign sign : {Sign::Minus, Sign::Plus}) {
    auto res = iterate_K(v0, zero, zero, table, 0.0, sign, 80);
    REQUIRE(res.converged);
    LatticeField fin = to_space(res.v.at(tg.count - 1));
    LatticeField oracle =
        oracles::split_step_solve(v0, table, sign_value(sign), 0.1, 16384);
    double rel = l2_distance(fin, oracle) / l2_norm(oracle);
    INFO("sign " << static_cast<int>(sign));
    CHECK(rel < 1e-6);
  }
}
