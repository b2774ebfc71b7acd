#include <catch2/catch_amalgamated.hpp>

#include "gnls/evolution.hpp"

using namespace gnls;

namespace {

LatticeField band_limited(const TorusGrid& g, double band, std::uint64_t seed) {
  auto rng = make_rng(seed, 0);
  return random_spectrum(g, rng, [band](const std::vector<double>& xi) {
    double r2 = 0.0;
    for (double x : xi) r2 += x * x;
    return r2 <= band * band;
  });
}

}  // namespace

TEST_CASE("propagator basics") {
  TorusGrid g(1, 2.0, 64);
  auto sym = power_symbol(1, 2.0);
  auto table = make_symbol_table(g, sym);
  LatticeField f = to_space(band_limited(g, 6.0, 3));

  SECTION("t = 0 is the identity") {
    LatticeField fhat = to_frequency(f);
    LatticeField p = propagate(fhat, table, 0.0);
    CHECK(l2_distance(p, fhat) == 0.0);  // exact in the frequency register
    CHECK(l2_distance(propagate(f, table, 0.0), f) < 1e-13 * l2_norm(f));
  }

  SECTION("unitarity") {
    for (double t : {0.1, 0.5, -2.0})
      CHECK(l2_norm(propagate(f, table, t)) ==
            Catch::Approx(l2_norm(f)).epsilon(1e-12));
  }

  SECTION("group law") {
    LatticeField two_step = propagate(propagate(f, table, 0.3), table, 0.45);
    LatticeField one_step = propagate(f, table, 0.75);
    CHECK(l2_distance(two_step, one_step) < 1e-10 * l2_norm(f));
  }

  SECTION("time reversal") {
    LatticeField back = propagate(propagate(f, table, 1.7), table, -1.7);
    CHECK(l2_distance(back, f) < 1e-12 * std::max(1.0, l2_norm(f)));
  }
}

TEST_CASE("duhamel with zero forcing is the free flow") {
  TorusGrid g(1, 2.0, 64);
  auto sym = power_symbol(1, 2.0);
  auto table = make_symbol_table(g, sym);
  LatticeField v0 = to_space(band_limited(g, 4.0, 5));
  TimeGrid tg(0.0, 1.0, 33);
  SpaceTimeField h(tg, g, Register::Frequency);
  SpaceTimeField v = duhamel(v0, h, table, 0.0, Sign::Minus);
  for (int i = 0; i < tg.count; ++i) {
    LatticeField expect = propagate(v0, table, tg.time(i));
    CHECK(l2_distance(v.at(i), expect) < 1e-12 * std::max(1.0, l2_norm(v0)));
  }
  // L2 conservation along the free flow
  for (int i = 0; i < tg.count; ++i)
    CHECK(l2_norm(v.at(i)) == Catch::Approx(l2_norm(v0)).epsilon(1e-12));
}

TEST_CASE("duhamel output starts at the initial datum") {
  TorusGrid g(1, 1.0, 32);
  auto sym = power_symbol(1, 2.0);
  auto table = make_symbol_table(g, sym);
  LatticeField v0 = band_limited(g, 3.0, 7);  // frequency register
  TimeGrid tg(0.0, 0.5, 17);
  SpaceTimeField h(tg, g, Register::Space);
  auto rng = make_rng(7, 1);
  for (int i = 0; i < tg.count; ++i)
    for (auto& c : h.at(i).samples) c = draw_complex_gaussian(rng);
  SpaceTimeField v = duhamel(v0, h, table, 0.0, Sign::Minus);
  CHECK(l2_distance(v.at(0), v0) == 0.0);
}

TEST_CASE("constant forcing with a flat symbol integrates exactly") {
  TorusGrid g(1, 1.0, 16);
  DispersionSymbol zero_sym;
  zero_sym.dim = 1;
  zero_sym.sigma = 2.0;
  zero_sym.eval0 = [](const Vec&) { return 0.0; };
  zero_sym.eval1 = [](const Vec&) { return Vec(Vec::Zero(1)); };
  zero_sym.eval2 = [](const Vec&) { return Mat(Mat::Zero(1, 1)); };
  auto table = make_symbol_table(g, zero_sym);
  LatticeField v0(g, Register::Space);
  TimeGrid tg(0.0, 1.0, 9);
  SpaceTimeField h(tg, g, Register::Space);
  Complex c0(0.3, -0.8);
  for (int i = 0; i < tg.count; ++i)
    for (auto& c : h.at(i).samples) c = c0;
  for (Sign sign : {Sign::Minus, Sign::Plus}) {
    SpaceTimeField v = duhamel(v0, h, table, 0.0, sign);
    for (int i = 0; i < tg.count; ++i) {
      Complex expect = Complex(0.0, -sign_value(sign)) * c0 * tg.time(i);
      for (const auto& c : to_space(v.at(i)).samples)
        CHECK(std::abs(c - expect) < 1e-13);
    }
  }
}

TEST_CASE("duhamel residual converges at second order") {
  TorusGrid g(1, 2.0, 64);
  auto sym = power_symbol(1, 2.0);
  auto table = make_symbol_table(g, sym);
  LatticeField v0 = to_space(band_limited(g, 2.0, 11));
  LatticeField hbase = to_space(band_limited(g, 2.0, 13));

  auto residual_at = [&](int steps) {
    TimeGrid tg(0.0, 1.0, steps + 1);
    SpaceTimeField h(tg, g, Register::Space);
    for (int i = 0; i < tg.count; ++i) {
      double t = tg.time(i);
      // smooth oscillatory forcing
      for (std::size_t m = 0; m < hbase.samples.size(); ++m)
        h.at(i).samples[m] = hbase.samples[m] * std::polar(1.0, 2.0 * t) *
                             (1.0 + 0.5 * std::sin(3.0 * t));
    }
    SpaceTimeField v = duhamel(v0, h, table, 0.0, Sign::Plus);
    return residual_nonhomogeneous(v, h, table);
  };

  double r256 = residual_at(256);
  double r512 = residual_at(512);
  CHECK(r256 < 1e-3);
  CHECK(r256 / r512 == Catch::Approx(4.0).margin(0.5));
}

TEST_CASE("residual of the zero field vanishes") {
  TorusGrid g(1, 1.0, 16);
  auto table = make_symbol_table(g, power_symbol(1, 2.0));
  TimeGrid tg(0.0, 1.0, 9);
  SpaceTimeField v(tg, g, Register::Space);
  SpaceTimeField h(tg, g, Register::Space);
  CHECK(residual_nonhomogeneous(v, h, table) == 0.0);
}

TEST_CASE("a sign mistake shows up as an O(1) residual") {
  TorusGrid g(1, 2.0, 64);
  auto sym = power_symbol(1, 2.0);
  auto table = make_symbol_table(g, sym);
  LatticeField v0 = to_space(band_limited(g, 2.0, 17));
  TimeGrid tg(0.0, 1.0, 257);
  SpaceTimeField h(tg, g, Register::Space);
  LatticeField hbase = to_space(band_limited(g, 2.0, 19));
  for (int i = 0; i < tg.count; ++i)
    for (std::size_t m = 0; m < hbase.samples.size(); ++m)
      h.at(i).samples[m] = hbase.samples[m] * std::polar(1.0, tg.time(i));
  SpaceTimeField right = duhamel(v0, h, table, 0.0, Sign::Plus);
  SpaceTimeField wrong = duhamel(v0, h, table, 0.0, Sign::Minus);
  double ok = residual_nonhomogeneous(right, h, table);
  double bad = residual_nonhomogeneous(wrong, h, table);
  CHECK(ok < 1e-3);
  CHECK(bad > 0.5);
}

TEST_CASE("time grids must match") {
  TorusGrid g(1, 1.0, 16);
  auto table = make_symbol_table(g, power_symbol(1, 2.0));
  LatticeField v0(g, Register::Space);
  TimeGrid tg(0.0, 1.0, 9);
  SpaceTimeField h(tg, g, Register::Space);
  CHECK_THROWS_AS(duhamel(v0, h, table, 0.3, Sign::Minus),
                  std::invalid_argument);  // t0 off the grid
}
