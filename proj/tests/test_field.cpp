#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gnls/field.hpp"

using namespace gnls;

namespace {

LatticeField random_field(const TorusGrid& g, Register reg, std::uint64_t seed) {
  auto rng = make_rng(seed, 0);
  LatticeField f(g, reg);
  for (auto& c : f.samples) c = draw_complex_gaussian(rng);
  return f;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(TorusGrid(2, 1.0, 24), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(0, 1.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(TorusGrid(2, -1.0, 16), std::invalid_argument);
  TorusGrid g(2, 2.0, 32);
  CHECK(g.size() == 1024);
  CHECK(g.nyquist() == 8.0);
  CHECK(g.mode(31) == -1);
}

TEST_CASE("delta transforms to a constant spectrum") {
  TorusGrid g(1, 1.0, 32);
  LatticeField f(g, Register::Space);
  f.samples[0] = Complex(1.0, 0.0);
  LatticeField fhat = to_frequency(f);
  for (const auto& c : fhat.samples)
    CHECK(std::abs(c - fhat.samples[0]) < 1e-14);
}

TEST_CASE("transform round trip and Plancherel") {
  for (int d : {1, 2}) {
    TorusGrid g(d, 2.0, d == 1 ? 64 : 16);
    LatticeField f = random_field(g, Register::Space, 5 + d);
    LatticeField back = to_space(to_frequency(f));
    CHECK(l2_distance(f, back) / l2_norm(f) < 1e-12);
    CHECK(l2_norm(f) == Catch::Approx(l2_norm(to_frequency(f))).epsilon(1e-12));
  }
}

TEST_CASE("transform linearity") {
  TorusGrid g(1, 1.0, 64);
  LatticeField f = random_field(g, Register::Space, 10);
  LatticeField h = random_field(g, Register::Space, 11);
  Complex alpha(0.7, -1.3);
  LatticeField combo(g, Register::Space);
  for (std::size_t i = 0; i < combo.samples.size(); ++i)
    combo.samples[i] = alpha * f.samples[i] + h.samples[i];
  LatticeField lhs = to_frequency(combo);
  LatticeField fh = to_frequency(f);
  LatticeField hh = to_frequency(h);
  double err = 0.0;
  for (std::size_t i = 0; i < lhs.samples.size(); ++i)
    err = std::max(err,
                   std::abs(lhs.samples[i] - alpha * fh.samples[i] - hh.samples[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("unit window is an exact partition of unity") {
  for (double x : {-3.7, -1.0, -0.25, 0.0, 0.3, 0.5, 1.9, 2.0, 5.125}) {
    double acc = 0.0;
    for (long j = -8; j <= 8; ++j) acc += unit_window_1d(x - j);
    CHECK(acc == Catch::Approx(1.0).margin(1e-12));
  }
  // support within [-1, 1]
  CHECK(unit_window_1d(1.0) == 0.0);
  CHECK(unit_window_1d(-1.000001) == 0.0);
  CHECK(unit_window_1d(0.0) == 1.0);
}

TEST_CASE("unit projections sum back to the field") {
  TorusGrid g(2, 2.0, 32);  // Nyquist 8
  auto rng = make_rng(3, 1);
  LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 5.0 && std::abs(xi[1]) <= 5.0;
  });
  LatticeField sum(g, Register::Frequency);
  for (long k0 = -6; k0 <= 6; ++k0)
    for (long k1 = -6; k1 <= 6; ++k1) {
      LatticeField q = unit_projection(f, {k0, k1});
      for (std::size_t i = 0; i < sum.samples.size(); ++i)
        sum.samples[i] += q.samples[i];
    }
  CHECK(l2_distance(sum, f) < 1e-10 * std::max(1.0, l2_norm(f)));
}

TEST_CASE("unit projection support and range error") {
  TorusGrid g(1, 2.0, 64);  // Nyquist 16
  auto rng = make_rng(4, 1);
  LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 10.0;
  });
  LatticeField q = unit_projection(f, {3});
  for (std::size_t i = 0; i < q.samples.size(); ++i) {
    int ix = static_cast<int>(i);
    double xi = g.freq(ix);
    if (std::abs(xi - 3.0) >= 1.0) CHECK(q.samples[i] == Complex(0.0, 0.0));
  }
  CHECK_THROWS_AS(unit_projection(f, {40}), std::out_of_range);
}

TEST_CASE("unit-scale Bernstein constant is k-independent") {
  TorusGrid g(1, 2.0, 128);
  std::vector<double> constants;
  for (long k : {0L, 2L, 5L, 11L, -7L}) {
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      auto rng = make_rng(100 + rep, k + 50);
      LatticeField f = random_spectrum(g, rng, [&](const std::vector<double>& xi) {
        return std::abs(xi[0] - k) <= 1.5;
      });
      LatticeField q = to_space(unit_projection(f, {k}));
      double n2 = lp_norm(q, 2.0);
      double n6 = lp_norm(q, 6.0);
      if (n2 > 0.0) worst = std::max(worst, n6 / n2);
    }
    constants.push_back(worst);
  }
  // C independent of k: spread within a factor 2 and everything bounded
  double lo = *std::min_element(constants.begin(), constants.end());
  double hi = *std::max_element(constants.begin(), constants.end());
  CHECK(hi < 4.0);
  CHECK(hi / lo < 2.0);
}

TEST_CASE("randomization with the degenerate law is the identity") {
  TorusGrid g(2, 2.0, 16);
  auto rng = make_rng(6, 2);
  LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return xi[0] * xi[0] + xi[1] * xi[1] <= 9.0;
  });
  RandomDraw draw{42, RandomLaw::Ones};
  LatticeField out = randomize(f, draw);
  CHECK(l2_distance(out, f) < 1e-10 * std::max(1.0, l2_norm(f)));
}

TEST_CASE("randomize is real-linear in the profile") {
  TorusGrid g(1, 2.0, 64);
  auto rng = make_rng(8, 3);
  LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 8.0;
  });
  LatticeField h = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 8.0;
  });
  RandomDraw draw{1234, RandomLaw::ComplexGaussian};
  double alpha = -1.7;
  LatticeField combo = f;
  for (std::size_t i = 0; i < combo.samples.size(); ++i)
    combo.samples[i] = alpha * f.samples[i] + h.samples[i];
  LatticeField lhs = randomize(combo, draw);
  LatticeField rf = randomize(f, draw);
  LatticeField rh = randomize(h, draw);
  double err = 0.0;
  for (std::size_t i = 0; i < lhs.samples.size(); ++i)
    err = std::max(err, std::abs(lhs.samples[i] - alpha * rf.samples[i] -
                                 rh.samples[i]));
  CHECK(err < 1e-12);
}

TEST_CASE("randomized mass matches the projection sum") {
  TorusGrid g(1, 2.0, 64);
  auto rng = make_rng(9, 4);
  LatticeField f = random_spectrum(g, rng, [](const std::vector<double>& xi) {
    return std::abs(xi[0]) <= 6.0;
  });
  // direct sum over cells of ||Q_k f||_2^2
  double direct = 0.0;
  for (long k = -8; k <= 8; ++k) {
    double n = l2_norm(unit_projection(f, {k}));
    direct += n * n;
  }
  const int draws = 200;
  double mean = 0.0, var = 0.0;
  std::vector<double> vals;
  for (int w = 0; w < draws; ++w) {
    RandomDraw draw{split_seed(777, w), RandomLaw::ComplexGaussian};
    double n = l2_norm(randomize(f, draw));
    vals.push_back(n * n);
    mean += n * n;
  }
  mean /= draws;
  for (double v : vals) var += (v - mean) * (v - mean);
  var /= (draws - 1);
  double stderr_mean = std::sqrt(var / draws);
  CHECK(std::abs(mean - direct) <= 3.0 * stderr_mean + 1e-12);
}

TEST_CASE("randomization keeps high-moment ratios bounded") {
  // high-frequency bump with large ||f||_4 / ||f||_2
  TorusGrid g(1, 2.0, 128);
  LatticeField f(g, Register::Frequency);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    double xi = g.freq(static_cast<int>(i));
    if (std::abs(xi - 12.0) <= 3.0) f.samples[i] = Complex(1.0, 0.0);
  }
  double base = l2_norm(f);
  const int draws = 200;
  double p4 = 0.0;
  for (int w = 0; w < draws; ++w) {
    RandomDraw draw{split_seed(31337, w), RandomLaw::ComplexGaussian};
    LatticeField sp = to_space(randomize(f, draw));
    p4 += std::pow(lp_norm(sp, 4.0), 4.0);
  }
  double ratio = std::pow(p4 / draws, 0.25) / base;
  CHECK(ratio < 3.0);  // stays of the order of ||f||_2
}

TEST_CASE("draw statistics") {
  // empirical mean over cells
  RandomDraw draw{97, RandomLaw::ComplexGaussian};
  Complex mean(0.0, 0.0);
  double re2 = 0.0, im2 = 0.0, cross = 0.0;
  const int count = 10000;
  for (int k = 0; k < count; ++k) {
    Complex gk = draw.coefficient({static_cast<long>(k) - count / 2});
    mean += gk;
    re2 += gk.real() * gk.real();
    im2 += gk.imag() * gk.imag();
    cross += gk.real() * gk.imag();
  }
  mean /= static_cast<double>(count);
  CHECK(std::abs(mean) < 5.0 / std::sqrt(static_cast<double>(count)));
  CHECK(re2 / count == Catch::Approx(0.5).epsilon(0.05));
  CHECK(im2 / count == Catch::Approx(0.5).epsilon(0.05));
  CHECK(std::abs(cross / count) < 0.05);

  RandomDraw rad{98, RandomLaw::RademacherPair};
  for (int k = 0; k < 100; ++k) {
    Complex gk = rad.coefficient({static_cast<long>(k)});
    CHECK(std::abs(std::abs(gk) - 1.0) < 1e-12);
  }
}

TEST_CASE("field file round trip is byte-identical") {
  TorusGrid g(2, 2.0, 16);
  LatticeField f = random_field(g, Register::Frequency, 55);
  auto dir = std::filesystem::temp_directory_path() / "gnls_field_io";
  std::filesystem::create_directories(dir);
  auto path = (dir / "probe.fld").string();
  save_field(f, path);
  LatticeField back = load_field(path);
  REQUIRE(back.grid == f.grid);
  REQUIRE(back.reg == f.reg);
  for (std::size_t i = 0; i < f.samples.size(); ++i)
    CHECK(std::memcmp(&back.samples[i], &f.samples[i], sizeof(Complex)) == 0);
  // second save produces an identical payload
  auto path2 = (dir / "probe2.fld").string();
  save_field(back, path2);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), {});
  std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("field loader rejects malformed headers") {
  auto dir = std::filesystem::temp_directory_path() / "gnls_field_io";
  std::filesystem::create_directories(dir);
  auto path = (dir / "bad.fld").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTAFIELDFILE___payload";
  }
  CHECK_THROWS_AS(load_field(path), std::runtime_error);
  // flip the endianness declaration of a valid file
  TorusGrid g(1, 1.0, 16);
  LatticeField f(g, Register::Space);
  auto path2 = (dir / "endian.fld").string();
  save_field(f, path2);
  {
    std::fstream io(path2, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(9);  // endian byte
    char big = 0;
    io.write(&big, 1);
  }
  CHECK_THROWS_AS(load_field(path2), std::runtime_error);
}
