#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "gnls/symbol.hpp"

using namespace gnls;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

}  // namespace

TEST_CASE("power symbol point values") {
  auto s = power_symbol(2, 2.0);
  CHECK(eval_symbol0(s, v2(3.0, 4.0)) == Catch::Approx(25.0));
  Vec g = eval_symbol1(s, v2(3.0, 4.0));
  CHECK(g[0] == Catch::Approx(6.0));
  CHECK(g[1] == Catch::Approx(8.0));
  Mat h = eval_symbol2(s, v2(3.0, 4.0));
  CHECK((h - 2.0 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  auto q = power_symbol(2, 4.0);
  Vec gq = eval_symbol1(q, v2(1.0, 0.0));
  CHECK(gq[0] == Catch::Approx(4.0));
  CHECK(gq[1] == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("order-dispatched evaluation") {
  auto s = power_symbol(2, 2.0);
  Vec xi = v2(3.0, 4.0);
  CHECK(std::get<double>(eval_symbol(s, xi, 0)) == Catch::Approx(25.0));
  CHECK(std::get<Vec>(eval_symbol(s, xi, 1))[1] == Catch::Approx(8.0));
  CHECK(std::get<Mat>(eval_symbol(s, xi, 2))(0, 0) == Catch::Approx(2.0));
  CHECK_THROWS_AS(eval_symbol(s, xi, 3), std::invalid_argument);
}

TEST_CASE("low-dimension regime is flagged, not rejected") {
  auto s = power_symbol(1, 2.0, 4.0, 1.0);  // d = 1 <= sigma = 2
  auto rep = check_order_conditions(s);
  CHECK(rep.passed);
  REQUIRE_FALSE(rep.notes.empty());
  CHECK(rep.notes.front().find("d <= sigma") != std::string::npos);
}

TEST_CASE("non-finite frequency is rejected") {
  auto s = power_symbol(1, 2.0);
  CHECK_THROWS_AS(eval_symbol0(s, v1(std::numeric_limits<double>::infinity())),
                  std::domain_error);
  CHECK_THROWS_AS(eval_symbol1(s, v1(std::nan(""))), std::domain_error);
}

TEST_CASE("derivative closures agree with finite differences") {
  auto s = mixed_symbol(2, 1.0, 1.0);
  auto rng = make_rng(12, 0);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double step = 1e-4;
  for (int trial = 0; trial < 30; ++trial) {
    Vec xi = v2(u(rng), u(rng));
    Vec g = eval_symbol1(s, xi);
    for (int a = 0; a < 2; ++a) {
      Vec e = Vec::Zero(2);
      e[a] = step;
      double fd = (eval_symbol0(s, xi + e) - eval_symbol0(s, xi - e)) / (2 * step);
      CHECK(g[a] == Catch::Approx(fd).epsilon(1e-6).margin(1e-8));
      Vec gd = (eval_symbol1(s, xi + e) - eval_symbol1(s, xi - e)) / (2 * step);
      Mat h = eval_symbol2(s, xi);
      for (int b = 0; b < 2; ++b)
        CHECK(h(a, b) == Catch::Approx(gd[b]).epsilon(1e-6).margin(1e-8));
    }
  }
}

TEST_CASE("power symbol homogeneity") {
  auto rng = make_rng(13, 0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (double sigma : {2.0, 3.0, 4.0}) {
    auto s = power_symbol(2, sigma);
    for (int trial = 0; trial < 20; ++trial) {
      Vec xi = v2(u(rng), u(rng));
      for (double lambda : {2.0, 3.0}) {
        CHECK(eval_symbol0(s, lambda * xi) ==
              Catch::Approx(std::pow(lambda, sigma) * eval_symbol0(s, xi))
                  .margin(1e-12));
      }
    }
  }
}

TEST_CASE("order conditions pass for the pure power") {
  auto s = power_symbol(2, 2.0, 4.0, 1.0);
  auto rep = check_order_conditions(s);
  CHECK(rep.passed);
  CHECK(rep.sample_count > 0);
  for (const auto& [key, ratio] : rep.worst_ratio) {
    INFO(key << " = " << ratio);
    CHECK(ratio <= 1.0 + 1e-3);
  }
}

TEST_CASE("order conditions with the generous constant never report violations") {
  for (double sigma : {2.0, 3.0, 4.0}) {
    double c = std::max(std::pow(sigma, 3.0), std::pow(sigma, -3.0)) * 4.0;
    auto s = power_symbol(2, sigma, c, 1.0);
    ConditionSampling sp;
    sp.r_max = 1024.0;
    auto rep = check_order_conditions(s, sp);
    INFO("sigma = " << sigma);
    CHECK(rep.passed);
  }
}

TEST_CASE("flat directions fail the determinant condition") {
  DispersionSymbol s;
  s.sigma = 2.0;
  s.c_lambda = 4.0;
  s.c_max = 1.0;
  s.dim = 2;
  s.eval0 = [](const Vec& xi) { return xi[0]; };
  s.eval1 = [](const Vec& xi) {
    Vec g = Vec::Zero(2);
    g[0] = 1.0;
    return g;
  };
  s.eval2 = [](const Vec&) { return Mat(Mat::Zero(2, 2)); };
  auto rep = check_order_conditions(s);
  CHECK_FALSE(rep.passed);
  CHECK(rep.worst_ratio.at("det_lower") > 1.0);
  CHECK_FALSE(rep.violating_points.empty());
}

TEST_CASE("cubic perturbation passes with a large enough constant") {
  // m = |xi|^2 + 0.1 |xi|^3 treated as order 3
  DispersionSymbol s;
  s.sigma = 3.0;
  s.c_max = 4.0;
  s.dim = 2;
  s.eval0 = [](const Vec& xi) {
    double r = xi.norm();
    return r * r + 0.1 * r * r * r;
  };
  s.eval1 = [](const Vec& xi) {
    double r = xi.norm();
    return Vec((2.0 + 0.3 * r) * xi);
  };
  s.eval2 = [](const Vec& xi) {
    double r = xi.norm();
    Mat h = (2.0 + 0.3 * r) * Mat::Identity(2, 2);
    if (r > 0.0) h += (0.3 / r) * xi * xi.transpose();
    return h;
  };
  ConditionSampling sp;
  sp.r_max = 512.0;
  s.c_lambda = 1.0;
  auto tight = check_order_conditions(s, sp);
  CHECK_FALSE(tight.passed);  // the quadratic term spoils C = 1
  // sampling determines the smallest passing constant
  double smallest = 0.0;
  for (double c : {1.5, 2.0, 3.0, 4.0, 8.0}) {
    s.c_lambda = c;
    if (check_order_conditions(s, sp).passed) {
      smallest = c;
      break;
    }
  }
  CHECK(smallest > 0.0);
  CHECK(smallest <= 8.0);
}

TEST_CASE("extension restricts to the input bitwise") {
  LocalSymbol1D local;
  local.R = 1.0;
  local.C0 = 2.0;
  local.value = [](double x) { return x * x; };
  local.d1 = [](double x) { return 2.0 * x; };
  local.d2 = [](double) { return 2.0; };
  auto ext = extend_symbol_1d(local, 2.0, 2.0);
  for (double x = 1.0 + 1e-9; x < 2.0; x += 0.07) {
    CHECK(eval_symbol0(ext, v1(x)) == x * x);  // exact, not approximate
  }
}

TEST_CASE("extension is C2 across the junctions") {
  LocalSymbol1D local;
  local.R = 1.0;
  local.C0 = 2.0;
  double sigma = 2.0;
  local.value = [sigma](double x) { return std::pow(x, sigma); };
  local.d1 = [sigma](double x) { return sigma * std::pow(x, sigma - 1.0); };
  local.d2 = [sigma](double x) {
    return sigma * (sigma - 1.0) * std::pow(x, sigma - 2.0);
  };
  auto ext = extend_symbol_1d(local, sigma, 2.0);
  auto probe_jump = [&](double x0, int order) {
    const double h = 1e-6;
    auto eval = [&](double x) {
      if (order == 0) return eval_symbol0(ext, v1(x));
      if (order == 1) return eval_symbol1(ext, v1(x))[0];
      return eval_symbol2(ext, v1(x))(0, 0);
    };
    // one-sided limits by linear extrapolation from each side
    double right = 2.0 * eval(x0 + h) - eval(x0 + 2 * h);
    double left = 2.0 * eval(x0 - h) - eval(x0 - 2 * h);
    return std::abs(right - left);
  };
  for (double junction : {0.0, 1.0, 2.0}) {
    for (int order : {0, 1, 2}) {
      INFO("junction " << junction << " order " << order);
      CHECK(probe_jump(junction, order) < 1e-8);
    }
  }
}

TEST_CASE("extension order ratios are stable under refinement") {
  LocalSymbol1D local;
  local.R = 1.0;
  local.C0 = 2.0;
  double sigma = 2.0;
  local.value = [sigma](double x) { return std::pow(x, sigma); };
  local.d1 = [sigma](double x) { return sigma * std::pow(x, sigma - 1.0); };
  local.d2 = [sigma](double x) {
    return sigma * (sigma - 1.0) * std::pow(x, sigma - 2.0);
  };
  auto ext = extend_symbol_1d(local, sigma, 2.0);
  auto measure = [&](int samples) {
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
      double x = -10.0 + 20.0 * i / samples;
      if (std::abs(x) < 1e-2) continue;
      double ax = std::abs(x);
      double d1 = std::abs(eval_symbol1(ext, v1(x))[0]);
      double d2 = std::abs(eval_symbol2(ext, v1(x))(0, 0));
      worst = std::max({worst, d1 / std::pow(ax, sigma - 1.0),
                        std::pow(ax, sigma - 1.0) / d1,
                        d2 / std::pow(ax, sigma - 2.0),
                        std::pow(ax, sigma - 2.0) / d2});
    }
    return worst;
  };
  double coarse = measure(2001);
  double fine = measure(8009);
  CHECK(std::isfinite(coarse));
  CHECK(std::abs(fine - coarse) / coarse < 0.05);
}

TEST_CASE("negative-derivative symbols extend through the -L reduction") {
  LocalSymbol1D local;
  local.R = 1.0;
  local.C0 = 2.0;
  local.value = [](double x) { return -x * x; };
  local.d1 = [](double x) { return -2.0 * x; };
  local.d2 = [](double) { return -2.0; };
  auto ext = extend_symbol_1d(local, 2.0, 2.0);
  CHECK(eval_symbol0(ext, v1(1.5)) == -2.25);
  CHECK(eval_symbol0(ext, v1(4.0)) < 0.0);  // extension follows the flip
}

TEST_CASE("mixed-sign derivatives are rejected") {
  LocalSymbol1D local;
  local.R = 1.0;
  local.C0 = 2.0;
  local.value = [](double x) { return 2.0 * x - 0.25 * x * x; };
  local.d1 = [](double x) { return 2.0 - 0.5 * x; };
  local.d2 = [](double) { return -0.5; };
  CHECK_THROWS_AS(extend_symbol_1d(local, 2.0, 2.0), std::domain_error);
}
