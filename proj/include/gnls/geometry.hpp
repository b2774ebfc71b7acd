#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnls/field.hpp"
#include "gnls/random.hpp"
#include "gnls/symbol.hpp"

namespace gnls {

// ---------------------------------------------------------------------------
// Direction sets
// ---------------------------------------------------------------------------

/// Finite eps-separated, eps-covering set of unit vectors. Built greedily
/// from a deterministic quasi-uniform candidate grid so the construction is
/// reproducible; the candidate mesh is recorded because covering statements
/// on the sphere hold up to that resolution.
struct DirectionSet {
  int dim = 1;
  double eps_theta = 0.5;
  double candidate_mesh = 0.0;
  std::vector<Vec> directions;
};

namespace detail {

inline std::vector<Vec> sphere_candidates(int d, double eps,
                                          std::uint64_t seed) {
  std::vector<Vec> out;
  if (d == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    out = {p, m};
  } else if (d == 2) {
    int n = std::max(1 << 16, static_cast<int>(512.0 * 2.0 * M_PI / eps));
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      double a = 2.0 * M_PI * i / n;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
  } else if (d == 3) {
    int n = std::max(1 << 15, static_cast<int>(2000.0 / (eps * eps)));
    double golden = M_PI * (3.0 - std::sqrt(5.0));
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      double z = 1.0 - 2.0 * (i + 0.5) / n;
      double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      double a = golden * i;
      Vec v(3);
      v << rho * std::cos(a), rho * std::sin(a), z;
      out.push_back(v);
    }
  } else {
    auto rng = make_rng(seed, 17);
    std::normal_distribution<double> n01(0.0, 1.0);
    int n = static_cast<int>(4000.0 * std::pow(2.0 / eps, d - 1));
    n = std::min(n, 1 << 20);
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      Vec v(d);
      for (int a = 0; a < d; ++a) v[a] = n01(rng);
      double r = v.norm();
      if (r > 0.0) out.push_back(v / r);
    }
  }
  return out;
}

}  // namespace detail

inline DirectionSet build_direction_set(int d, double eps_theta,
                                        std::uint64_t seed = 7) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  if (!(eps_theta > 0.0 && eps_theta <= 1.0))
    throw std::invalid_argument("eps_theta must lie in (0, 1]");
  DirectionSet set;
  set.dim = d;
  set.eps_theta = eps_theta;
  auto cand = detail::sphere_candidates(d, eps_theta, seed);
  if (d == 1) {
    set.directions = cand;
    set.candidate_mesh = 0.0;
    return set;
  }
  set.candidate_mesh = d == 2 ? 2.0 * M_PI / cand.size() : 0.0;
  for (const auto& c : cand) {
    bool ok = true;
    for (const auto& g : set.directions) {
      if ((c - g).norm() < eps_theta) {
        ok = false;
        break;
      }
    }
    if (ok) set.directions.push_back(c);
  }
  return set;
}

/// Min pairwise distance and max covering radius over a probe set.
struct DirectionSetCheck {
  double min_separation = 0.0;
  double max_covering = 0.0;
};

inline DirectionSetCheck check_direction_set(const DirectionSet& set,
                                             int probes = 10000,
                                             std::uint64_t seed = 11) {
  DirectionSetCheck chk;
  chk.min_separation = std::numeric_limits<double>::infinity();
  const auto& dirs = set.directions;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j)
      chk.min_separation =
          std::min(chk.min_separation, (dirs[i] - dirs[j]).norm());
  if (dirs.size() < 2) chk.min_separation = 2.0;
  auto rng = make_rng(seed, 3);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int p = 0; p < probes; ++p) {
    Vec v(set.dim);
    if (set.dim == 1) {
      v[0] = p % 2 == 0 ? 1.0 : -1.0;
    } else if (set.dim == 2) {
      double a = 2.0 * M_PI * p / probes;
      v << std::cos(a), std::sin(a);
    } else {
      for (int a = 0; a < set.dim; ++a) v[a] = n01(rng);
      if (v.norm() == 0.0) continue;
      v /= v.norm();
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : dirs) best = std::min(best, (v - g).norm());
    chk.max_covering = std::max(chk.max_covering, best);
  }
  return chk;
}

// ---------------------------------------------------------------------------
// Sectors
// ---------------------------------------------------------------------------

/// One sector theta = theta_{N, e}: for N > 1 the dyadic-annulus-by-cap
///   { 1 <= |xi|/N <= (1+eps)^2, |xi/|xi| - e| <= 2 eps },
/// for N = 1 the ball |xi| <= 1+eps. The scale exponent n gives
/// N = (1+eps)^n.
struct Sector {
  int scale_exp = 0;     // 0 means N = 1
  double scale = 1.0;    // N
  int dir_index = 0;     // index into the atlas direction set
  Vec e_hat;
  Vec center;            // N e for N > 1, zero for N = 1
};

/// The finite sector cover of the ball of radius n_max together with the
/// smooth cutoff profile chi used for the partition of unity.
struct SectorAtlas {
  DirectionSet dirs;
  double n_max = 64.0;
  std::vector<Sector> sectors;

  const Sector& sector(std::size_t i) const { return sectors[i]; }
  std::size_t size() const { return sectors.size(); }

  /// Number of (N, e) labels sharing one stored sector: the N = 1 ball is
  /// listed once but Definition-wise carries one label per direction.
  int multiplicity(const Sector& s) const {
    return s.scale_exp == 0 ? static_cast<int>(dirs.directions.size()) : 1;
  }
};

namespace detail {

/// Smoothstep on [0, 1] built from the standard exp(-1/x) bump, tabulated
/// once with Catmull-Rom interpolation between nodes.
class SmoothStepTable {
 public:
  static const SmoothStepTable& instance() {
    static SmoothStepTable table;
    return table;
  }
  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double t = x * (kSize - 1);
    long i = static_cast<long>(t);
    double fr = t - i;
    double p0 = node(i - 1), p1 = node(i), p2 = node(i + 1), p3 = node(i + 2);
    double a = 2.0 * p1;
    double b = p2 - p0;
    double c = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
    double dd = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
    double v = 0.5 * (a + b * fr + c * fr * fr + dd * fr * fr * fr);
    return std::clamp(v, 0.0, 1.0);
  }

 private:
  static constexpr int kSize = 4097;
  std::vector<double> values_;
  SmoothStepTable() : values_(kSize) {
    auto bump = [](double t) {
      return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
    };
    for (int i = 0; i < kSize; ++i) {
      double x = static_cast<double>(i) / (kSize - 1);
      double num = bump(x);
      values_[i] = num > 0.0 ? num / (num + bump(1.0 - x)) : 0.0;
    }
  }
  double node(long i) const {
    if (i < 0) return 0.0;
    if (i >= kSize) return 1.0;
    return values_[i];
  }
};

}  // namespace detail

/// The 1D cutoff profile: non-increasing, 1 on [0,1], 0 on [1+eps, inf),
/// >= 1/2 on [0, sqrt(1+eps)].
inline double chi_profile(double u, double eps) {
  if (u <= 1.0) return 1.0;
  if (u >= 1.0 + eps) return 0.0;
  return 1.0 - detail::SmoothStepTable::instance()((u - 1.0) / eps);
}

inline SectorAtlas build_atlas(int d, double eps_theta, double n_max,
                               std::uint64_t seed = 7) {
  if (n_max < 1.0) throw std::invalid_argument("n_max must be >= 1");
  SectorAtlas atlas;
  atlas.dirs = build_direction_set(d, eps_theta, seed);
  atlas.n_max = n_max;
  Sector ball;
  ball.scale_exp = 0;
  ball.scale = 1.0;
  ball.dir_index = 0;
  ball.e_hat = atlas.dirs.directions.front();
  ball.center = Vec::Zero(d);
  atlas.sectors.push_back(ball);
  for (int n = 1;; ++n) {
    double N = std::pow(1.0 + eps_theta, n);
    if (N > n_max) break;
    for (int e = 0; e < static_cast<int>(atlas.dirs.directions.size()); ++e) {
      Sector s;
      s.scale_exp = n;
      s.scale = N;
      s.dir_index = e;
      s.e_hat = atlas.dirs.directions[e];
      s.center = N * s.e_hat;
      atlas.sectors.push_back(s);
    }
  }
  return atlas;
}

inline bool sector_contains(const SectorAtlas& atlas, const Sector& s,
                            const Vec& xi) {
  double eps = atlas.dirs.eps_theta;
  double r = xi.norm();
  if (s.scale_exp == 0) return r <= 1.0 + eps;
  if (r == 0.0) return false;
  double ratio = r / s.scale;
  if (ratio < 1.0 || ratio > (1.0 + eps) * (1.0 + eps)) return false;
  return (xi / r - s.e_hat).norm() <= 2.0 * eps;
}

/// chi_theta(xi): radial telescoping factor times the normalized angular
/// factor. Two adjustments against the displayed formulas keep the family an
/// exact partition with per-sector support:
///  - the angular argument carries an extra (1+eps) tightening so the cap
///    factor vanishes outside the 2 eps cone exactly;
///  - the ball multiplier is chi(|xi|/(1+eps)) rather than chi(|xi|): the
///    literal telescope sums to 1 + chi(r) - chi(r/(1+eps)), losing mass on
///    1 < r < (1+eps)^2, and no smooth split of that seam can stay inside
///    the pinned sector boundaries. The ball therefore owns the seam and its
///    multiplier support reaches (1+eps)^2, slightly past the |xi| <= 1+eps
///    membership; annular supports are exact.
inline double sector_multiplier(const SectorAtlas& atlas, const Sector& s,
                                const Vec& xi) {
  for (int i = 0; i < xi.size(); ++i)
    if (!std::isfinite(xi[i])) throw std::domain_error("non-finite frequency");
  double eps = atlas.dirs.eps_theta;
  double r = xi.norm();
  if (s.scale_exp == 0) return chi_profile(r / (1.0 + eps), eps);
  double radial = chi_profile(r / ((1.0 + eps) * s.scale), eps) -
                  chi_profile(r / s.scale, eps);
  if (radial <= 0.0) return 0.0;
  double num = 0.0, den = 0.0;
  for (int e = 0; e < static_cast<int>(atlas.dirs.directions.size()); ++e) {
    double dist = (xi / r - atlas.dirs.directions[e]).norm();
    double w = chi_profile(dist * (1.0 + eps) / (2.0 * eps), eps);
    den += w;
    if (e == s.dir_index) num = w;
  }
  if (den == 0.0) return 0.0;
  return radial * num / den;
}

/// Sum of all sector multipliers at xi (the N = 1 ball counts once). Equals
/// 1 up to roundoff for |xi| <= n_max.
inline double partition_sum(const SectorAtlas& atlas, const Vec& xi) {
  double acc = 0.0;
  for (const auto& s : atlas.sectors) acc += sector_multiplier(atlas, s, xi);
  return acc;
}

/// P_theta: multiply the spectrum by chi_theta. Flags the output when the
/// sector support exceeds the grid Nyquist ball.
inline LatticeField apply_sector_projection(const LatticeField& f,
                                            const SectorAtlas& atlas,
                                            const Sector& s) {
  LatticeField fhat = to_frequency(f);
  double eps = atlas.dirs.eps_theta;
  std::vector<int> ix(f.grid.dim);
  Vec xi(f.grid.dim);
  for (std::size_t i = 0; i < fhat.samples.size(); ++i) {
    fhat.grid.unflatten(i, ix.data());
    for (int a = 0; a < f.grid.dim; ++a) xi[a] = fhat.grid.freq(ix[a]);
    fhat.samples[i] *= sector_multiplier(atlas, s, xi);
  }
  double support_radius = s.scale * (1.0 + eps) * (1.0 + eps);
  if (support_radius > f.grid.nyquist()) fhat.band_limit_warning = true;
  return f.reg == Register::Space ? to_space(fhat) : fhat;
}

/// Measured Bernstein constant: ||P_theta f||_{r2} / (N^{d(1/r1 - 1/r2)}
/// ||P_theta f||_{r1}), Lebesgue norms by Riemann sums on the grid.
/// Throws when the denominator vanishes (undefined ratio).
inline double bernstein_ratio(const LatticeField& f, const SectorAtlas& atlas,
                              const Sector& s, double r1, double r2) {
  if (!(r1 >= 1.0) || !(r2 >= r1))
    throw std::invalid_argument("need r2 >= r1 >= 1");
  LatticeField pf = to_space(apply_sector_projection(f, atlas, s));
  double lo = lp_norm(pf, r1);
  if (lo == 0.0) throw std::domain_error("undefined Bernstein ratio: zero norm");
  double gain = std::pow(s.scale, f.grid.dim * (1.0 / r1 - 1.0 / r2));
  return lp_norm(pf, r2) / (gain * lo);
}

// ---------------------------------------------------------------------------
// Sector/symbol compatibility report
// ---------------------------------------------------------------------------

/// Measured constants for the sector-symbol inequalities, sampled on
/// conv(theta) through convex combinations of random member pairs.
struct SectorPropertyReport {
  long samples = 0;
  double radius_low = 0.0, radius_high = 0.0;     // |xi|/N range
  double angle_constant = 0.0;                    // |xi/|xi| - c/|c|| / eps
  double offset_constant = 0.0;                   // |xi - c| / (eps N)
  double grad_upper = 0.0, grad_lower = 0.0;      // |grad m| / (C N^{s-1})
  double hess_upper = 0.0, hess_lower = 0.0;      // |D2 m| / (C N^{s-2})
  double grad_shift = 0.0, hess_shift = 0.0;      // Lipschitz-in-sector consts
  double eigen_floor = 0.0;                       // min |eig| / N^{s-2}
};

namespace detail {

inline Vec sample_sector_point(const SectorAtlas& atlas, const Sector& s,
                               std::mt19937_64& rng) {
  double eps = atlas.dirs.eps_theta;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    double r = s.scale_exp == 0
                   ? (1.0 + eps) * std::pow(u01(rng), 1.0 / atlas.dirs.dim)
                   : s.scale * (1.0 + u01(rng) * ((1.0 + eps) * (1.0 + eps) - 1.0));
    Vec v(atlas.dirs.dim);
    std::normal_distribution<double> n01(0.0, 1.0);
    if (atlas.dirs.dim == 1) {
      v[0] = s.scale_exp == 0 ? (u01(rng) < 0.5 ? 1.0 : -1.0) : s.e_hat[0];
      Vec xi = r * v;
      if (sector_contains(atlas, s, xi)) return xi;
      continue;
    }
    for (int a = 0; a < atlas.dirs.dim; ++a) v[a] = n01(rng);
    v /= v.norm();
    if (s.scale_exp != 0) {
      // bias toward the cap: blend the random direction with e_hat
      v = (s.e_hat + 1.5 * eps * v).normalized();
    }
    Vec xi = r * v;
    if (sector_contains(atlas, s, xi)) return xi;
  }
  return s.scale_exp == 0 ? Vec(Vec::Zero(atlas.dirs.dim)) : Vec(s.center);
}

}  // namespace detail

inline SectorPropertyReport check_sector_properties(
    const DispersionSymbol& sym, const SectorAtlas& atlas, const Sector& s,
    int samples = 200, std::uint64_t seed = 23) {
  if (s.scale < 2.0 * sym.c_max)
    throw std::invalid_argument("sector scale below 2 C_max");
  SectorPropertyReport rep;
  rep.radius_low = std::numeric_limits<double>::infinity();
  rep.grad_lower = std::numeric_limits<double>::infinity();
  rep.hess_lower = std::numeric_limits<double>::infinity();
  rep.eigen_floor = std::numeric_limits<double>::infinity();
  auto rng = make_rng(seed, 29);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double eps = atlas.dirs.eps_theta;
  double N = s.scale;
  Vec grad_c = eval_symbol1(sym, s.center);
  Mat hess_c = eval_symbol2(sym, s.center);
  for (int it = 0; it < samples; ++it) {
    Vec p = detail::sample_sector_point(atlas, s, rng);
    Vec q = detail::sample_sector_point(atlas, s, rng);
    Vec xi = p + u01(rng) * (q - p);  // conv(theta) sample
    ++rep.samples;
    double r = xi.norm();
    rep.radius_low = std::min(rep.radius_low, r / N);
    rep.radius_high = std::max(rep.radius_high, r / N);
    if (r > 0.0 && s.center.norm() > 0.0) {
      rep.angle_constant = std::max(
          rep.angle_constant, (xi / r - s.center / s.center.norm()).norm() / eps);
      rep.offset_constant =
          std::max(rep.offset_constant, (xi - s.center).norm() / (eps * N));
    }
    Vec g = eval_symbol1(sym, xi);
    Mat h = eval_symbol2(sym, xi);
    double pw1 = std::pow(N, sym.sigma - 1.0);
    double pw2 = std::pow(N, sym.sigma - 2.0);
    double hnorm = h.operatorNorm();
    rep.grad_upper = std::max(rep.grad_upper, g.norm() / pw1);
    rep.grad_lower = std::min(rep.grad_lower, g.norm() / pw1);
    rep.hess_upper = std::max(rep.hess_upper, hnorm / pw2);
    rep.hess_lower = std::min(rep.hess_lower, hnorm / pw2);
    rep.grad_shift =
        std::max(rep.grad_shift, (g - grad_c).norm() / (eps * pw1));
    rep.hess_shift =
        std::max(rep.hess_shift, (h - hess_c).operatorNorm() / (eps * pw2));
    Eigen::SelfAdjointEigenSolver<Mat> es(h);
    rep.eigen_floor = std::min(
        rep.eigen_floor, es.eigenvalues().cwiseAbs().minCoeff() / pw2);
  }
  return rep;
}

}  // namespace gnls
