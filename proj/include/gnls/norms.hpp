#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "gnls/basis.hpp"
#include "gnls/evolution.hpp"
#include "gnls/field.hpp"
#include "gnls/geometry.hpp"

namespace gnls {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponents (a, b, c) of a directional space-time norm; infinity encodes
/// the essential-supremum level explicitly.
struct ExponentTriple {
  double a = 2.0, b = 2.0, c = 2.0;
  ExponentTriple() = default;
  ExponentTriple(double a_, double b_, double c_) : a(a_), b(b_), c(c_) {
    if (a < 1.0 || b < 1.0 || c < 1.0)
      throw std::invalid_argument("norm exponents must be >= 1");
  }
};

/// Rotated coordinate frame: orthogonal O composed internally with the axis
/// swap S_j, so the distinguished axis y1 maps to the direction O e_j.
struct DirectionalFrame {
  Mat O;
  int j = 1;

  DirectionalFrame() = default;
  DirectionalFrame(const Mat& o, int j_) : O(o), j(j_) {
    if (orthogonality_defect(o) > 1e-12)
      throw std::invalid_argument("frame matrix is not orthogonal");
    if (j < 1 || j > o.rows()) throw std::invalid_argument("frame index out of range");
  }
};

enum class NormKind { X, Y, XDualLower };

/// Evaluation parameters shared by the sector norms: the Hölder split eps0,
/// the regularity index s of the aggregate, and which norm family.
struct NormConfig {
  double eps0 = 1.0 / 64.0;
  double s = 0.0;
  NormKind kind = NormKind::X;

  NormConfig() = default;
  NormConfig(double e, double s_, NormKind k) : eps0(e), s(s_), kind(k) {
    if (!(e > 0.0 && e <= std::pow(2.0, -6.0) && e < 0.5))
      throw std::invalid_argument("eps0 must lie in (0, 2^-6]");
  }
};

// ---------------------------------------------------------------------------
// Weighted l^p reduction with max-normalization (stable for p up to 2/eps0)
// ---------------------------------------------------------------------------

namespace detail {

class LpAccumulator {
 public:
  explicit LpAccumulator(double p) : p_(p) {}
  void add(double value, double weight) {
    value = std::abs(value);
    if (std::isinf(p_)) {
      max_ = std::max(max_, value);
      return;
    }
    if (value == 0.0 || weight == 0.0) return;
    if (value > max_) {
      if (max_ > 0.0) acc_ *= std::pow(max_ / value, p_);
      max_ = value;
    }
    acc_ += weight * std::pow(value / max_, p_);
  }
  double result() const {
    if (std::isinf(p_)) return max_;
    if (max_ == 0.0) return 0.0;
    return max_ * std::pow(acc_, 1.0 / p_);
  }

 private:
  double p_;
  double max_ = 0.0;
  double acc_ = 0.0;
};

inline bool signed_permutation(const Mat& p, std::vector<int>& axis,
                               std::vector<int>& sign) {
  int d = static_cast<int>(p.rows());
  axis.assign(d, -1);
  sign.assign(d, 1);
  for (int col = 0; col < d; ++col) {
    int hits = 0;
    for (int row = 0; row < d; ++row) {
      double v = p(row, col);
      if (std::abs(v) < 1e-12) continue;
      if (std::abs(std::abs(v) - 1.0) > 1e-12) return false;
      axis[col] = row;
      sign[col] = v > 0.0 ? 1 : -1;
      ++hits;
    }
    if (hits != 1) return false;
  }
  return true;
}

/// Band-limited evaluation of one slice at an arbitrary point (periodic
/// trigonometric interpolation from the spectrum).
inline Complex eval_slice(const LatticeField& fhat, const Vec& x) {
  const TorusGrid& g = fhat.grid;
  int d = g.dim;
  std::vector<std::vector<Complex>> phase(d);
  for (int a = 0; a < d; ++a) {
    phase[a].resize(g.points);
    for (int i = 0; i < g.points; ++i)
      phase[a][i] = std::polar(1.0, 2.0 * M_PI * g.freq(i) * x[a]);
  }
  std::vector<int> ix(d);
  Complex acc(0.0, 0.0);
  for (std::size_t i = 0; i < fhat.samples.size(); ++i) {
    if (fhat.samples[i] == Complex(0.0, 0.0)) continue;
    g.unflatten(i, ix.data());
    Complex ph(1.0, 0.0);
    for (int a = 0; a < d; ++a) ph *= phase[a][ix[a]];
    acc += fhat.samples[i] * ph;
  }
  return acc * g.freq_cell_volume();
}

}  // namespace detail

/// Directional space-time norm:
///   outer L^a over the distinguished coordinate y1,
///   middle L^b over t (trapezoid weights),
///   inner L^c over the transverse coordinates y',
/// of |u(t, O S_j y)|. Signed-permutation frames are evaluated by exact grid
/// re-indexing; general rotations through band-limited interpolation at the
/// rotated sample points, quadrature staying on the periodic cell.
inline double directional_norm(const SpaceTimeField& u,
                               const DirectionalFrame& frame,
                               const ExponentTriple& t) {
  const TorusGrid& g = u.grid();
  int d = g.dim;
  if (frame.O.rows() != d) throw std::invalid_argument("frame dimension mismatch");
  Mat p = frame.O * axis_swap(d, frame.j);
  std::vector<int> axis, sgn;
  bool fast = detail::signed_permutation(p, axis, sgn);

  int M = g.points;
  int T = u.tgrid.count;
  double dx = g.spacing();
  double dt = u.tgrid.dt();
  std::size_t inner_count = 1;
  for (int a = 1; a < d; ++a) inner_count *= static_cast<std::size_t>(M);

  std::vector<LatticeField> slices(T);
  for (int it = 0; it < T; ++it)
    slices[it] = fast ? to_space(u.at(it)) : to_frequency(u.at(it));

  std::vector<int> yix(d, 0);
  std::vector<int> xix(d, 0);
  Vec x(d);
  detail::LpAccumulator outer(t.a);
  for (int i1 = 0; i1 < M; ++i1) {
    detail::LpAccumulator middle(t.b);
    for (int it = 0; it < T; ++it) {
      detail::LpAccumulator inner(t.c);
      for (std::size_t ii = 0; ii < inner_count; ++ii) {
        std::size_t rem = ii;
        for (int a = d - 1; a >= 1; --a) {
          yix[a] = static_cast<int>(rem % M);
          rem /= M;
        }
        yix[0] = i1;
        double val;
        if (fast) {
          for (int a = 0; a < d; ++a) {
            int idx = sgn[a] > 0 ? yix[a] : (M - yix[a]) % M;
            xix[axis[a]] = idx;
          }
          val = std::abs(slices[it].samples[g.flatten(xix.data())]);
        } else {
          for (int b = 0; b < d; ++b) {
            double acc = 0.0;
            for (int a = 0; a < d; ++a) acc += p(b, a) * (yix[a] * dx);
            x[b] = acc;
          }
          val = std::abs(detail::eval_slice(slices[it], x));
        }
        inner.add(val, std::pow(dx, d - 1));
      }
      double wt = (it == 0 || it == T - 1) ? 0.5 * dt : dt;
      middle.add(inner.result(), wt);
    }
    outer.add(middle.result(), dx);
  }
  return outer.result();
}

/// Plain mixed norm L^{p}_t L^{q}_x (time outer, space inner).
inline double mixed_time_space_norm(const SpaceTimeField& u, double p, double q) {
  detail::LpAccumulator outer(p);
  for (int it = 0; it < u.tgrid.count; ++it) {
    double wt = (it == 0 || it == u.tgrid.count - 1) ? 0.5 * u.tgrid.dt()
                                                     : u.tgrid.dt();
    outer.add(lp_norm(to_space(u.at(it)), q), wt);
  }
  return outer.result();
}

// ---------------------------------------------------------------------------
// Sector norms X_theta / Y_theta
// ---------------------------------------------------------------------------

/// Indexes j whose frame direction O e_j carries a definite share of the
/// gradient at the sector center:
///   J_theta(O) = { j : |<grad m(c), O e_j>| >= d^{-1/2} |grad m(c)| }.
inline std::vector<int> dominant_directions(const DispersionSymbol& sym,
                                            const Sector& s, const Mat& o) {
  Vec grad = eval_symbol1(sym, s.center);
  double floor = grad.norm() / std::sqrt(static_cast<double>(sym.dim));
  std::vector<int> out;
  for (int j = 1; j <= sym.dim; ++j)
    if (std::abs(grad.dot(o.col(j - 1))) >= floor - 1e-12) out.push_back(j);
  return out;
}

namespace detail {

inline double strichartz_q(int d) {
  if (d <= 2) return kInf;  // the displayed 2d/(d-2) has no finite meaning here
  return 2.0 * d / (d - 2.0);
}

}  // namespace detail

/// X_theta / Y_theta of one (projected) field: the two plain space-time
/// norms plus the weighted maximal group (frame O_theta, all j) and the
/// weighted smoothing group (all frames in the finite range, dominant j).
/// Weights: X uses N^{-s/4}, N^{-(d-1)/2}, N^{(s-1)/2}, N^{-(d-s)/2} with
/// s the symbol order; Y repeats N^{-s/4} and N^{(s-1)/2} in each group.
inline double sector_norm(const SpaceTimeField& u, const DispersionSymbol& sym,
                          const SectorAtlas& atlas, std::size_t sector_index,
                          const BasisChoice& basis, const NormConfig& cfg,
                          bool assume_projected = false) {
  const Sector& s = atlas.sectors[sector_index];
  if (sector_index >= basis.frame_of_sector.size())
    throw std::invalid_argument("basis does not cover this sector");
  double e0 = cfg.eps0;
  double N = s.scale;
  double sg = sym.sigma;
  int d = sym.dim;

  SpaceTimeField w(u.tgrid, u.grid(), Register::Frequency);
  if (assume_projected) {
    for (int it = 0; it < u.tgrid.count; ++it) w.at(it) = to_frequency(u.at(it));
  } else {
    for (int it = 0; it < u.tgrid.count; ++it)
      w.at(it) = apply_sector_projection(to_frequency(u.at(it)), atlas, s);
  }

  double total = 0.0;
  total += mixed_time_space_norm(w, 2.0 / e0, 2.0 / (1.0 - e0));
  double q = detail::strichartz_q(d);
  total += mixed_time_space_norm(w, 2.0 / (1.0 - e0),
                                 std::isinf(q) ? kInf : q / (1.0 - e0));

  const Mat& own = sector_frame(basis, sector_index);
  ExponentTriple max1(2.0 / (1.0 - e0), 2.0 / e0, 2.0 / (1.0 - e0));
  ExponentTriple max2(2.0 / (1.0 - e0), 2.0 / e0, 2.0 / e0);
  double w_max1 = std::pow(N, -sg / 4.0);
  double w_max2 = cfg.kind == NormKind::Y ? std::pow(N, -sg / 4.0)
                                          : std::pow(N, -(d - 1.0) / 2.0);
  for (int j = 1; j <= d; ++j) {
    DirectionalFrame fr(own, j);
    total += w_max1 * directional_norm(w, fr, max1);
    total += w_max2 * directional_norm(w, fr, max2);
  }

  ExponentTriple smo1(2.0 / e0, 2.0 / (1.0 - e0), 2.0 / (1.0 - e0));
  ExponentTriple smo2(2.0 / e0, 2.0 / (1.0 - e0), 2.0 / e0);
  double w_smo1 = std::pow(N, (sg - 1.0) / 2.0);
  double w_smo2 = cfg.kind == NormKind::Y ? std::pow(N, (sg - 1.0) / 2.0)
                                          : std::pow(N, -(d - sg) / 2.0);
  for (const Mat& o : basis.frames) {
    for (int j : dominant_directions(sym, s, o)) {
      DirectionalFrame fr(o, j);
      total += w_smo1 * directional_norm(w, fr, smo1);
      total += w_smo2 * directional_norm(w, fr, smo2);
    }
  }
  return total;
}

/// Aggregate ( sum_theta N^{2s} ||P_theta u||^2 )^{1/2} over the finite
/// atlas, s being cfg.s.
inline double aggregate_norm(const SpaceTimeField& u, const DispersionSymbol& sym,
                             const SectorAtlas& atlas, const BasisChoice& basis,
                             const NormConfig& cfg) {
  double acc = 0.0;
  for (std::size_t i = 0; i < atlas.sectors.size(); ++i) {
    double ns = sector_norm(u, sym, atlas, i, basis, cfg);
    acc += std::pow(atlas.sectors[i].scale, 2.0 * cfg.s) * ns * ns;
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Dual-norm lower bound
// ---------------------------------------------------------------------------

/// Space-time inner-product pairing <h_*, h> on the grid.
inline Complex spacetime_pairing(const SpaceTimeField& a, const SpaceTimeField& b) {
  require_same_grids(a, b);
  Complex acc(0.0, 0.0);
  double cell = a.grid().cell_volume();
  for (int it = 0; it < a.tgrid.count; ++it) {
    double wt = (it == 0 || it == a.tgrid.count - 1) ? 0.5 * a.tgrid.dt()
                                                     : a.tgrid.dt();
    LatticeField as = to_space(a.at(it));
    LatticeField bs = to_space(b.at(it));
    Complex slice(0.0, 0.0);
    for (std::size_t m = 0; m < as.samples.size(); ++m)
      slice += std::conj(as.samples[m]) * bs.samples[m];
    acc += wt * cell * slice;
  }
  return acc;
}

/// Certified lower bound for the dual norm ||h||_{X_theta^*}: the best
/// pairing against K random test fields of unit X_theta norm. Dictionaries
/// are nested in K for a fixed seed, so the bound is monotone in K. Never a
/// value claim, only a bound.
inline double dual_lower_bound(const SpaceTimeField& h, const DispersionSymbol& sym,
                               const SectorAtlas& atlas, std::size_t sector_index,
                               const BasisChoice& basis, const NormConfig& cfg,
                               int dictionary_size, std::uint64_t seed = 101) {
  if (dictionary_size < 1) throw std::invalid_argument("K >= 1 required");
  const Sector& s = atlas.sectors[sector_index];
  double best = 0.0;
  for (int k = 0; k < dictionary_size; ++k) {
    auto rng = make_rng(seed, 1000 + k);
    SpaceTimeField cand(h.tgrid, h.grid(), Register::Frequency);
    // separable random element: sector-supported spectrum times a random
    // low-order time profile
    LatticeField base = random_spectrum(h.grid(), rng, [&](const std::vector<double>& xi) {
      Vec v(h.grid().dim);
      for (int a = 0; a < h.grid().dim; ++a) v[a] = xi[a];
      return sector_contains(atlas, s, v);
    });
    base = apply_sector_projection(base, atlas, s);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double om1 = 2.0 * M_PI * u01(rng), om2 = 2.0 * M_PI * u01(rng);
    double ph1 = 2.0 * M_PI * u01(rng), ph2 = 2.0 * M_PI * u01(rng);
    for (int it = 0; it < h.tgrid.count; ++it) {
      double tt = (h.tgrid.time(it) - h.tgrid.t0) / (h.tgrid.t1 - h.tgrid.t0);
      Complex prof = std::polar(1.0, om1 * tt + ph1) +
                     0.5 * std::polar(1.0, om2 * tt + ph2);
      cand.at(it) = base;
      for (auto& cval : cand.at(it).samples) cval *= prof;
    }
    double n = sector_norm(cand, sym, atlas, sector_index, basis, cfg, true);
    if (n == 0.0) continue;
    for (int it = 0; it < h.tgrid.count; ++it)
      for (auto& cval : cand.at(it).samples) cval /= n;
    best = std::max(best, std::abs(spacetime_pairing(cand, h)));
  }
  return best;
}

}  // namespace gnls
