#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gnls/evolution.hpp"
#include "gnls/field.hpp"
#include "gnls/norms.hpp"
#include "gnls/trees.hpp"

namespace gnls {

/// Remainder cubic nonlinearity Phi_z[v] = |z+v|^2 (z+v) - |z|^2 z,
/// algebraically the 7-term sum over (h1,h2,h3) in {z,v}^3 \ {(z,z,z)} of
/// h1 conj(h2) h3. Evaluated pointwise in the space register.
inline SpaceTimeField phi_z(const SpaceTimeField& z, const SpaceTimeField& v) {
  require_same_grids(z, v);
  SpaceTimeField out(z.tgrid, z.grid(), Register::Space);
  for (int i = 0; i < z.tgrid.count; ++i) {
    LatticeField zs = to_space(z.at(i));
    LatticeField vs = to_space(v.at(i));
    for (std::size_t m = 0; m < zs.samples.size(); ++m) {
      Complex a = zs.samples[m] + vs.samples[m];
      Complex b = zs.samples[m];
      out.at(i).samples[m] = std::norm(a) * a - std::norm(b) * b;
    }
  }
  return out;
}

struct IterationHistory {
  std::vector<double> increments;  // ||v_{k+1} - v_k|| in L^2([..]; L^2)
  std::vector<double> ratios;      // successive increment ratios
};

struct PicardResult {
  SpaceTimeField v;
  bool converged = false;
  IterationHistory history;
  double final_residual = 0.0;  // || v - K(v) || / scale after the last step
  int iterations = 0;
};

/// Picard iteration of the delayed map
///   K(v) = e^{i(t-t0)L} v0 - sign i int_{t0}^t e^{i(t-s)L} (Phi_z[v] + h) ds
/// from v_init = K(0). Convergence is gated in discrete L^2(I; L^2):
/// successive increments below tol * scale. Divergence (ratio >= 1 five
/// times in a row) is reported in the result, not thrown.
inline PicardResult iterate_K(const LatticeField& v0, const SpaceTimeField& z,
                              const SpaceTimeField& h, const SymbolTable& table,
                              double t0, Sign sign, int max_iters = 50,
                              double tol = 1e-8) {
  require_same_grids(z, h);
  require_same_grid(v0, z.slices.front());
  PicardResult res;
  auto apply_K = [&](const SpaceTimeField& v) {
    SpaceTimeField forcing = add(phi_z(z, v), h);
    return duhamel(v0, forcing, table, t0, sign);
  };
  SpaceTimeField zero_v(z.tgrid, v0.grid, Register::Frequency);
  SpaceTimeField v = apply_K(zero_v);
  double scale = std::max(l2l2_norm(v), 1e-14);
  int stall = 0;
  for (int k = 0; k < max_iters; ++k) {
    SpaceTimeField vn = apply_K(v);
    double inc = l2l2_distance(vn, v);
    res.history.increments.push_back(inc);
    if (res.history.increments.size() >= 2) {
      double prev = res.history.increments[res.history.increments.size() - 2];
      double ratio = prev > 0.0 ? inc / prev : 0.0;
      res.history.ratios.push_back(ratio);
      stall = ratio >= 1.0 ? stall + 1 : 0;
    }
    v = vn;
    res.iterations = k + 1;
    scale = std::max(scale, l2l2_norm(v));
    if (inc <= tol * scale) {
      res.converged = true;
      break;
    }
    if (stall >= 5) break;  // divergence: return history, no exception
  }
  res.final_residual = l2l2_distance(apply_K(v), v) / std::max(l2l2_norm(v), 1e-300);
  res.v = std::move(v);
  return res;
}

/// Heuristic contraction window of the delayed map. The constants C, c of
/// the bound are unknown; callers supply their own (default 1) and may drop
/// the 2^{-100} prefactor via prefactor_bits = 0. Only used as a window
/// suggestion; the solver restarts on halved windows instead of trusting it.
inline double contraction_time_bound(double delta0, double v0_norm,
                                     double z_norm, double h_norm,
                                     double C = 1.0, double c = 1.0,
                                     int prefactor_bits = 100) {
  double bracket = std::sqrt(1.0 + std::pow(delta0 + v0_norm + h_norm + z_norm, 2.0));
  return std::pow(2.0, -prefactor_bits) / std::pow(C * delta0, 1.0 / c) *
         std::pow(bracket, -3.0 / c);
}

struct SolveDiagnostics {
  double full_equation_residual = 0.0;  // Duhamel self-consistency of u
  double window = 0.0;                  // time window actually used
  int window_halvings = 0;
  double worst_ratio = 0.0;
  std::optional<double> v_norm_x = std::nullopt;   // aggregate X^s of v
  std::optional<double> u_norm_x = std::nullopt;   // aggregate X^s of u
};

struct SolveResult {
  SpaceTimeField u;
  SpaceTimeField v;
  ZTerms terms;
  PicardResult picard;
  SolveDiagnostics diagnostics;
  bool converged = false;
};

struct SolveOptions {
  int max_iters = 50;
  double tol = 1e-8;
  int max_window_halvings = 4;
  // optional norm reporting
  const SectorAtlas* atlas = nullptr;
  const BasisChoice* basis = nullptr;
  double eps0 = 1.0 / 64.0;
  double report_regularity = 0.5;  // the index s of the reported X^s norms
};

/// Full solution assembly u = z_{<=M} + v on [0, T]: build the expansion
/// terms from the randomized datum, run the remainder fixed point with
/// v0 = 0 and forcing [z,z,z]_{>M}, halving the window on non-convergence.
/// Diagnostics carry the Duhamel residual of the assembled u for the full
/// cubic equation.
inline SolveResult solve_u(const LatticeField& f_omega, int M,
                           const DispersionSymbol& sym, const TimeGrid& tgrid,
                           Sign sign, const SolveOptions& opt = {}) {
  SymbolTable table = make_symbol_table(f_omega.grid, sym);
  TimeGrid window = tgrid;
  SolveResult out;
  for (int half = 0; half <= opt.max_window_halvings; ++half) {
    ZTerms terms = z_terms(f_omega, M, table, window, sign);
    LatticeField zero(f_omega.grid, Register::Frequency);
    PicardResult pic = iterate_K(zero, terms.z_leq, terms.high_remainder, table,
                                 window.t0, sign, opt.max_iters, opt.tol);
    if (pic.converged || half == opt.max_window_halvings) {
      out.u = add(terms.z_leq, pic.v);
      out.v = pic.v;
      out.terms = std::move(terms);
      out.converged = pic.converged;
      out.diagnostics.window = window.t1 - window.t0;
      out.diagnostics.window_halvings = half;
      for (double r : pic.history.ratios)
        out.diagnostics.worst_ratio = std::max(out.diagnostics.worst_ratio, r);
      // Duhamel residual of the full equation for u
      SpaceTimeField cubic = cubic_product(out.u, out.u, out.u);
      SpaceTimeField rhs = duhamel(f_omega, cubic, table, window.t0, sign);
      out.diagnostics.full_equation_residual =
          l2l2_distance(out.u, rhs) / std::max(l2l2_norm(out.u), 1e-300);
      if (opt.atlas && opt.basis) {
        NormConfig cfg(opt.eps0, opt.report_regularity, NormKind::X);
        out.diagnostics.v_norm_x =
            aggregate_norm(out.v, sym, *opt.atlas, *opt.basis, cfg);
        out.diagnostics.u_norm_x =
            aggregate_norm(out.u, sym, *opt.atlas, *opt.basis, cfg);
      }
      out.picard = std::move(pic);
      return out;
    }
    window = TimeGrid(window.t0, window.t0 + 0.5 * (window.t1 - window.t0),
                      std::max(2, window.count / 2 + 1));
  }
  return out;  // unreachable
}

/// Convenience overload: randomize the profile first, then solve.
inline SolveResult solve_u(const LatticeField& f, const RandomDraw& draw, int M,
                           const DispersionSymbol& sym, const TimeGrid& tgrid,
                           Sign sign, const SolveOptions& opt = {}) {
  return solve_u(randomize(to_frequency(f), draw), M, sym, tgrid, sign, opt);
}

}  // namespace gnls
