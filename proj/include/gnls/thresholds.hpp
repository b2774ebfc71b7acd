#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnls {

/// Comparison slack used throughout the exponent arithmetic: strict
/// inequalities become "> with slack" in double precision.
inline constexpr double kExponentSlack = 1e-12;

/// Critical scaling exponent s_c = (d - sigma)/2 of the cubic equation.
inline double critical_exponent(int d, double sigma) {
  return 0.5 * (static_cast<double>(d) - sigma);
}

/// Lowest admissible data regularity, piecewise in (d, sigma):
///   (2-sigma)/4            for d <= 3 sigma/2,
///   (d+2)/4 - 5 sigma/8    for 3 sigma/2 < d <= 7 sigma/2 - 2,
///   (d+2)/2 - 3 sigma/2    beyond.
inline double s_min(int d, double sigma) {
  double dd = static_cast<double>(d);
  if (dd <= 1.5 * sigma) return 0.25 * (2.0 - sigma);
  if (dd <= 3.5 * sigma - 2.0) return 0.25 * (dd + 2.0) - 0.625 * sigma;
  return 0.5 * (dd + 2.0) - 1.5 * sigma;
}

/// First-order-expansion threshold:
///   (d-sigma)/2 * 1/3                    for sigma >= (d+2)/3,
///   (d-sigma)/2 * (d+1-2 sigma)/(d-1)    for sigma <= (d+2)/3.
inline double s_min_first_order(int d, double sigma) {
  double dd = static_cast<double>(d);
  double lead = 0.5 * (dd - sigma);
  if (sigma >= (dd + 2.0) / 3.0) return lead / 3.0;
  return lead * (dd + 1.0 - 2.0 * sigma) / (dd - 1.0);
}

/// Regularity gained by an n-linear tree term with data at regularity S:
/// mu(n, S) = min(nS + (n-1)(sigma-2)/4, 2S + 3 sigma/4 - 1, S + sigma - 1).
inline double mu(int n, double S, double sigma) {
  double a = n * S + (n - 1) * (sigma - 2.0) / 4.0;
  double b = 2.0 * S + 0.75 * sigma - 1.0;
  double c = S + sigma - 1.0;
  return std::min({a, b, c});
}

struct MuViolation {
  int k1 = 0, k2 = 0;
  double S = 0.0;
  double gap = 0.0;  // mu(k1) - mu(k2), positive means violation
};

struct MuMonotoneReport {
  bool passed = true;
  long checks = 0;
  std::vector<MuViolation> violations;
};

/// Exhaustive check of mu(k1, S) <= mu(k2, S) for k1 < k2 over a grid of S.
/// The hypothesis S > 1/2 - sigma/4 is the caller's responsibility; off-grid
/// probes simply report what they find.
inline MuMonotoneReport mu_monotone_check(double sigma,
                                          const std::vector<double>& s_grid,
                                          int k_max) {
  MuMonotoneReport rep;
  for (double S : s_grid) {
    for (int k1 = 1; k1 < k_max; ++k1) {
      for (int k2 = k1 + 1; k2 <= k_max; ++k2) {
        ++rep.checks;
        double gap = mu(k1, S, sigma) - mu(k2, S, sigma);
        if (gap > kExponentSlack) {
          rep.passed = false;
          rep.violations.push_back({k1, k2, S, gap});
        }
      }
    }
  }
  return rep;
}

struct MuInductiveResult {
  bool holds = true;
  double slack = 0.0;  // RHS - LHS
};

/// Inductive property of mu:
/// mu(k1+k2+k3, S) <= mu(k1) + min(mu(k2), sigma/4) + min(mu(k3), sigma/4)
///                    + sigma/2 - 1,   for k1 <= k2 <= k3.
inline MuInductiveResult mu_inductive_check(int k1, int k2, int k3, double S,
                                            double sigma) {
  if (k1 < 1 || k2 < 1 || k3 < 1) throw std::invalid_argument("k_j >= 1 required");
  if (!(k1 <= k2 && k2 <= k3)) throw std::invalid_argument("need k1 <= k2 <= k3");
  double lhs = mu(k1 + k2 + k3, S, sigma);
  double rhs = mu(k1, S, sigma) + std::min(mu(k2, S, sigma), sigma / 4.0) +
               std::min(mu(k3, S, sigma), sigma / 4.0) + sigma / 2.0 - 1.0;
  return {rhs - lhs >= -kExponentSlack, rhs - lhs};
}

/// Minimal expansion order kappa for which
///   S > max( (d-sigma)/(2(kappa+2)) - (kappa+1)(sigma-2)/(4(kappa+2)),
///            (d-3 sigma+2)/2, (2d-5 sigma+4)/8 ).
/// Returns nullopt when no finite order works, which happens exactly when
/// S fails the kappa-independent branches or the kappa -> infinity limit
/// (2-sigma)/4, i.e. S <= s_min(d, sigma).
inline std::optional<int> kappa0(int d, double sigma, double S) {
  double dd = static_cast<double>(d);
  double fixed = std::max(0.5 * (dd - 3.0 * sigma + 2.0),
                          0.125 * (2.0 * dd - 5.0 * sigma + 4.0));
  if (!(S > fixed + kExponentSlack)) return std::nullopt;
  if (!(S > 0.25 * (2.0 - sigma) + kExponentSlack)) return std::nullopt;
  for (int kappa = 0; kappa <= 100000; ++kappa) {
    double branch = (dd - sigma) / (2.0 * (kappa + 2.0)) -
                    (kappa + 1.0) * (sigma - 2.0) / (4.0 * (kappa + 2.0));
    if (S > branch + kExponentSlack) return kappa;
  }
  return std::nullopt;  // unreachable for S above the limit, kept as a guard
}

struct RegimeCheck {
  bool ok = true;
  std::string message;
};

/// Hypotheses under which the remainder iteration is a contraction:
/// s < S + sigma - 1, and additionally s < 2S + (3 sigma - 4)/4 when
/// s > sigma/4. Out-of-regime configurations are flagged, never rejected.
inline RegimeCheck remainder_regime(double S, double s, double sigma) {
  RegimeCheck out;
  if (!(s < S + sigma - 1.0)) {
    out.ok = false;
    out.message = "s >= S + sigma - 1";
  } else if (s > sigma / 4.0 && !(s < 2.0 * S + (3.0 * sigma - 4.0) / 4.0)) {
    out.ok = false;
    out.message = "s > sigma/4 but s >= 2S + (3 sigma - 4)/4";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Four-linear exponent gates
// ---------------------------------------------------------------------------

enum class GateCase { zzz, zzv, zvv, vvv };

inline GateCase gate_case_from_string(const std::string& s) {
  if (s == "zzz") return GateCase::zzz;
  if (s == "zzv") return GateCase::zzv;
  if (s == "zvv") return GateCase::zvv;
  if (s == "vvv") return GateCase::vvv;
  throw std::invalid_argument("unknown gate case: " + s);
}

/// Exponent bookkeeping for one gate instance. S1 <= S2 <= S3 < s_c < s
/// with S1 >= 1/3 - sigma/4 and s < s_c + (sigma-1)/2.
struct ExponentContext {
  int d = 3;
  double sigma = 2.0;
  double S1 = 0.0, S2 = 0.0, S3 = 0.0;
  double s = 0.0;           // remainder regularity index
  double sigma_star = 0.0;  // free dual exponent being gated

  double s_c() const { return critical_exponent(d, sigma); }

  void validate() const {
    if (sigma < 2.0) throw std::invalid_argument("sigma >= 2 required");
    if (S1 < 1.0 / 3.0 - sigma / 4.0 - kExponentSlack)
      throw std::invalid_argument("S1 below 1/3 - sigma/4");
    if (!(S1 <= S2 + kExponentSlack && S2 <= S3 + kExponentSlack))
      throw std::invalid_argument("need S1 <= S2 <= S3");
    if (!(S3 < s_c() + kExponentSlack))
      throw std::invalid_argument("need S3 < s_c");
    if (!(s_c() < s + kExponentSlack))
      throw std::invalid_argument("need s_c < s");
    if (!(s < s_c() + 0.5 * (sigma - 1.0) + kExponentSlack))
      throw std::invalid_argument("need s < s_c + (sigma-1)/2");
  }
};

struct GateResult {
  bool case_ok = false;
  double sigma_star_bound = 0.0;
};

/// Closed-form sigma* bound of each case:
///   zzz: S1 + min(S2, sigma/4) + min(S3, sigma/4) + (sigma-2)/2
///   zzv: S1 + min(S2, sigma/4) + min(s,  sigma/4) + (sigma-2)/2
///   zvv: min(2s - s_c + (sigma-2)/4 + min(sigma/4, S1), S1 + sigma - 1)
///   vvv: s + 2(s - s_c)
inline GateResult exponent_gate(GateCase c, const ExponentContext& ctx) {
  ctx.validate();
  double q = ctx.sigma / 4.0;
  double bound = 0.0;
  switch (c) {
    case GateCase::zzz:
      bound = ctx.S1 + std::min(ctx.S2, q) + std::min(ctx.S3, q) +
              0.5 * (ctx.sigma - 2.0);
      break;
    case GateCase::zzv:
      bound = ctx.S1 + std::min(ctx.S2, q) + std::min(ctx.s, q) +
              0.5 * (ctx.sigma - 2.0);
      break;
    case GateCase::zvv:
      bound = std::min(2.0 * ctx.s - ctx.s_c() + 0.25 * (ctx.sigma - 2.0) +
                           std::min(q, ctx.S1),
                       ctx.S1 + ctx.sigma - 1.0);
      break;
    case GateCase::vvv:
      bound = ctx.s + 2.0 * (ctx.s - ctx.s_c());
      break;
  }
  return {ctx.sigma_star <= bound + kExponentSlack, bound};
}

struct GateCounterexample {
  int k3 = 0, k4 = 0;      // dyadic exponents, N_i = 2^{k_i}
  int permutation[4] = {0, 0, 0, 0};
  double margin = 0.0;     // LHS - RHS in log2 scale (positive = violation)
};

struct BruteForceGateResult {
  bool holds = true;
  std::optional<GateCounterexample> counterexample;
  long checks = 0;
};

namespace detail {

// Labels 0..3 for the four functions entering the gate: index 0 is the dual
// test function v*, indexes 1..3 the case-dependent triple.
inline bool gate_label_is_v(GateCase c, int label) {
  if (label == 0) return true;  // v* counts as a v-type for beta
  switch (c) {
    case GateCase::zzz: return false;
    case GateCase::zzv: return label == 3;
    case GateCase::zvv: return label >= 2;
    case GateCase::vvv: return true;
  }
  return false;
}

inline double gate_alpha(GateCase c, const ExponentContext& ctx, int label) {
  if (label == 0) return -ctx.sigma_star;
  switch (c) {
    case GateCase::zzz:
      return label == 1 ? ctx.S1 : (label == 2 ? ctx.S2 : ctx.S3);
    case GateCase::zzv:
      return label == 1 ? ctx.S1 : (label == 2 ? ctx.S2 : ctx.s);
    case GateCase::zvv:
      return label == 1 ? ctx.S1 : ctx.s;
    case GateCase::vvv:
      return ctx.s;
  }
  return 0.0;
}

inline double gate_beta(GateCase c, const ExponentContext& ctx, int la, int lb) {
  if (gate_label_is_v(c, la) && gate_label_is_v(c, lb))
    return 0.5 * (ctx.d - 1.0) - 0.25 * ctx.sigma;
  return 0.0;
}

}  // namespace detail

/// Brute-force verification of the reduced inequality behind the gates:
/// for all dyadic N3 >= N4 in {2^0 .. 2^kmax} and all assignments of
/// (v*, h1, h2, h3) to the four slots,
///   min(N3^{b(h2,h3)} N4^{b(h1,h4)}, N3^{b(h1,h3)} N4^{b(h2,h4)})
///     <= N3^{3 sigma/4 - 1 + a1 + a2 + a3} N4^{-sigma/4 + a4},
/// with the implicit constant taken as 1 and comparisons in log2 scale.
inline BruteForceGateResult brute_force_gate(GateCase c,
                                             const ExponentContext& ctx,
                                             int dyadic_kmax = 20) {
  ctx.validate();
  BruteForceGateResult out;
  int perm[4] = {0, 1, 2, 3};
  std::sort(perm, perm + 4);
  do {
    double a1 = detail::gate_alpha(c, ctx, perm[0]);
    double a2 = detail::gate_alpha(c, ctx, perm[1]);
    double a3 = detail::gate_alpha(c, ctx, perm[2]);
    double a4 = detail::gate_alpha(c, ctx, perm[3]);
    double b23 = detail::gate_beta(c, ctx, perm[1], perm[2]);
    double b14 = detail::gate_beta(c, ctx, perm[0], perm[3]);
    double b13 = detail::gate_beta(c, ctx, perm[0], perm[2]);
    double b24 = detail::gate_beta(c, ctx, perm[1], perm[3]);
    double rhs3 = 0.75 * ctx.sigma - 1.0 + a1 + a2 + a3;
    double rhs4 = -0.25 * ctx.sigma + a4;
    for (int k3 = 0; k3 <= dyadic_kmax; ++k3) {
      for (int k4 = 0; k4 <= k3; ++k4) {
        ++out.checks;
        double lhs = std::min(b23 * k3 + b14 * k4, b13 * k3 + b24 * k4);
        double rhs = rhs3 * k3 + rhs4 * k4;
        if (lhs > rhs + 64.0 * kExponentSlack) {
          out.holds = false;
          if (!out.counterexample) {
            GateCounterexample ce;
            ce.k3 = k3;
            ce.k4 = k4;
            for (int i = 0; i < 4; ++i) ce.permutation[i] = perm[i];
            ce.margin = lhs - rhs;
            out.counterexample = ce;
          }
        }
      }
    }
  } while (std::next_permutation(perm, perm + 4));
  return out;
}

}  // namespace gnls
