#pragma once

#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnls/evolution.hpp"
#include "gnls/field.hpp"
#include "gnls/norms.hpp"
#include "gnls/thresholds.hpp"

namespace gnls {

/// Ternary tree: a leaf or a node with exactly three ordered children.
/// |tau| counts leaves and is always odd.
struct TernaryTree {
  std::vector<std::unique_ptr<TernaryTree>> children;  // empty or size 3

  bool is_leaf() const { return children.empty(); }
  int leaf_count() const {
    if (is_leaf()) return 1;
    return children[0]->leaf_count() + children[1]->leaf_count() +
           children[2]->leaf_count();
  }
  /// Canonical shape serialization, used for deduplication and memoization.
  std::string shape() const {
    if (is_leaf()) return ".";
    return "[" + children[0]->shape() + children[1]->shape() +
           children[2]->shape() + "]";
  }
  std::unique_ptr<TernaryTree> clone() const {
    auto t = std::make_unique<TernaryTree>();
    if (!is_leaf()) {
      t->children.reserve(3);
      for (const auto& c : children) t->children.push_back(c->clone());
    }
    return t;
  }
};

inline std::unique_ptr<TernaryTree> make_leaf() {
  return std::make_unique<TernaryTree>();
}

inline std::unique_ptr<TernaryTree> make_node(std::unique_ptr<TernaryTree> a,
                                              std::unique_ptr<TernaryTree> b,
                                              std::unique_ptr<TernaryTree> c) {
  auto t = std::make_unique<TernaryTree>();
  t->children.push_back(std::move(a));
  t->children.push_back(std::move(b));
  t->children.push_back(std::move(c));
  return t;
}

/// All distinct ordered ternary trees with n leaves (n odd, n <= 11),
/// deduplicated by canonical serialization.
inline std::vector<std::unique_ptr<TernaryTree>> enumerate_trees(int n) {
  if (n < 1 || n % 2 == 0)
    throw std::domain_error("ternary trees exist for odd leaf counts only");
  if (n > 11) throw std::invalid_argument("tree enumeration capped at n = 11");
  std::vector<std::unique_ptr<TernaryTree>> out;
  if (n == 1) {
    out.push_back(make_leaf());
    return out;
  }
  std::map<std::string, bool> seen;
  for (int n1 = 1; n1 < n; n1 += 2) {
    for (int n2 = 1; n1 + n2 < n; n2 += 2) {
      int n3 = n - n1 - n2;
      if (n3 < 1 || n3 % 2 == 0) continue;
      auto t1 = enumerate_trees(n1);
      auto t2 = enumerate_trees(n2);
      auto t3 = enumerate_trees(n3);
      for (const auto& a : t1)
        for (const auto& b : t2)
          for (const auto& c : t3) {
            auto node = make_node(a->clone(), b->clone(), c->clone());
            auto key = node->shape();
            if (!seen[key]) {
              seen[key] = true;
              out.push_back(std::move(node));
            }
          }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tree operators
// ---------------------------------------------------------------------------

namespace detail {

inline SpaceTimeField tree_operator_impl(
    const TernaryTree& tau, const std::vector<const LatticeField*>& leaves,
    std::size_t& cursor, const SymbolTable& table, const TimeGrid& tgrid,
    Sign sign, std::map<std::string, SpaceTimeField>* memo, bool uniform_leaves) {
  std::string key;
  if (memo && uniform_leaves) {
    key = tau.shape();
    auto it = memo->find(key);
    if (it != memo->end()) {
      cursor += tau.leaf_count();
      return it->second;
    }
  }
  SpaceTimeField result;
  if (tau.is_leaf()) {
    const LatticeField& f = *leaves[cursor++];
    result = SpaceTimeField(tgrid, f.grid, f.reg);
    for (int i = 0; i < tgrid.count; ++i)
      result.at(i) = propagate(f, table, tgrid.time(i));
  } else {
    SpaceTimeField r1 = tree_operator_impl(*tau.children[0], leaves, cursor,
                                           table, tgrid, sign, memo,
                                           uniform_leaves);
    SpaceTimeField r2 = tree_operator_impl(*tau.children[1], leaves, cursor,
                                           table, tgrid, sign, memo,
                                           uniform_leaves);
    SpaceTimeField r3 = tree_operator_impl(*tau.children[2], leaves, cursor,
                                           table, tgrid, sign, memo,
                                           uniform_leaves);
    SpaceTimeField prod = cubic_product(r1, r2, r3);  // middle slot conjugated
    LatticeField zero(r1.grid(), Register::Frequency);
    result = duhamel(zero, prod, table, tgrid.t0, sign);
  }
  if (memo && uniform_leaves) (*memo)[key] = result;
  return result;
}

}  // namespace detail

/// R_tau applied to an ordered tuple of |tau| leaf data: a leaf becomes the
/// free evolution, a node the signed Duhamel integral of the product of its
/// children with the middle one conjugated. The Duhamel sign is opposite to
/// the nonlinearity sign.
inline SpaceTimeField tree_operator(const TernaryTree& tau,
                                    const std::vector<LatticeField>& leaves,
                                    const SymbolTable& table,
                                    const TimeGrid& tgrid, Sign sign) {
  if (static_cast<int>(leaves.size()) != tau.leaf_count())
    throw std::invalid_argument("leaf tuple size must equal |tau|");
  std::vector<const LatticeField*> ptrs;
  ptrs.reserve(leaves.size());
  for (const auto& f : leaves) ptrs.push_back(&f);
  std::size_t cursor = 0;
  return detail::tree_operator_impl(tau, ptrs, cursor, table, tgrid, sign,
                                    nullptr, false);
}

// ---------------------------------------------------------------------------
// Expansion terms z_n
// ---------------------------------------------------------------------------

struct ZTerms {
  std::vector<int> orders;             // odd n <= M
  std::vector<SpaceTimeField> z;       // z_n per order
  SpaceTimeField z_leq;                // sum of the z_n
  SpaceTimeField high_remainder;       // [z, z, z]_{>M}
};

/// Compute z_n = sum_{tau in TT_n} R_tau[f] for odd n <= M, their sum, and
/// the high remainder sum_{n1+n2+n3 > M, n_j <= M} z_{n1} conj(z_{n2}) z_{n3}.
/// Shared subtree shapes are evaluated once per call.
inline ZTerms z_terms(const LatticeField& f_omega, int M,
                      const SymbolTable& table, const TimeGrid& tgrid,
                      Sign sign) {
  if (M < 1 || M % 2 == 0) throw std::domain_error("M must be odd");
  if (M > 9) throw std::invalid_argument("expansion order capped at M = 9");
  ZTerms out;
  std::map<std::string, SpaceTimeField> memo;
  for (int n = 1; n <= M; n += 2) {
    auto trees = enumerate_trees(n);
    SpaceTimeField zn(tgrid, f_omega.grid, Register::Frequency);
    for (const auto& tau : trees) {
      std::vector<const LatticeField*> ptrs(n, &f_omega);
      std::size_t cursor = 0;
      SpaceTimeField r = detail::tree_operator_impl(*tau, ptrs, cursor, table,
                                                    tgrid, sign, &memo, true);
      zn = add(zn, r);
    }
    out.orders.push_back(n);
    out.z.push_back(zn);
  }
  out.z_leq = out.z.front();
  for (std::size_t i = 1; i < out.z.size(); ++i)
    out.z_leq = add(out.z_leq, out.z[i]);
  SpaceTimeField rem(tgrid, f_omega.grid, Register::Space);
  for (std::size_t i1 = 0; i1 < out.z.size(); ++i1)
    for (std::size_t i2 = 0; i2 < out.z.size(); ++i2)
      for (std::size_t i3 = 0; i3 < out.z.size(); ++i3) {
        if (out.orders[i1] + out.orders[i2] + out.orders[i3] <= M) continue;
        rem = add(rem, cubic_product(out.z[i1], out.z[i2], out.z[i3]));
      }
  out.high_remainder = rem;
  return out;
}

// ---------------------------------------------------------------------------
// Tail Monte Carlo
// ---------------------------------------------------------------------------

struct TailRow {
  double lambda = 0.0;
  long survivors = 0;
  double survival = 0.0;
};

struct TailTable {
  int order = 1;
  long draws = 0;
  std::vector<TailRow> rows;
  std::vector<double> norms;  // per-draw Y^{mu} norms
  double slope = 0.0;         // fit of log(-log survival) vs log lambda
  double slope_stderr = 0.0;
  bool slope_valid = false;
};

/// Empirical survival of || sum_{TT_n} R_tau[f^omega] ||_{Y^{mu(n,S)}} over
/// independent draws, plus the regression whose slope estimates 2/n.
inline TailTable tail_monte_carlo(const LatticeField& f, int n, double S,
                                  const DispersionSymbol& sym,
                                  const SectorAtlas& atlas,
                                  const BasisChoice& basis, long draws,
                                  const std::vector<double>& lambdas,
                                  const TimeGrid& tgrid, Sign sign,
                                  std::uint64_t seed, double eps0 = 1.0 / 64.0,
                                  RandomLaw law = RandomLaw::ComplexGaussian) {
  if (draws < 50) throw std::invalid_argument("need at least 50 draws");
  TailTable table;
  table.order = n;
  table.draws = draws;
  SymbolTable st = make_symbol_table(f.grid, sym);
  double mu_ns = mu(n, S, sym.sigma);
  NormConfig cfg(eps0, mu_ns, NormKind::Y);
  LatticeField fhat = to_frequency(f);
  auto trees = enumerate_trees(n);
  for (long w = 0; w < draws; ++w) {
    RandomDraw draw{split_seed(seed, static_cast<std::uint64_t>(w)), law};
    LatticeField fo = randomize(fhat, draw);
    std::map<std::string, SpaceTimeField> memo;
    SpaceTimeField zn(tgrid, f.grid, Register::Frequency);
    for (const auto& tau : trees) {
      std::vector<const LatticeField*> ptrs(n, &fo);
      std::size_t cursor = 0;
      zn = add(zn, detail::tree_operator_impl(*tau, ptrs, cursor, st, tgrid,
                                              sign, &memo, true));
    }
    table.norms.push_back(aggregate_norm(zn, sym, atlas, basis, cfg));
  }
  for (double lam : lambdas) {
    TailRow row;
    row.lambda = lam;
    for (double v : table.norms)
      if (v > lam) ++row.survivors;
    row.survival = static_cast<double>(row.survivors) / draws;
    table.rows.push_back(row);
  }
  // least squares on points with survival strictly inside (0, 1)
  std::vector<double> xs, ys;
  for (const auto& row : table.rows) {
    if (row.survival <= 0.0 || row.survival >= 1.0) continue;
    xs.push_back(std::log(row.lambda));
    ys.push_back(std::log(-std::log(row.survival)));
  }
  if (xs.size() >= 3) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= ys.size();
    double sxx = 0.0, sxy = 0.0, see = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx > 0.0) {
      table.slope = sxy / sxx;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        double r = ys[i] - my - table.slope * (xs[i] - mx);
        see += r * r;
      }
      if (xs.size() > 2)
        table.slope_stderr = std::sqrt(see / ((xs.size() - 2) * sxx));
      table.slope_valid = true;
    }
  }
  return table;
}

}  // namespace gnls
