#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gnls/geometry.hpp"
#include "gnls/random.hpp"
#include "gnls/symbol.hpp"

namespace gnls {

inline double operator_distance(const Mat& a, const Mat& b) {
  return (a - b).operatorNorm();
}

inline double orthogonality_defect(const Mat& a) {
  return (a.transpose() * a - Mat::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
}

/// Proof-scaling suggestions for the geometric parameters: the kick radius
/// r = min(0.1, C_L^{-(2d+1)}) and the sector resolution eps = r^2 C_L^{-2}.
/// At desk scale these produce enormous atlases for large C_L, so experiment
/// configs set the resolution explicitly; the helpers document the scaling.
inline double default_kick_radius(const DispersionSymbol& s) {
  return std::min(0.1, std::pow(s.c_lambda, -(2.0 * s.dim + 1.0)));
}

inline double default_sector_resolution(const DispersionSymbol& s) {
  double r = default_kick_radius(s);
  return r * r * std::pow(s.c_lambda, -2.0);
}

/// Axis-swap permutation S_j with S_j e_1 = e_j (an involution).
inline Mat axis_swap(int d, int j) {
  Mat s = Mat::Identity(d, d);
  if (j != 1) {
    s(0, 0) = 0.0;
    s(j - 1, j - 1) = 0.0;
    s(0, j - 1) = 1.0;
    s(j - 1, 0) = 1.0;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rotation family
// ---------------------------------------------------------------------------

/// The finite family { A_{j0, J} } of plane rotations by angle r in the
/// planes span(e_{j0}, e_J), e_J = |J|^{-1/2} sum_{j in J} e_j, over all
/// j0 and J subset of the remaining axes. Every member satisfies
/// ||A - Id|| <= r, and for every vector v some member keeps all d
/// projections |<v, A e_j>| above a fixed multiple of r |v|.
struct RotationFamily {
  int dim = 1;
  double angle = 0.1;
  std::vector<Mat> members;
};

/// Plane rotation exp(r (u v^T - v u^T)) for orthonormal u, v.
inline Mat plane_rotation(const Vec& u, const Vec& v, double r) {
  int d = static_cast<int>(u.size());
  Mat a = Mat::Identity(d, d);
  a += std::sin(r) * (u * v.transpose() - v * u.transpose());
  a += (std::cos(r) - 1.0) * (u * u.transpose() + v * v.transpose());
  return a;
}

inline RotationFamily rotation_family(int d, double r) {
  if (!(r > 0.0 && r < 0.5))
    throw std::invalid_argument("rotation angle must lie in (0, 1/2)");
  RotationFamily fam;
  fam.dim = d;
  fam.angle = r;
  fam.members.push_back(Mat::Identity(d, d));  // J = empty
  for (int j0 = 0; j0 < d; ++j0) {
    for (unsigned mask = 1; mask < (1u << d); ++mask) {
      if (mask & (1u << j0)) continue;
      Vec ej = Vec::Zero(d);
      int count = 0;
      for (int j = 0; j < d; ++j)
        if (mask & (1u << j)) {
          ej[j] = 1.0;
          ++count;
        }
      ej /= std::sqrt(static_cast<double>(count));
      Vec e0 = Vec::Zero(d);
      e0[j0] = 1.0;
      fam.members.push_back(plane_rotation(e0, ej, r));
    }
  }
  return fam;
}

/// Best member for a single vector: maximizes the least axis projection.
inline std::pair<const Mat*, double> kick_vector(const RotationFamily& fam,
                                                 const Vec& v) {
  const Mat* best = nullptr;
  double best_val = -1.0;
  for (const auto& a : fam.members) {
    double least = std::numeric_limits<double>::infinity();
    for (int j = 0; j < fam.dim; ++j)
      least = std::min(least, std::abs(v.dot(a.col(j))));
    if (least > best_val) {
      best_val = least;
      best = &a;
    }
  }
  return {best, best_val};
}

// ---------------------------------------------------------------------------
// Orthogonal-group net with the two-vector kick
// ---------------------------------------------------------------------------

/// Finite subset of O(d) built as { B^T A' } with B a greedy r-packing of
/// Haar samples (both determinant components) and A' the two-vector kicking
/// family. For probe inputs (O, v1, v2) the selection below returns a member
/// within ~2r of O whose axis projections on v1, v2 stay above c r |v_k|.
struct BasisNet {
  int dim = 1;
  double r = 0.1;
  std::vector<Mat> members;
  std::vector<std::pair<int, int>> provenance;  // (net index, kick index)
  std::vector<Mat> coarse_net;                  // the packing B
  std::vector<Mat> kicks;                       // the family A'
};

namespace detail {

inline Mat haar_orthogonal(int d, std::mt19937_64& rng, bool flip) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Mat g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = n01(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  Mat rr = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j)
    if (rr(j, j) < 0.0) q.col(j) *= -1.0;
  if (flip) q.col(d - 1) *= -1.0;
  return q;
}

}  // namespace detail

inline BasisNet build_basis_net(int d, double r, std::uint64_t seed = 7,
                                int stop_after_rejections = 2000) {
  if (d > 4)
    throw std::runtime_error(
        "basis nets are limited to d <= 4; the net size explodes beyond");
  if (!(r > 0.0 && r < 0.5))
    throw std::invalid_argument("net radius must lie in (0, 1/2)");
  BasisNet net;
  net.dim = d;
  net.r = r;
  if (d == 1) {
    Mat p(1, 1), m(1, 1);
    p << 1.0;
    m << -1.0;
    net.coarse_net = {p, m};
    net.kicks = {p};
  } else {
    auto rng = make_rng(seed, 41);
    net.coarse_net.push_back(Mat::Identity(d, d));
    int rejections = 0;
    bool flip = false;
    while (rejections < stop_after_rejections &&
           net.coarse_net.size() < 200000) {
      Mat cand = detail::haar_orthogonal(d, rng, flip);
      flip = !flip;
      bool keep = true;
      for (const auto& b : net.coarse_net) {
        if (operator_distance(cand, b) < r) {
          keep = false;
          break;
        }
      }
      if (keep) {
        net.coarse_net.push_back(cand);
        rejections = 0;
      } else {
        ++rejections;
      }
    }
    // Two-vector kick family: products of two one-vector families at radii
    // r/2 and c_d r / 2 with the dimensional constant c_d = 1/(8d).
    double cd = 1.0 / (8.0 * d);
    auto fam1 = rotation_family(d, r / 2.0);
    auto fam2 = rotation_family(d, cd * r / 2.0);
    for (const auto& a1 : fam1.members)
      for (const auto& a2 : fam2.members) net.kicks.push_back(a1 * a2);
  }
  for (int b = 0; b < static_cast<int>(net.coarse_net.size()); ++b)
    for (int k = 0; k < static_cast<int>(net.kicks.size()); ++k) {
      net.members.push_back(net.coarse_net[b].transpose() * net.kicks[k]);
      net.provenance.emplace_back(b, k);
    }
  return net;
}

struct NetSelection {
  int member_index = -1;
  double distance = 0.0;        // ||A - O||
  double projection_floor = 0.0;  // min_{j,k} |<v_k, A e_j>| / |v_k|
};

/// Constructive selection from the proof: nearest B^T to O, then the kick
/// maximizing the least projection of (B v1, B v2) on the axes.
inline NetSelection net_select(const BasisNet& net, const Mat& o, const Vec& v1,
                               const Vec& v2) {
  int d = net.dim;
  int best_b = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int b = 0; b < static_cast<int>(net.coarse_net.size()); ++b) {
    double dist = operator_distance(net.coarse_net[b].transpose(), o);
    if (dist < best_dist) {
      best_dist = dist;
      best_b = b;
    }
  }
  const Mat& B = net.coarse_net[best_b];
  Vec w1 = B * v1, w2 = B * v2;
  int best_k = 0;
  double best_floor = -1.0;
  for (int k = 0; k < static_cast<int>(net.kicks.size()); ++k) {
    const Mat& a = net.kicks[k];
    double fl = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
      if (v1.norm() > 0.0)
        fl = std::min(fl, std::abs(w1.dot(a.col(j))) / v1.norm());
      if (v2.norm() > 0.0)
        fl = std::min(fl, std::abs(w2.dot(a.col(j))) / v2.norm());
    }
    if (fl > best_floor) {
      best_floor = fl;
      best_k = k;
    }
  }
  NetSelection sel;
  for (int i = 0; i < static_cast<int>(net.provenance.size()); ++i) {
    if (net.provenance[i].first == best_b && net.provenance[i].second == best_k) {
      sel.member_index = i;
      break;
    }
  }
  const Mat& chosen = net.members[sel.member_index];
  sel.distance = operator_distance(chosen, o);
  sel.projection_floor = best_floor;
  return sel;
}

// ---------------------------------------------------------------------------
// Sector basis choice
// ---------------------------------------------------------------------------

/// Map sector -> orthogonal frame with the Def-2.4 non-degeneracy constants.
/// Sectors below the 2 C_max scale get the identity frame and are excluded
/// from the condition checks. The range of the map is finite by construction
/// (a subset of the net plus the identity).
struct BasisChoice {
  std::vector<int> frame_of_sector;  // index into `frames`
  std::vector<Mat> frames;           // distinct matrices used
  std::vector<bool> checked;         // condition-checked sectors
  double c_basis = 1.0;              // measured C_O
};

/// Per-direction measured constants for one sector.
struct BasisConditionRecord {
  // hessian: C^{-1} N^{s-2} <= |<O e_j, D2m O e_j>| <= C N^{s-2}
  // gradient: C^{-1} N^{s-1} <= |<grad m, O e_j>| <= C N^{s-1}
  // projection: |<xi, O e_j>| >= C^{-1} N
  std::vector<double> hess_low, hess_high;
  std::vector<double> grad_low, grad_high;
  std::vector<double> proj_low;
  double tightest_c = 1.0;  // smallest admissible C_O for this sector

  bool admissible(double c) const {
    return tightest_c <= c * (1.0 + 1e-12);
  }
};

inline BasisConditionRecord verify_basis_conditions(
    const DispersionSymbol& sym, const SectorAtlas& atlas, const Sector& s,
    const Mat& frame, int samples = 100, std::uint64_t seed = 31) {
  if (s.scale < 2.0 * sym.c_max)
    throw std::invalid_argument("basis conditions only apply for N >= 2 C_max");
  int d = sym.dim;
  BasisConditionRecord rec;
  rec.hess_low.assign(d, std::numeric_limits<double>::infinity());
  rec.grad_low.assign(d, std::numeric_limits<double>::infinity());
  rec.proj_low.assign(d, std::numeric_limits<double>::infinity());
  rec.hess_high.assign(d, 0.0);
  rec.grad_high.assign(d, 0.0);
  auto rng = make_rng(seed, 37);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double pw1 = std::pow(s.scale, sym.sigma - 1.0);
  double pw2 = std::pow(s.scale, sym.sigma - 2.0);
  for (int it = 0; it < samples; ++it) {
    Vec p = detail::sample_sector_point(atlas, s, rng);
    Vec q = detail::sample_sector_point(atlas, s, rng);
    Vec xi = p + u01(rng) * (q - p);
    Vec g = eval_symbol1(sym, xi);
    Mat h = eval_symbol2(sym, xi);
    for (int j = 0; j < d; ++j) {
      Vec col = frame.col(j);
      double hj = std::abs(col.dot(h * col)) / pw2;
      double gj = std::abs(g.dot(col)) / pw1;
      double pj = std::abs(xi.dot(col)) / s.scale;
      rec.hess_low[j] = std::min(rec.hess_low[j], hj);
      rec.hess_high[j] = std::max(rec.hess_high[j], hj);
      rec.grad_low[j] = std::min(rec.grad_low[j], gj);
      rec.grad_high[j] = std::max(rec.grad_high[j], gj);
      rec.proj_low[j] = std::min(rec.proj_low[j], pj);
    }
  }
  double c = 1.0;
  for (int j = 0; j < d; ++j) {
    c = std::max(c, rec.hess_high[j]);
    c = std::max(c, rec.grad_high[j]);
    if (rec.hess_low[j] > 0.0) c = std::max(c, 1.0 / rec.hess_low[j]);
    else c = std::numeric_limits<double>::infinity();
    if (rec.grad_low[j] > 0.0) c = std::max(c, 1.0 / rec.grad_low[j]);
    else c = std::numeric_limits<double>::infinity();
    if (rec.proj_low[j] > 0.0) c = std::max(c, 1.0 / rec.proj_low[j]);
    else c = std::numeric_limits<double>::infinity();
  }
  rec.tightest_c = c;
  return rec;
}

/// Deterministic eigenframe of D2m(c_theta): eigenpairs sorted by eigenvalue
/// then by the lexicographic order of the eigenvector entries, each column
/// signed so its first nonzero entry is positive.
inline Mat deterministic_eigenframe(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  int d = static_cast<int>(h.rows());
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  Mat vecs = es.eigenvectors();
  Vec vals = es.eigenvalues();
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      if (std::abs(vecs(i, j)) > 1e-14) {
        if (vecs(i, j) < 0.0) vecs.col(j) *= -1.0;
        break;
      }
    }
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (vals[a] != vals[b]) return vals[a] < vals[b];
    for (int i = 0; i < d; ++i)
      if (vecs(i, a) != vecs(i, b)) return vecs(i, a) < vecs(i, b);
    return false;
  });
  Mat out(d, d);
  for (int j = 0; j < d; ++j) out.col(j) = vecs.col(order[j]);
  return out;
}

/// Select the per-sector frames: diagonalize D2m at the center, permute the
/// dominant gradient direction into the first column, snap to the net with
/// the two-vector kick applied to (c_theta, grad m(c_theta)).
inline BasisChoice choose_sector_basis(const DispersionSymbol& sym,
                                       const SectorAtlas& atlas,
                                       const BasisNet& net,
                                       int samples_per_sector = 60,
                                       std::uint64_t seed = 43) {
  int d = sym.dim;
  BasisChoice choice;
  choice.frames.push_back(Mat::Identity(d, d));
  choice.frame_of_sector.assign(atlas.sectors.size(), 0);
  choice.checked.assign(atlas.sectors.size(), false);
  std::map<int, int> net_to_frame;
  double c_measured = 1.0;
  for (std::size_t si = 0; si < atlas.sectors.size(); ++si) {
    const Sector& s = atlas.sectors[si];
    if (s.scale < 2.0 * sym.c_max) continue;  // identity frame, unchecked
    Mat h = eval_symbol2(sym, s.center);
    Mat o = deterministic_eigenframe(h);
    Vec grad = eval_symbol1(sym, s.center);
    int dominant = 0;
    double best = -1.0;
    for (int j = 0; j < d; ++j) {
      double v = std::abs(grad.dot(o.col(j)));
      if (v > best) {
        best = v;
        dominant = j;
      }
    }
    o = o * axis_swap(d, dominant + 1);
    NetSelection sel = net_select(net, o, s.center, grad);
    auto it = net_to_frame.find(sel.member_index);
    int frame_idx;
    if (it == net_to_frame.end()) {
      frame_idx = static_cast<int>(choice.frames.size());
      choice.frames.push_back(net.members[sel.member_index]);
      net_to_frame[sel.member_index] = frame_idx;
    } else {
      frame_idx = it->second;
    }
    choice.frame_of_sector[si] = frame_idx;
    choice.checked[si] = true;
    auto rec = verify_basis_conditions(sym, atlas, s, choice.frames[frame_idx],
                                       samples_per_sector, split_seed(seed, si));
    c_measured = std::max(c_measured, rec.tightest_c);
  }
  choice.c_basis = c_measured;
  return choice;
}

inline const Mat& sector_frame(const BasisChoice& choice, std::size_t sector_idx) {
  return choice.frames[choice.frame_of_sector[sector_idx]];
}

}  // namespace gnls
