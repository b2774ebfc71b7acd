#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "gnls/random.hpp"

namespace gnls {

using Complex = std::complex<double>;

/// Periodic spatial grid: d axes, period L each, M points per axis with M a
/// power of two. Induced frequency lattice is (1/L) Z^d truncated to integer
/// indexes j in [-M/2, M/2). Samples are stored row-major over the axes.
struct TorusGrid {
  int dim = 1;
  double period = 1.0;
  int points = 16;

  TorusGrid() = default;
  TorusGrid(int d, double L, int M) : dim(d), period(L), points(M) {
    if (d < 1) throw std::invalid_argument("grid dim must be >= 1");
    if (L <= 0.0) throw std::invalid_argument("grid period must be positive");
    if (M < 2 || (M & (M - 1)) != 0)
      throw std::invalid_argument("grid points per axis must be a power of two");
  }

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
    return n;
  }
  double spacing() const { return period / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double freq_cell_volume() const { return std::pow(1.0 / period, dim); }
  double nyquist() const { return points / (2.0 * period); }

  /// Signed integer mode for a storage index along one axis.
  int mode(int i) const { return i < points / 2 ? i : i - points; }
  /// Frequency coordinate of a storage index along one axis.
  double freq(int i) const { return mode(i) / period; }
  /// Physical coordinate of a storage index along one axis.
  double coord(int i) const { return i * spacing(); }

  void unflatten(std::size_t idx, int* out) const {
    for (int a = dim - 1; a >= 0; --a) {
      out[a] = static_cast<int>(idx % points);
      idx /= points;
    }
  }
  std::size_t flatten(const int* ix) const {
    std::size_t idx = 0;
    for (int a = 0; a < dim; ++a) {
      int i = ix[a] % points;
      if (i < 0) i += points;
      idx = idx * points + static_cast<std::size_t>(i);
    }
    return idx;
  }

  bool operator==(const TorusGrid& o) const {
    return dim == o.dim && period == o.period && points == o.points;
  }
};

enum class Register { Space, Frequency };

/// Complex samples on a TorusGrid, in either the space or frequency register.
/// The frequency register holds Riemann approximations of the continuum
/// Fourier transform at lattice frequencies.
struct LatticeField {
  TorusGrid grid;
  Register reg = Register::Space;
  std::vector<Complex> samples;
  bool band_limit_warning = false;

  LatticeField() = default;
  LatticeField(const TorusGrid& g, Register r)
      : grid(g), reg(r), samples(g.size(), Complex(0.0, 0.0)) {}

  Complex& operator[](std::size_t i) { return samples[i]; }
  const Complex& operator[](std::size_t i) const { return samples[i]; }
};

inline void require_same_grid(const LatticeField& a, const LatticeField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("grid mismatch");
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

namespace detail {

// The FFTW planner is a global resource; plan creation must be serialized.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline void run_fftw(const TorusGrid& g, std::vector<Complex>& data, int sign) {
  std::vector<int> n(g.dim, g.points);
  fftw_complex* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft(g.dim, n.data(), ptr, ptr, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fftw plan creation failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace detail

/// Change register. Forward (space -> frequency) multiplies the DFT by the
/// cell volume (L/M)^d; backward by (1/L)^d. The pair is an exact inverse and
/// Plancherel holds between the Riemann quadratures of the two registers.
inline LatticeField transform(const LatticeField& f, Register target) {
  if (f.reg == target) return f;
  LatticeField out = f;
  if (target == Register::Frequency) {
    detail::run_fftw(f.grid, out.samples, FFTW_FORWARD);
    double scale = f.grid.cell_volume();
    for (auto& c : out.samples) c *= scale;
  } else {
    detail::run_fftw(f.grid, out.samples, FFTW_BACKWARD);
    double scale = f.grid.freq_cell_volume();
    for (auto& c : out.samples) c *= scale;
  }
  out.reg = target;
  return out;
}

inline LatticeField to_frequency(const LatticeField& f) {
  return transform(f, Register::Frequency);
}
inline LatticeField to_space(const LatticeField& f) {
  return transform(f, Register::Space);
}

// ---------------------------------------------------------------------------
// Norms (Riemann quadrature on the grid)
// ---------------------------------------------------------------------------

inline double lp_norm(const LatticeField& f, double p) {
  double cell = f.reg == Register::Space ? f.grid.cell_volume()
                                         : f.grid.freq_cell_volume();
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& c : f.samples) m = std::max(m, std::abs(c));
    return m;
  }
  double acc = 0.0;
  for (const auto& c : f.samples) acc += std::pow(std::abs(c), p);
  return std::pow(acc * cell, 1.0 / p);
}

inline double l2_norm(const LatticeField& f) { return lp_norm(f, 2.0); }

inline double l2_distance(const LatticeField& a, const LatticeField& b) {
  require_same_grid(a, b);
  if (a.reg != b.reg) throw std::invalid_argument("register mismatch");
  double cell = a.reg == Register::Space ? a.grid.cell_volume()
                                         : a.grid.freq_cell_volume();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i)
    acc += std::norm(a.samples[i] - b.samples[i]);
  return std::sqrt(acc * cell);
}

// ---------------------------------------------------------------------------
// Unit-scale projections and Wiener randomization
// ---------------------------------------------------------------------------

namespace detail {

inline double bump(double x) {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

}  // namespace detail

/// 1D window psi1 with supp psi1 = [-1,1] and sum_j psi1(x - j) = 1 exactly:
/// a compactly supported bump normalized against its integer translates. The
/// d-dimensional window is the tensor product, so its support is the unit
/// cube rather than the unit ball; see the project README for the deviation.
inline double unit_window_1d(double x) {
  double num = detail::bump(x);
  if (num == 0.0) return 0.0;
  // The translate sum is 1-periodic and only j in {floor(x)-1, .., floor(x)+1}
  // can contribute, so this denominator equals sum_{j in Z} bump(x - j).
  double fl = std::floor(x);
  double den = 0.0;
  for (double j = fl - 1.0; j <= fl + 1.0; j += 1.0) den += detail::bump(x - j);
  return num / den;
}

inline double unit_window(const TorusGrid& g, const double* xi, const long* k) {
  double w = 1.0;
  for (int a = 0; a < g.dim; ++a) {
    w *= unit_window_1d(xi[a] - static_cast<double>(k[a]));
    if (w == 0.0) return 0.0;
  }
  return w;
}

/// Q_k: multiply the spectrum by psi(xi - k) for an integer lattice point k.
inline LatticeField unit_projection(const LatticeField& f,
                                    const std::vector<long>& k) {
  if (static_cast<int>(k.size()) != f.grid.dim)
    throw std::invalid_argument("lattice point dimension mismatch");
  for (long ka : k) {
    if (std::abs(ka) + 1.0 > f.grid.nyquist())
      throw std::out_of_range("unit projection beyond grid Nyquist");
  }
  LatticeField fhat = to_frequency(f);
  std::vector<int> ix(f.grid.dim);
  std::vector<double> xi(f.grid.dim);
  for (std::size_t i = 0; i < fhat.samples.size(); ++i) {
    fhat.grid.unflatten(i, ix.data());
    for (int a = 0; a < f.grid.dim; ++a) xi[a] = fhat.grid.freq(ix[a]);
    fhat.samples[i] *= unit_window(f.grid, xi.data(), k.data());
  }
  return f.reg == Register::Space ? to_space(fhat) : fhat;
}

/// One realization of the i.i.d. coefficients (g_k). Coefficients are
/// attached to lattice cells through a stable hash of k, so the draw does not
/// depend on any iteration order and extends to every cell the grid reaches.
struct RandomDraw {
  std::uint64_t seed = 0;
  RandomLaw law = RandomLaw::ComplexGaussian;

  Complex coefficient(const std::vector<long>& k) const {
    std::mt19937_64 rng(hash_lattice_point(seed, k));
    return draw_coefficient(law, rng);
  }
};

/// Wiener randomization f^omega = sum_k g_k Q_k f assembled as a finite
/// lattice sum: at each grid frequency only the <= 2^d unit cells whose
/// window reaches it contribute.
inline LatticeField randomize(const LatticeField& f, const RandomDraw& draw) {
  if (f.reg != Register::Frequency)
    throw std::invalid_argument("randomize expects the frequency register");
  LatticeField out = f;
  int d = f.grid.dim;
  std::vector<int> ix(d);
  std::vector<double> xi(d);
  std::vector<long> k(d), lo(d), hi(d);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    if (f.samples[i] == Complex(0.0, 0.0)) continue;
    f.grid.unflatten(i, ix.data());
    for (int a = 0; a < d; ++a) {
      xi[a] = f.grid.freq(ix[a]);
      lo[a] = static_cast<long>(std::ceil(xi[a])) - 1;
      hi[a] = static_cast<long>(std::floor(xi[a])) + 1;
    }
    Complex mult(0.0, 0.0);
    // walk the <= 3^d integer cells within distance 1 per axis
    std::vector<long> cur = lo;
    while (true) {
      double w = 1.0;
      for (int a = 0; a < d && w != 0.0; ++a)
        w *= unit_window_1d(xi[a] - static_cast<double>(cur[a]));
      if (w != 0.0) mult += w * draw.coefficient(cur);
      int a = d - 1;
      while (a >= 0) {
        if (++cur[a] <= hi[a]) break;
        cur[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
    out.samples[i] *= mult;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Space-time fields
// ---------------------------------------------------------------------------

/// Uniform time grid on the interval [t0, t1].
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int count = 128;

  TimeGrid() = default;
  TimeGrid(double a, double b, int n) : t0(a), t1(b), count(n) {
    if (!(b > a)) throw std::invalid_argument("time interval must have positive length");
    if (n < 2) throw std::invalid_argument("time grid needs at least 2 samples");
  }
  double dt() const { return (t1 - t0) / (count - 1); }
  double time(int i) const { return t0 + i * dt(); }
  bool operator==(const TimeGrid& o) const {
    return t0 == o.t0 && t1 == o.t1 && count == o.count;
  }
};

/// One LatticeField per time sample, all on the same spatial grid.
struct SpaceTimeField {
  TimeGrid tgrid;
  std::vector<LatticeField> slices;

  SpaceTimeField() = default;
  SpaceTimeField(const TimeGrid& tg, const TorusGrid& g, Register r)
      : tgrid(tg), slices(tg.count, LatticeField(g, r)) {}

  const TorusGrid& grid() const { return slices.front().grid; }
  LatticeField& at(int i) { return slices[i]; }
  const LatticeField& at(int i) const { return slices[i]; }
};

inline void require_same_grids(const SpaceTimeField& a, const SpaceTimeField& b) {
  if (!(a.tgrid == b.tgrid)) throw std::invalid_argument("time grid mismatch");
  require_same_grid(a.slices.front(), b.slices.front());
}

/// Discrete L^2([t0,t1]; L^2) norm (trapezoid in time).
inline double l2l2_norm(const SpaceTimeField& u) {
  double acc = 0.0;
  for (int i = 0; i < u.tgrid.count; ++i) {
    double w = (i == 0 || i == u.tgrid.count - 1) ? 0.5 : 1.0;
    double n = l2_norm(u.at(i));
    acc += w * n * n * u.tgrid.dt();
  }
  return std::sqrt(acc);
}

inline double l2l2_distance(const SpaceTimeField& a, const SpaceTimeField& b) {
  require_same_grids(a, b);
  double acc = 0.0;
  for (int i = 0; i < a.tgrid.count; ++i) {
    double w = (i == 0 || i == a.tgrid.count - 1) ? 0.5 : 1.0;
    double n = l2_distance(a.at(i), b.at(i));
    acc += w * n * n * a.tgrid.dt();
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Field I/O: 16-byte header, little-endian float64 payload, row-major.
// ---------------------------------------------------------------------------

namespace detail {

inline bool host_is_little_endian() {
  std::uint16_t probe = 1;
  std::uint8_t first;
  std::memcpy(&first, &probe, 1);
  return first == 1;
}

}  // namespace detail

inline void save_field(const LatticeField& f, const std::string& path) {
  if (!detail::host_is_little_endian())
    throw std::runtime_error("field files are little-endian only");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char magic[8] = {'G', 'N', 'L', 'S', 'F', 'L', 'D', '\0'};
  out.write(magic, 8);
  std::uint8_t version = 1;
  std::uint8_t endian = 1;  // 1 = little-endian payload
  std::uint8_t dim = static_cast<std::uint8_t>(f.grid.dim);
  std::uint8_t reg = f.reg == Register::Space ? 0 : 1;
  std::uint32_t points = static_cast<std::uint32_t>(f.grid.points);
  out.write(reinterpret_cast<const char*>(&version), 1);
  out.write(reinterpret_cast<const char*>(&endian), 1);
  out.write(reinterpret_cast<const char*>(&dim), 1);
  out.write(reinterpret_cast<const char*>(&reg), 1);
  out.write(reinterpret_cast<const char*>(&points), 4);
  double period = f.grid.period;
  out.write(reinterpret_cast<const char*>(&period), 8);
  out.write(reinterpret_cast<const char*>(f.samples.data()),
            static_cast<std::streamsize>(f.samples.size() * sizeof(Complex)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline LatticeField load_field(const std::string& path) {
  if (!detail::host_is_little_endian())
    throw std::runtime_error("field files are little-endian only");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  static const char expect[8] = {'G', 'N', 'L', 'S', 'F', 'L', 'D', '\0'};
  if (!in || std::memcmp(magic, expect, 8) != 0)
    throw std::runtime_error("not a field file: " + path);
  std::uint8_t version, endian, dim, reg;
  std::uint32_t points;
  double period;
  in.read(reinterpret_cast<char*>(&version), 1);
  in.read(reinterpret_cast<char*>(&endian), 1);
  in.read(reinterpret_cast<char*>(&dim), 1);
  in.read(reinterpret_cast<char*>(&reg), 1);
  in.read(reinterpret_cast<char*>(&points), 4);
  in.read(reinterpret_cast<char*>(&period), 8);
  if (!in) throw std::runtime_error("truncated field header: " + path);
  if (version != 1) throw std::runtime_error("unsupported field file version");
  if (endian != 1)
    throw std::runtime_error("field file declares non-little-endian payload");
  LatticeField f(TorusGrid(dim, period, static_cast<int>(points)),
                 reg == 0 ? Register::Space : Register::Frequency);
  in.read(reinterpret_cast<char*>(f.samples.data()),
          static_cast<std::streamsize>(f.samples.size() * sizeof(Complex)));
  if (!in) throw std::runtime_error("truncated field payload: " + path);
  return f;
}

// ---------------------------------------------------------------------------
// Helpers for building test and experiment data
// ---------------------------------------------------------------------------

/// Random complex-Gaussian spectrum restricted by a frequency predicate.
template <typename Pred>
LatticeField random_spectrum(const TorusGrid& g, std::mt19937_64& rng,
                             Pred&& keep) {
  LatticeField f(g, Register::Frequency);
  std::vector<int> ix(g.dim);
  std::vector<double> xi(g.dim);
  for (std::size_t i = 0; i < f.samples.size(); ++i) {
    g.unflatten(i, ix.data());
    for (int a = 0; a < g.dim; ++a) xi[a] = g.freq(ix[a]);
    if (keep(xi)) f.samples[i] = draw_complex_gaussian(rng);
  }
  return f;
}

inline LatticeField scale_to_l2(const LatticeField& f, double target) {
  LatticeField out = f;
  double n = l2_norm(f);
  if (n == 0.0) return out;
  for (auto& c : out.samples) c *= target / n;
  return out;
}

}  // namespace gnls
