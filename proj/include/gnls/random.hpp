#pragma once

#include <cstdint>
#include <complex>
#include <random>
#include <vector>

namespace gnls {

/// Seed splitter: derives independent sub-seeds from a root seed by
/// running splitmix64 over (root, stream). Every Monte Carlo draw in the
/// library obtains its generator through this function, so experiments
/// are reproducible from a single root seed.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
  std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t root, std::uint64_t stream) {
  return std::mt19937_64(split_seed(root, stream));
}

/// Stable 64-bit hash of a signed integer tuple, used to attach one random
/// coefficient to each unit lattice cell independently of iteration order.
inline std::uint64_t hash_lattice_point(std::uint64_t seed,
                                        const std::vector<long>& k) {
  std::uint64_t h = seed ^ 0x51'7c'c1'b7'27'22'0a'95ULL;
  for (long ki : k) {
    h = split_seed(h, static_cast<std::uint64_t>(ki) + 0x8000'0000'0000'0000ULL);
  }
  return h;
}

enum class RandomLaw { ComplexGaussian, RademacherPair, Ones };

/// Standard complex Gaussian: Re and Im are independent N(0, 1/2), so
/// E g = 0 and E |g|^2 = 1.
inline std::complex<double> draw_complex_gaussian(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  double re = n(rng);
  double im = n(rng);
  return {re, im};
}

/// Rademacher pair: (s1 + i s2)/sqrt(2) with independent signs s1, s2.
inline std::complex<double> draw_rademacher_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> b(0, 1);
  double re = b(rng) ? 1.0 : -1.0;
  double im = b(rng) ? 1.0 : -1.0;
  return {re / std::sqrt(2.0), im / std::sqrt(2.0)};
}

inline std::complex<double> draw_coefficient(RandomLaw law, std::mt19937_64& rng) {
  switch (law) {
    case RandomLaw::ComplexGaussian: return draw_complex_gaussian(rng);
    case RandomLaw::RademacherPair: return draw_rademacher_pair(rng);
    case RandomLaw::Ones: return {1.0, 0.0};  // degenerate law, testing only
  }
  return {0.0, 0.0};
}

}  // namespace gnls
