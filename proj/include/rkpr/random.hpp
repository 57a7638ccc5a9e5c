#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace rkpr {

/// Counter-based stream key: (base_seed, stream_index) fully determines the
/// draw sequence, so fan-out over runs/paths is reproducible regardless of
/// how many workers execute it.
struct SeededStream {
  std::uint64_t base_seed = 0;
  std::uint64_t stream_index = 0;

  SeededStream derived(std::uint64_t sub_index) const {
    // One splitmix step keeps derived families disjoint from plain indexing.
    return SeededStream{splitmix64(base_seed ^ splitmix64(stream_index + 0x632be59bd9b4e019ULL)),
                        sub_index};
  }

  static std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// Stateful sampler owned by one task. The engine is a standard-specified
/// mt19937_64 and every transform below is written out explicitly, so the
/// sequence for a given key is identical across platforms and stdlibs.
class RandomStream {
 public:
  explicit RandomStream(SeededStream key)
      : engine_(SeededStream::splitmix64(SeededStream::splitmix64(key.base_seed) ^
                                         SeededStream::splitmix64(key.stream_index * 0x9e3779b97f4a7c15ULL + 1))) {}

  RandomStream(std::uint64_t base_seed, std::uint64_t stream_index)
      : RandomStream(SeededStream{base_seed, stream_index}) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via the Marsaglia polar method (no libm trig).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Gamma(shape, scale) via Marsaglia–Tsang, boosted for shape < 1.
  double gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw std::invalid_argument("gamma: shape and scale must be > 0");
    if (shape < 1.0) {
      double u = uniform();
      while (u == 0.0) u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double D = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * D);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return D * v * scale;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + D * (1.0 - v + std::log(v))) return D * v * scale;
    }
  }

  double chi_square(double dof) { return gamma(0.5 * dof, 2.0); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform draw from the sphere of radius sqrt(d) in R^d.
inline std::vector<double> sample_sphere_vector(std::int64_t d, RandomStream& stream) {
  if (d < 1) throw std::invalid_argument("sample_sphere_vector: dimension must be >= 1");
  std::vector<double> a(static_cast<size_t>(d));
  double norm_sq = 0.0;
  do {
    norm_sq = 0.0;
    for (auto& ai : a) {
      ai = stream.normal();
      norm_sq += ai * ai;
    }
  } while (norm_sq == 0.0);
  const double scale = std::sqrt(static_cast<double>(d) / norm_sq);
  for (auto& ai : a) ai *= scale;
  return a;
}

/// First two coordinates of a sqrt(d)-sphere vector, in O(1) per draw:
/// (u, v) = sqrt(d) (g1, g2) / sqrt(g1^2 + g2^2 + S) with S ~ chi^2_{d-2}.
inline std::pair<double, double> sample_uv_marginal(std::int64_t d, RandomStream& stream) {
  if (d < 3) throw std::invalid_argument("sample_uv_marginal: dimension must be >= 3");
  const double g1 = stream.normal();
  const double g2 = stream.normal();
  const double rest = stream.chi_square(static_cast<double>(d - 2));
  const double scale = std::sqrt(static_cast<double>(d) / (g1 * g1 + g2 * g2 + rest));
  return {g1 * scale, g2 * scale};
}

inline double sample_gaussian(RandomStream& stream) { return stream.normal(); }

}  // namespace rkpr
