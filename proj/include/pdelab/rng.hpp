#pragma once

#include <cstdint>
#include <random>

#include "pdelab/vec.hpp"

namespace pdelab {

/// Identifies one reproducible random stream. Equal (seed, stream_id) pairs
/// yield identical draws regardless of host, thread count or call site.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Combines a seed and a stream id into one well-mixed 64-bit engine seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream_id);

/// Random source for one stream. The engine is mt19937_64 (fully specified by
/// the standard); the variate transforms come from Boost.Random, whose
/// algorithms are fixed in the header and do not vary between toolchains.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(RngStream stream);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Gamma with the given shape and unit scale.
  double gamma(double shape);
  double chi_square(double df) { return 2.0 * gamma(0.5 * df); }
  /// Inverse-gamma(shape, rate): rate / Gamma(shape, 1).
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }

  void fill_normal(std::span<double> out);
  /// Uniform direction on the unit sphere S^{n-1}, written to `out` (size n).
  void unit_vector(std::span<double> out);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdelab
