#ifndef SDDE_NOISE_HPP
#define SDDE_NOISE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "sdde/types.hpp"

namespace sdde {

/// Philox4x32-10 keyed counter block. Stateless: the output is a pure
/// function of (counter, key), which makes parallel path generation and
/// bit-exact replay trivial.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key);

/// Brownian increments on a uniform grid, variance dt each, reproducible
/// from (seed, stream). Streams index independent paths.
struct NoisePath {
  double dt = 0.0;
  std::vector<double> increments;
  uint64_t seed = 0;
  uint64_t stream = 0;
};

NoisePath make_noise(double dt, int steps, uint64_t seed, uint64_t stream = 0);

/// Sum increments in groups of `factor`, producing the same Brownian path
/// sampled on the coarser grid dt * factor.
NoisePath coarsen_noise(const NoisePath& fine, int factor);

/// Standard normal draw number `index` of the given (seed, stream) sequence.
double normal_draw(uint64_t seed, uint64_t stream, uint64_t index);

}  // namespace sdde

#endif
