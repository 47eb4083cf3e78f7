#include "sdde/noise.hpp"

#include <cmath>
#include <string>

namespace sdde {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
  const uint64_t prod = static_cast<uint64_t>(a) * static_cast<uint64_t>(b);
  hi = static_cast<uint32_t>(prod >> 32);
  lo = static_cast<uint32_t>(prod);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key) {
  std::array<uint32_t, 4> c = counter;
  uint32_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return c;
}

double normal_draw(uint64_t seed, uint64_t stream, uint64_t index) {
  const uint64_t block = index / 2;
  const std::array<uint32_t, 4> counter = {
      static_cast<uint32_t>(stream), static_cast<uint32_t>(stream >> 32),
      static_cast<uint32_t>(block), static_cast<uint32_t>(block >> 32)};
  const std::array<uint32_t, 2> key = {static_cast<uint32_t>(seed),
                                       static_cast<uint32_t>(seed >> 32)};
  const auto out = philox4x32(counter, key);
  const uint64_t a = (static_cast<uint64_t>(out[1]) << 32) | out[0];
  const uint64_t b = (static_cast<uint64_t>(out[3]) << 32) | out[2];
  // u1 in (0, 1], u2 in [0, 1)
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1p-53;
  const double u2 = static_cast<double>(b >> 11) * 0x1p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  return (index % 2 == 0) ? r * std::cos(kTwoPi * u2) : r * std::sin(kTwoPi * u2);
}

NoisePath make_noise(double dt, int steps, uint64_t seed, uint64_t stream) {
  if (!(dt > 0.0)) throw DomainError("make_noise: dt must be positive");
  if (steps < 0) throw DomainError("make_noise: steps must be >= 0");
  NoisePath path;
  path.dt = dt;
  path.seed = seed;
  path.stream = stream;
  path.increments.resize(static_cast<size_t>(steps));
  const double scale = std::sqrt(dt);
  for (int i = 0; i < steps; ++i) {
    path.increments[static_cast<size_t>(i)] =
        scale * normal_draw(seed, stream, static_cast<uint64_t>(i));
  }
  return path;
}

NoisePath coarsen_noise(const NoisePath& fine, int factor) {
  if (factor < 1) throw DomainError("coarsen_noise: factor must be >= 1");
  if (fine.increments.size() % static_cast<size_t>(factor) != 0) {
    throw DomainError("coarsen_noise: step count not divisible by factor");
  }
  NoisePath coarse;
  coarse.dt = fine.dt * factor;
  coarse.seed = fine.seed;
  coarse.stream = fine.stream;
  coarse.increments.resize(fine.increments.size() / static_cast<size_t>(factor));
  for (size_t i = 0; i < coarse.increments.size(); ++i) {
    double acc = 0.0;
    for (int j = 0; j < factor; ++j) {
      acc += fine.increments[i * static_cast<size_t>(factor) + static_cast<size_t>(j)];
    }
    coarse.increments[i] = acc;
  }
  return coarse;
}

}  // namespace sdde
