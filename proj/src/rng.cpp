#include "topoforge/rng.hpp"

#include <cmath>
#include <numbers>

namespace topoforge {

double Rng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  Rng rng(base ^ (tag * 0xD1B54A32D192ED03ULL));
  rng.next();
  return rng.next();
}

}  // namespace topoforge
