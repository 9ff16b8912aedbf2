#ifndef ERN_RNG_HPP
#define ERN_RNG_HPP

/* Counter-based deterministic generator ("splitmix64-counter"): draw i of
 * stream `seed` is splitmix64(seed + i).  Stateless and reproducible across
 * platforms; used for all randomized test suites.
 */

#include <cstdint>

namespace ern {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct CounterRng {
  std::uint64_t seed;
  std::uint64_t counter = 0;
  std::uint64_t next_u64() { return splitmix64(seed + counter++); }
  // uniform in [0,1)
  double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }
  // uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * next_double(); }
  // symmetric uniform in [-1,1)
  double sym() { return 2.0 * next_double() - 1.0; }
};

} // namespace ern

#endif
