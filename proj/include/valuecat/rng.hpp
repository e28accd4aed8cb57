#ifndef VALUECAT_RNG_HPP
#define VALUECAT_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace valuecat {

// All sampling in the project goes through these helpers. std::mt19937_64 is
// fully specified by the standard; the bounded draw and the shuffle are
// implemented here (not via std::uniform_int_distribution / std::shuffle,
// whose algorithms are implementation-defined) so id sets are identical
// across platforms and standard libraries.

inline std::uint64_t bounded_uint64(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t value;
  do {
    value = rng();
  } while (value >= limit);
  return value % bound;
}

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  // Fisher-Yates.
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded_uint64(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  deterministic_shuffle(items, rng);
}

}  // namespace valuecat

#endif
