#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace survbias {

// Portable, seedable generator. All randomness in the project flows through
// this type so results do not depend on the standard library's distributions.
class Rng {
public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);
  // Uniform double in [0, 1).
  double uniform();
  double normal();

  // Uniform sample of k distinct indices from [0, n), in draw order.
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);
  void shuffle(std::span<std::size_t> v);

private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Child seed for a numbered substream (tree index, iteration, repetition ...).
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);
// Child seed for a named substream ("preprocess", "sweep", ...).
std::uint64_t derive_seed(std::uint64_t parent, std::string_view name);

}  // namespace survbias
