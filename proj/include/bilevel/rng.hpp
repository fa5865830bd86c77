#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace bilevel {

/// Mixes a base seed with a stream name (FNV-1a + splitmix64) so that every
/// named stream of a run gets its own reproducible seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view stream_name);

/// A named, seeded random stream. Streams are never shared between oracle
/// kinds, so re-seeding one stream leaves all others bitwise unchanged.
class RngStream {
 public:
  RngStream(std::string name, std::uint64_t seed);
  static RngStream derived(std::uint64_t base_seed, std::string_view name);

  double gaussian();
  /// Uniform on {0, ..., count - 1}; count >= 1.
  std::size_t uniform_index(std::size_t count);

  const std::string& name() const { return name_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::string name_;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bilevel
