#include "bilevel/rng.hpp"

namespace bilevel {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base_seed, std::string_view stream_name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : stream_name) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(base_seed) ^ h);
}

RngStream::RngStream(std::string name, std::uint64_t seed)
    : name_(std::move(name)), seed_(seed), engine_(seed) {}

RngStream RngStream::derived(std::uint64_t base_seed, std::string_view name) {
  return RngStream(std::string(name), derive_seed(base_seed, name));
}

double RngStream::gaussian() { return normal_(engine_); }

std::size_t RngStream::uniform_index(std::size_t count) {
  std::uniform_int_distribution<std::size_t> dist(0, count - 1);
  return dist(engine_);
}

}  // namespace bilevel
