#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace byol {

// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// Incremental SHA-256 for fingerprints built from many pieces.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  Sha256& update(std::span<const std::uint8_t> bytes);
  // Length-prefixed so concatenations of fields cannot collide.
  Sha256& field(std::string_view bytes);
  std::string hex();

 private:
  void* ctx_;
};

// Derives a per-stage seed from the global seed and a stage name.
std::uint64_t stage_seed(std::uint64_t global_seed, std::string_view stage);

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-based stream: output k depends only on (key, stream, k), so records
// processed in any order draw identical values.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream)
      : base_(splitmix64(key ^ splitmix64(stream + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t next() { return splitmix64(base_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates with CounterRng; identical output on every platform.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed, std::uint64_t stream = 0) {
  CounterRng rng(seed, stream);
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace byol
