#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace hypo {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: output n is mix64(key + (n + 1) * gamma), where the key
/// depends only on (master seed, stream index). Streams never share state, so
/// results do not depend on which thread draws them.
class Stream {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  Stream(std::uint64_t master_seed, std::uint64_t index)
      : key_(mix64(master_seed ^ mix64(index + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * kGamma); }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Standard normal draws from a Stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t master_seed, std::uint64_t index) : stream_(master_seed, index) {}

  double operator()() { return normal_(stream_); }

  Stream& engine() { return stream_; }

 private:
  Stream stream_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace hypo
