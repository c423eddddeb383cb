#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace ctxjudge {

// mt19937_64 has a fully specified output sequence; the standard
// distributions do not, so bounded draws and shuffles are done here to keep
// runs byte-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = (~std::uint64_t{0} - bound + 1) % bound;
    while (true) {
      const std::uint64_t r = engine_();
      if (r >= limit) return r % bound;
    }
  }

  // Uniform real in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ctxjudge
