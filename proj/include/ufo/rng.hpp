#pragma once

#include <cstdint>
#include <string_view>

#include "ufo/matrix.hpp"

namespace ufo {

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view text) noexcept;

// Counter-based generator: draw i of stream (name, seed) is a pure function
// of (name, seed, i). Streams with different names are independent.
class CounterRng {
 public:
  CounterRng(std::string_view stream, std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  double normal() noexcept;
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;
  double exponential(double rate = 1.0) noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

Matrix seeded_normal(std::size_t rows, std::size_t cols, std::string_view stream, std::uint64_t seed);
Matrix seeded_uniform(std::size_t rows, std::size_t cols, double lo, double hi,
                      std::string_view stream, std::uint64_t seed);

}  // namespace ufo
