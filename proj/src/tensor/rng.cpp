#include "ufo/rng.hpp"

#include <cmath>
#include <numbers>

namespace ufo {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CounterRng::CounterRng(std::string_view stream, std::uint64_t seed) noexcept
    : key_(splitmix64(fnv1a64(stream) ^ splitmix64(seed))) {}

std::uint64_t CounterRng::next_u64() noexcept {
  // Two rounds of mixing over (key, counter) keep adjacent counters apart.
  const std::uint64_t c = counter_++;
  return splitmix64(splitmix64(key_ ^ (c * 0xd1b54a32d192ed03ULL)) + key_);
}

double CounterRng::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform(), u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double th = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(th);
  has_spare_ = true;
  return r * std::cos(th);
}

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double CounterRng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

Matrix seeded_normal(std::size_t rows, std::size_t cols, std::string_view stream, std::uint64_t seed) {
  CounterRng rng(stream, seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal();
  return m;
}

Matrix seeded_uniform(std::size_t rows, std::size_t cols, double lo, double hi, std::string_view stream,
                      std::uint64_t seed) {
  CounterRng rng(stream, seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace ufo
