#pragma once

// Shared error types, seed derivation and small random-number helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace alsim {

// Error categories. The CLI maps these onto distinct exit codes.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : error {
  using error::error;
};

struct data_error : error {
  using error::error;
};

struct parse_error : data_error {
  parse_error(std::size_t line, const std::string& what)
      : data_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Violated operation preconditions (bad sizes, invalid probability vectors...).
struct precondition_error : error {
  using error::error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw precondition_error(what);
}

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// FNV-1a; used to turn purpose tags into seed components.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Stable seed derivation: the same components always give the same seed,
// independent of call order or thread.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = detail::splitmix64(base);
  for (std::uint64_t p : parts) h = detail::splitmix64(h ^ detail::splitmix64(p));
  return h;
}

// Uniform double in [0,1) from a hashed key; order-independent per-item draws.
constexpr double hash_uniform(std::uint64_t key) noexcept {
  return static_cast<double>(detail::splitmix64(key) >> 11) * 0x1.0p-53;
}

using rng_t = std::mt19937_64;

inline double uniform01(rng_t& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// First k elements of a seeded partial Fisher-Yates shuffle of `items`.
template <class T>
std::vector<T> sample_without_replacement(std::vector<T> items, std::size_t k, std::uint64_t seed) {
  require(k <= items.size(), "sample size exceeds population");
  rng_t rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(k);
  return items;
}

template <class T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  rng_t rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
}

inline double sigmoid(double z) noexcept {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace alsim
