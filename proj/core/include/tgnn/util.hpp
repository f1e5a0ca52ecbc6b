#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace tgnn {

// SplitMix64 finalizer; used to derive independent RNG streams from one seed.
std::uint64_t splitmix64(std::uint64_t x);

// Deterministic child seed for a named stream (fold index, shuffle, dropout).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a over raw bytes; the fingerprint primitive for files and checkpoints.
std::uint64_t fnv1a64(const void* data, std::size_t len,
                      std::uint64_t state = 14695981039346656037ull);
std::uint64_t fnv1a64(const std::string& s, std::uint64_t state = 14695981039346656037ull);

std::string to_hex(std::uint64_t v);

// Uniform draws built directly on the mt19937_64 output so results do not
// depend on the standard library's distribution implementations.
double uniform_real(std::mt19937_64& rng, double lo, double hi);
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n);  // [0, n)

// In-place Fisher-Yates shuffle (std::shuffle is implementation-defined).
template <typename T>
void deterministic_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  if (v.size() < 2) return;
  for (std::size_t i = v.size() - 1; i > 0; --i) {
    std::size_t j = uniform_index(rng, i + 1);
    std::swap(v[i], v[j]);
  }
}

// Exact (bit round-tripping) text encoding of doubles via hexfloat.
std::string format_double_hex(double v);
double parse_double_hex(const std::string& s);

// Sum of a multiset of doubles in ascending value order. The result depends
// only on the multiset, not the order terms were produced in, which keeps
// relabeling invariances exact.
double ordered_sum(std::vector<double> terms);

std::string read_file_bytes(const std::string& path);
std::string file_fingerprint(const std::string& path);

}  // namespace tgnn
