#include "tgnn/util.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tgnn/errors.hpp"

namespace tgnn {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
}

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t state) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state ^= p[i];
    state *= 1099511628211ull;
  }
  return state;
}

std::uint64_t fnv1a64(const std::string& s, std::uint64_t state) {
  return fnv1a64(s.data(), s.size(), state);
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa draw in [0, 1).
  double u = static_cast<double>(rng() >> 11) * 0x1p-53;
  return lo + (hi - lo) * u;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw DomainError("uniform_index: n must be positive");
  return static_cast<std::size_t>(rng() % n);
}

std::string format_double_hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double_hex(const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw DataError("cannot parse float value: " + s);
  return v;
}

double ordered_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += t;
  return acc;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_fingerprint(const std::string& path) {
  std::string bytes = read_file_bytes(path);
  return to_hex(fnv1a64(bytes.data(), bytes.size()));
}

}  // namespace tgnn
