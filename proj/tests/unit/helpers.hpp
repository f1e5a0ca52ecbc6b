#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tgnn/tensor.hpp"

namespace test_helpers {

inline void check_close(const std::vector<double>& actual, const std::vector<double>& expected,
                        double tol) {
  REQUIRE(actual.size() == expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    INFO("index ", i);
    CHECK(actual[i] == doctest::Approx(expected[i]).epsilon(0).scale(0).epsilon(tol));
  }
}

inline void check_abs_close(const std::vector<double>& actual, const std::vector<double>& expected,
                            double tol) {
  REQUIRE(actual.size() == expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    INFO("index ", i);
    CHECK(std::fabs(actual[i] - expected[i]) <= tol);
  }
}

inline void check_exact(const std::vector<double>& actual, const std::vector<double>& expected) {
  REQUIRE(actual.size() == expected.size());
  for (std::size_t i = 0; i < actual.size(); ++i) {
    INFO("index ", i);
    CHECK(actual[i] == expected[i]);
  }
}

// Naive triple-loop product, the independent matmul oracle.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                        std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
    }
  }
  return c;
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) {
    x = lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1p-53);
  }
  return v;
}

}  // namespace test_helpers
