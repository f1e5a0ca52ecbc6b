#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "tgnn/autodiff.hpp"
#include "tgnn/gat.hpp"
#include "tgnn/util.hpp"

using namespace tgnn;
using test_helpers::check_abs_close;
using test_helpers::check_exact;
using test_helpers::random_values;

namespace {

Neighborhood nb_from(std::vector<std::vector<std::size_t>> lists) {
  Neighborhood nb;
  nb.neighbors = std::move(lists);
  return nb;
}

GatParams identity_gat(Tape& tape, std::size_t d) {
  std::vector<double> v(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;
  return GatParams{tape.make({d, d}, std::move(v), true)};
}

// Random parent tree on n nodes: parent(i) uniform over earlier nodes.
Neighborhood random_tree(std::size_t n, std::mt19937_64& rng, std::vector<std::size_t>* parents) {
  std::vector<std::vector<std::size_t>> lists(n);
  std::vector<std::set<std::size_t>> sets(n);
  for (std::size_t i = 0; i < n; ++i) sets[i].insert(i);
  for (std::size_t i = 1; i < n; ++i) {
    std::size_t p = uniform_index(rng, i);
    if (parents) parents->push_back(p);
    sets[i].insert(p);
    sets[p].insert(i);
  }
  for (std::size_t i = 0; i < n; ++i) lists[i].assign(sets[i].begin(), sets[i].end());
  return nb_from(std::move(lists));
}

}  // namespace

TEST_CASE("orthogonal features have zero coefficient under the identity weight") {
  Tape tape;
  Tensor f = tape.make({2, 2}, {1.0, 0.0, 0.0, 1.0});  // columns e1, e2
  auto coeffs = gat_coefficients(f, nb_from({{0, 1}, {0, 1}}), identity_gat(tape, 2));
  CHECK(coeffs[{0, 1}] == 0.0);
  CHECK(coeffs[{0, 0}] == 1.0);  // |e1|^2
}

TEST_CASE("equal features give the squared norm") {
  Tape tape;
  Tensor f = tape.make({3, 2}, {1, 1, 2, 2, 3, 3});  // both columns [1,2,3]
  auto coeffs = gat_coefficients(f, nb_from({{0, 1}, {0, 1}}), identity_gat(tape, 3));
  CHECK(coeffs[{0, 1}] == doctest::Approx(14.0));
}

TEST_CASE("coefficients match the explicit (W f_i)^T (W f_j) expansion") {
  Tape tape;
  std::mt19937_64 rng(2), init(3);
  Tensor f = tape.make({3, 2}, random_values(rng, 6));
  GatParams params = make_gat(tape, 3, init);
  auto coeffs = gat_coefficients(f, nb_from({{0, 1}, {0, 1}}), params);
  // oracle: project both columns by hand, then dot
  double proj[2][3] = {{0, 0, 0}, {0, 0, 0}};
  for (int col = 0; col < 2; ++col) {
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t k = 0; k < 3; ++k) {
        proj[col][r] += params.weight.at(r, k) * f.at(k, static_cast<std::size_t>(col));
      }
    }
  }
  double expected = proj[0][0] * proj[1][0] + proj[0][1] * proj[1][1] + proj[0][2] * proj[1][2];
  CHECK(coeffs[{0, 1}] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("coefficients are exactly symmetric") {
  Tape tape;
  std::mt19937_64 rng(4), init(5);
  std::size_t n = 5;
  Tensor f = tape.make({4, n}, random_values(rng, 4 * n));
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  Neighborhood nb = nb_from(std::vector<std::vector<std::size_t>>(n, all));
  auto coeffs = gat_coefficients(f, nb, make_gat(tape, 4, init));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) CHECK(coeffs[{i, j}] == coeffs[{j, i}]);
  }
}

TEST_CASE("an isolated node keeps its feature exactly") {
  Tape tape;
  std::mt19937_64 init(6);
  Tensor f = tape.make({3, 2}, {0.5, -1.0, 2.0, 0.25, -0.125, 4.0});
  GatParams params = make_gat(tape, 3, init);
  Tensor out = gat_forward(f, nb_from({{0}, {1}}), params, true);
  CHECK(column(out, 0).values() == column(f, 0).values());
  CHECK(column(out, 1).values() == column(f, 1).values());
}

TEST_CASE("two equal-feature nodes halve under the strict prefactor") {
  Tape tape;
  std::mt19937_64 init(7);
  Tensor f = tape.make({3, 2}, {1, 1, -2, -2, 0.5, 0.5});
  GatParams params = make_gat(tape, 3, init);
  Tensor out = gat_forward(f, nb_from({{0, 1}, {0, 1}}), params, true);
  check_abs_close(column(out, 0).values(), {0.5, -1.0, 0.25}, 1e-12);
  check_abs_close(column(out, 1).values(), {0.5, -1.0, 0.25}, 1e-12);
  // dropping the prefactor recovers the plain softmax-weighted sum: f itself
  Tensor plain = gat_forward(f, nb_from({{0, 1}, {0, 1}}), params, false);
  check_abs_close(column(plain, 0).values(), {1.0, -2.0, 0.5}, 1e-12);
}

TEST_CASE("star of identical features keeps the quarter scale at the center") {
  Tape tape;
  Tensor f = tape.make({2, 4}, {1, 1, 1, 1, -3, -3, -3, -3});
  Neighborhood nb = nb_from({{0, 1, 2, 3}, {0, 1}, {0, 2}, {0, 3}});
  Tensor out = gat_forward(f, nb, identity_gat(tape, 2), true);
  check_abs_close(column(out, 0).values(), {0.25, -0.75}, 1e-12);
  check_abs_close(column(out, 1).values(), {0.5, -1.5}, 1e-12);
}

TEST_CASE("attention weights sum to one for every node") {
  std::mt19937_64 rng(8), init(9);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    std::size_t n = 2 + uniform_index(rng, 6);
    Tensor f = tape.make({4, n}, random_values(rng, 4 * n, -3.0, 3.0));
    Neighborhood nb = random_tree(n, rng, nullptr);
    auto alphas = gat_attention(f, nb, make_gat(tape, 4, init));
    for (const auto& row : alphas) {
      double total = 0.0;
      for (double a : row) {
        CHECK(a > 0.0);
        CHECK(a < 1.0 + 1e-12);
        total += a;
      }
      CHECK(std::fabs(total - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("gat_forward is exactly equivariant under node relabeling") {
  std::mt19937_64 rng(10), init(11);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    std::size_t n = 6;
    std::size_t d = 3;
    auto fv = random_values(rng, d * n, -2.0, 2.0);
    Tensor f = tape.make({d, n}, fv);
    Neighborhood nb = random_tree(n, rng, nullptr);
    GatParams params = make_gat(tape, d, init);
    Tensor base = gat_forward(f, nb, params, true);

    // random permutation pi: new index of old node i is pi[i]
    std::vector<std::size_t> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = i;
    deterministic_shuffle(pi, rng);
    std::vector<double> pv(d * n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) pv[r * n + pi[i]] = fv[r * n + i];
    }
    std::vector<std::vector<std::size_t>> lists(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : nb.neighbors[i]) lists[pi[i]].push_back(pi[j]);
      // keep neighbor lists sorted under the new labels
    }
    for (auto& l : lists) std::sort(l.begin(), l.end());
    Tensor fp = tape.make({d, n}, pv);
    Tensor permuted = gat_forward(fp, nb_from(std::move(lists)), params, true);

    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t r = 0; r < d; ++r) {
        CHECK(permuted.at(r, pi[i]) == base.at(r, i));
      }
    }
  }
}

TEST_CASE("aggregation never mixes non-neighbors") {
  Tape tape;
  std::mt19937_64 rng(12), init(13);
  // chain 0-1-2-3; node 3 is no neighbor of 0 or 1
  Neighborhood nb = nb_from({{0, 1}, {0, 1, 2}, {1, 2, 3}, {2, 3}});
  auto fv = random_values(rng, 3 * 4);
  Tensor f = tape.make({3, 4}, fv);
  GatParams params = make_gat(tape, 3, init);
  Tensor base = gat_forward(f, nb, params, true);

  auto zeroed = fv;
  for (std::size_t r = 0; r < 3; ++r) zeroed[r * 4 + 3] = 0.0;
  Tensor fz = tape.make({3, 4}, zeroed);
  Tensor out = gat_forward(fz, nb, params, true);
  CHECK(column(out, 0).values() == column(base, 0).values());
  CHECK(column(out, 1).values() == column(base, 1).values());
  CHECK(column(out, 2).values() != column(base, 2).values());
}

TEST_CASE("grad_check passes over the shared weight on a 5-node tree") {
  Tape tape;
  std::mt19937_64 rng(14), init(15);
  std::size_t n = 5, d = 4;
  Tensor f = tape.make({d, n}, random_values(rng, d * n), true);
  Neighborhood nb = random_tree(n, rng, nullptr);
  GatParams params = make_gat(tape, d, init);
  auto loss = [&] {
    Tensor out = gat_forward(f, nb, params, true);
    return sum(mul(out, out));
  };
  auto res = grad_check(tape, loss, {{"gat.weight", params.weight}, {"features", f}}, 1e-5, 1e-4);
  INFO("worst ", res.worst_parameter, " err ", res.max_rel_error);
  CHECK(res.passed);
}

TEST_CASE("empty neighborhoods are rejected") {
  Tape tape;
  std::mt19937_64 init(16);
  Tensor f = tape.make({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS(gat_forward(f, nb_from({{0}, {}}), make_gat(tape, 2, init), true), DomainError);
}
