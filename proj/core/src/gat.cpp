#include "tgnn/gat.hpp"

#include <cmath>

#include "tgnn/util.hpp"

namespace tgnn {

GatParams make_gat(Tape& tape, std::size_t dim, std::mt19937_64& init_rng) {
  if (dim == 0) throw ConfigError("gat: dimension must be positive");
  double limit = std::sqrt(6.0 / static_cast<double>(dim + dim));
  std::vector<double> v(dim * dim);
  for (double& x : v) x = uniform_real(init_rng, -limit, limit);
  return GatParams{tape.make({dim, dim}, std::move(v), true)};
}

namespace {

void check_inputs(const Tensor& features, const Neighborhood& nb, const GatParams& params) {
  if (features.rank() != 2) {
    throw DimensionError("gat expects d x n features, got " + shape_string(features.shape()));
  }
  if (params.weight.rank() != 2 || params.weight.rows() != params.weight.cols() ||
      params.weight.rows() != features.rows()) {
    throw DimensionError("gat weight must be square of dim " + std::to_string(features.rows()));
  }
  if (nb.size() != features.cols()) {
    throw DimensionError("neighborhood covers " + std::to_string(nb.size()) + " nodes, features " +
                         std::to_string(features.cols()));
  }
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (nb.neighbors[i].empty()) {
      throw DomainError("node " + std::to_string(i) + " has an empty neighborhood");
    }
  }
}

}  // namespace

std::map<std::pair<std::size_t, std::size_t>, double> gat_coefficients(
    const Tensor& features, const Neighborhood& nb, const GatParams& params) {
  check_inputs(features, nb, params);
  Tensor projected = matmul(params.weight, features);
  std::map<std::pair<std::size_t, std::size_t>, double> coeffs;
  std::size_t d = projected.rows(), n = projected.cols();
  const auto& pv = projected.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : nb.neighbors[i]) {
      double e = 0.0;
      for (std::size_t k = 0; k < d; ++k) e += pv[k * n + i] * pv[k * n + j];
      coeffs[{i, j}] = e;
    }
  }
  return coeffs;
}

std::vector<std::vector<double>> gat_attention(const Tensor& features, const Neighborhood& nb,
                                               const GatParams& params) {
  auto coeffs = gat_coefficients(features, nb, params);
  std::vector<std::vector<double>> alphas(nb.size());
  for (std::size_t i = 0; i < nb.size(); ++i) {
    const auto& neigh = nb.neighbors[i];
    double m = coeffs[{i, neigh[0]}];
    for (std::size_t j : neigh) m = std::max(m, coeffs[{i, j}]);
    std::vector<double> e(neigh.size());
    for (std::size_t k = 0; k < neigh.size(); ++k) e[k] = std::exp(coeffs[{i, neigh[k]}] - m);
    double z = ordered_sum(e);
    alphas[i].resize(neigh.size());
    for (std::size_t k = 0; k < neigh.size(); ++k) alphas[i][k] = e[k] / z;
  }
  return alphas;
}

Tensor gat_forward(const Tensor& features, const Neighborhood& nb, const GatParams& params,
                   bool strict_prefactor) {
  check_inputs(features, nb, params);
  Tensor projected = matmul(params.weight, features);
  std::size_t n = features.cols();
  std::vector<Tensor> transformed;
  transformed.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& neigh = nb.neighbors[i];
    Tensor pi = column(projected, i);
    std::vector<Tensor> scores;
    scores.reserve(neigh.size());
    for (std::size_t j : neigh) scores.push_back(dot(pi, column(projected, j)));
    Tensor alphas = softmax(stack(scores));
    Tensor aggregated = weighted_columns(features, neigh, alphas);
    if (strict_prefactor) {
      aggregated = scale(aggregated, 1.0 / static_cast<double>(neigh.size()));
    }
    transformed.push_back(aggregated);
  }
  return concat_columns(transformed);
}

}  // namespace tgnn
