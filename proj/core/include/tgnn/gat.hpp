#pragma once

#include <map>
#include <random>
#include <utility>
#include <vector>

#include "tgnn/data.hpp"
#include "tgnn/tensor.hpp"

namespace tgnn {

struct GatParams {
  Tensor weight;  // d x d, shared by every node
};

GatParams make_gat(Tape& tape, std::size_t dim, std::mt19937_64& init_rng);

// Attention coefficients e_ij = (W f_i)^T (W f_j) for j in N(i). Symmetric
// by construction. Plain values for inspection and reporting.
std::map<std::pair<std::size_t, std::size_t>, double> gat_coefficients(
    const Tensor& features, const Neighborhood& nb, const GatParams& params);

// Per-node softmax weights over the neighborhood, same layout as nb.
std::vector<std::vector<double>> gat_attention(const Tensor& features, const Neighborhood& nb,
                                               const GatParams& params);

// One attention pass: f'_i = (1/K_i) * sum_j alpha_ij f_j over j in N(i),
// where the alphas are the softmax of the coefficients above and f_j are the
// input features. strict_prefactor keeps the 1/K_i factor; dropping it
// leaves the plain softmax-weighted sum.
Tensor gat_forward(const Tensor& features, const Neighborhood& nb, const GatParams& params,
                   bool strict_prefactor = true);

}  // namespace tgnn
