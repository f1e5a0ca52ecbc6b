#pragma once

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/tensor.hpp"

namespace tgnn {

// One attention head: input projections to the head dimension plus the
// per-head value transform applied after attention.
struct AttentionHead {
  Tensor wq;  // d x d_h
  Tensor wk;  // d x d_h
  Tensor wv;  // d x d_h
  Tensor wh;  // d_h x d_h, applied to the head's attention values
};

struct MultiHeadAttentionParams {
  std::vector<AttentionHead> heads;
  Tensor wo;  // (h*d_h) x d
};

// Optional per-block extras, off by default.
struct TransformerBlockParams {
  MultiHeadAttentionParams attention;
  std::optional<Tensor> ln_gain, ln_bias;      // layer norm after the skip
  std::optional<Tensor> ffn_w1, ffn_b1, ffn_w2, ffn_b2;
};

struct GlobalBranchParams {
  std::vector<TransformerBlockParams> blocks;
  std::size_t embed_dim = 0;
  std::size_t heads = 0;
  bool use_layer_norm = false;
  bool use_ffn = false;
};

struct GlobalBranchOutput {
  Tensor node_states;  // d x n, after attention + skip
  Tensor global;       // d, first column of node_states
};

// Row-wise softmax(Q K^T / sqrt(d_k)) and its application to V.
// Returns (scores S, attention values V' = S V).
std::pair<Tensor, Tensor> scaled_dot_product_attention(const Tensor& q, const Tensor& k,
                                                       const Tensor& v);

// Heads project the n x d inputs to d_h, attend, apply their value
// transforms; concatenated results map back to d through wo.
Tensor multi_head_attention(const MultiHeadAttentionParams& params, const Tensor& q,
                            const Tensor& k, const Tensor& v);

// Fresh Xavier-initialized parameters; head count must divide embed_dim.
GlobalBranchParams make_global_branch(Tape& tape, std::size_t embed_dim, std::size_t heads,
                                      std::size_t depth, bool use_layer_norm, bool use_ffn,
                                      std::mt19937_64& init_rng);

std::vector<std::pair<std::string, Tensor>> global_branch_parameters(GlobalBranchParams& params);

// Self-attention over the node features (query = key = value = F) with a
// skip connection; the global representation is node 0's final state.
GlobalBranchOutput global_forward(const Tensor& features, const GlobalBranchParams& params);

}  // namespace tgnn
