#include "tgnn/attention.hpp"

#include <cmath>

#include "tgnn/util.hpp"

namespace tgnn {

std::pair<Tensor, Tensor> scaled_dot_product_attention(const Tensor& q, const Tensor& k,
                                                       const Tensor& v) {
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw DimensionError("attention expects 2-D q/k/v");
  }
  if (q.cols() != k.cols()) {
    throw DimensionError("attention: query dim " + shape_string(q.shape()) +
                         " does not match key dim " + shape_string(k.shape()));
  }
  if (k.rows() != v.rows()) {
    throw DimensionError("attention: key count " + shape_string(k.shape()) +
                         " does not match value count " + shape_string(v.shape()));
  }
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Tensor scores = softmax(scale(matmul(q, transpose(k)), inv_sqrt_dk));
  Tensor values = matmul(scores, v);
  return {scores, values};
}

Tensor multi_head_attention(const MultiHeadAttentionParams& params, const Tensor& q,
                            const Tensor& k, const Tensor& v) {
  if (params.heads.empty()) throw ConfigError("multi-head attention with zero heads");
  std::vector<Tensor> head_outputs;
  head_outputs.reserve(params.heads.size());
  for (const AttentionHead& head : params.heads) {
    Tensor qi = matmul(q, head.wq);
    Tensor ki = matmul(k, head.wk);
    Tensor vi = matmul(v, head.wv);
    auto [scores, values] = scaled_dot_product_attention(qi, ki, vi);
    (void)scores;
    head_outputs.push_back(matmul(values, head.wh));
  }
  return matmul(concat_columns(head_outputs), params.wo);
}

namespace {

Tensor xavier(Tape& tape, std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = uniform_real(rng, -limit, limit);
  return tape.make({rows, cols}, std::move(v), true);
}

}  // namespace

GlobalBranchParams make_global_branch(Tape& tape, std::size_t embed_dim, std::size_t heads,
                                      std::size_t depth, bool use_layer_norm, bool use_ffn,
                                      std::mt19937_64& init_rng) {
  if (heads == 0 || embed_dim == 0) throw ConfigError("global branch: zero heads or dimension");
  if (embed_dim % heads != 0) {
    throw ConfigError("head count " + std::to_string(heads) + " does not divide embedding dim " +
                      std::to_string(embed_dim));
  }
  if (depth == 0) throw ConfigError("global branch: depth must be positive");
  std::size_t head_dim = embed_dim / heads;
  GlobalBranchParams params;
  params.embed_dim = embed_dim;
  params.heads = heads;
  params.use_layer_norm = use_layer_norm;
  params.use_ffn = use_ffn;
  for (std::size_t b = 0; b < depth; ++b) {
    TransformerBlockParams block;
    for (std::size_t h = 0; h < heads; ++h) {
      AttentionHead head;
      head.wq = xavier(tape, embed_dim, head_dim, init_rng);
      head.wk = xavier(tape, embed_dim, head_dim, init_rng);
      head.wv = xavier(tape, embed_dim, head_dim, init_rng);
      head.wh = xavier(tape, head_dim, head_dim, init_rng);
      block.attention.heads.push_back(std::move(head));
    }
    block.attention.wo = xavier(tape, heads * head_dim, embed_dim, init_rng);
    if (use_layer_norm) {
      block.ln_gain = tape.make({embed_dim}, std::vector<double>(embed_dim, 1.0), true);
      block.ln_bias = tape.zeros({embed_dim}, true);
    }
    if (use_ffn) {
      block.ffn_w1 = xavier(tape, embed_dim, embed_dim, init_rng);
      block.ffn_b1 = tape.zeros({embed_dim}, true);
      block.ffn_w2 = xavier(tape, embed_dim, embed_dim, init_rng);
      block.ffn_b2 = tape.zeros({embed_dim}, true);
    }
    params.blocks.push_back(std::move(block));
  }
  return params;
}

std::vector<std::pair<std::string, Tensor>> global_branch_parameters(GlobalBranchParams& params) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    TransformerBlockParams& block = params.blocks[b];
    std::string prefix = "global.block" + std::to_string(b) + ".";
    for (std::size_t h = 0; h < block.attention.heads.size(); ++h) {
      AttentionHead& head = block.attention.heads[h];
      std::string hp = prefix + "head" + std::to_string(h) + ".";
      out.emplace_back(hp + "wq", head.wq);
      out.emplace_back(hp + "wk", head.wk);
      out.emplace_back(hp + "wv", head.wv);
      out.emplace_back(hp + "wh", head.wh);
    }
    out.emplace_back(prefix + "wo", block.attention.wo);
    if (block.ln_gain) out.emplace_back(prefix + "ln.gain", *block.ln_gain);
    if (block.ln_bias) out.emplace_back(prefix + "ln.bias", *block.ln_bias);
    if (block.ffn_w1) out.emplace_back(prefix + "ffn.w1", *block.ffn_w1);
    if (block.ffn_b1) out.emplace_back(prefix + "ffn.b1", *block.ffn_b1);
    if (block.ffn_w2) out.emplace_back(prefix + "ffn.w2", *block.ffn_w2);
    if (block.ffn_b2) out.emplace_back(prefix + "ffn.b2", *block.ffn_b2);
  }
  return out;
}

GlobalBranchOutput global_forward(const Tensor& features, const GlobalBranchParams& params) {
  if (features.rank() != 2) {
    throw DimensionError("global_forward expects d x n features, got " +
                         shape_string(features.shape()));
  }
  if (features.rows() != params.embed_dim) {
    throw DimensionError("global_forward: feature dim " + std::to_string(features.rows()) +
                         " does not match configured dim " + std::to_string(params.embed_dim));
  }
  Tensor x = transpose(features);  // n x d, rows are nodes
  for (const TransformerBlockParams& block : params.blocks) {
    Tensor attended = multi_head_attention(block.attention, x, x, x);
    x = add(attended, x);  // skip connection on the value path
    if (block.ln_gain) x = layer_norm(x, *block.ln_gain, *block.ln_bias);
    if (block.ffn_w1) {
      Tensor h = relu(add_rows(matmul(x, *block.ffn_w1), *block.ffn_b1));
      x = add(add_rows(matmul(h, *block.ffn_w2), *block.ffn_b2), x);
      if (block.ln_gain) x = layer_norm(x, *block.ln_gain, *block.ln_bias);
    }
  }
  GlobalBranchOutput out;
  out.node_states = transpose(x);
  out.global = column(out.node_states, 0);
  return out;
}

}  // namespace tgnn
