#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tgnn/data.hpp"
#include "tgnn/tensor.hpp"

namespace tgnn {

// Lowercases ASCII, splits on unicode whitespace, strips punctuation from
// token edges. Vocabulary-free: any unicode token is a valid token.
std::vector<std::string> tokenize(const std::string& text);

// Pure function of (token, seed).
std::size_t token_bucket(const std::string& token, std::uint64_t seed, std::size_t buckets);

// Turns one message into a d-dimensional embedding on the model's tape.
// Deterministic given parameters; same text (and id) in, same vector out.
class MessageEncoder {
 public:
  virtual ~MessageEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Tensor encode(const std::string& message_id, const std::string& text) = 0;
  virtual std::vector<std::pair<std::string, Tensor>> parameters() = 0;
};

// Default text encoder: mean of trainable bucket embeddings of the hashed
// tokens; empty text encodes to the zero vector.
class HashedBagEncoder : public MessageEncoder {
 public:
  HashedBagEncoder(Tape& tape, std::size_t buckets, std::size_t dim, std::uint64_t hash_seed,
                   std::mt19937_64& init_rng, bool trainable = true);

  std::size_t dim() const override { return dim_; }
  Tensor encode(const std::string& message_id, const std::string& text) override;
  std::vector<std::pair<std::string, Tensor>> parameters() override;

  std::size_t buckets() const { return buckets_; }
  Tensor& table() { return table_; }

 private:
  std::size_t buckets_;
  std::size_t dim_;
  std::uint64_t hash_seed_;
  Tensor table_;  // buckets x dim
};

// Reads fixed embeddings from a file keyed by message id; carries no
// trainable parameters. Lets external sentence encoders feed the model.
class PrecomputedMessageEncoder : public MessageEncoder {
 public:
  PrecomputedMessageEncoder(Tape& tape, const std::string& path);

  std::size_t dim() const override { return dim_; }
  Tensor encode(const std::string& message_id, const std::string& text) override;
  std::vector<std::pair<std::string, Tensor>> parameters() override { return {}; }

 private:
  Tape* tape_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Turns raw pixels into a d_v-dimensional visual feature.
class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual Tensor encode(const std::string& ref, const Image& image) = 0;
  virtual std::vector<std::pair<std::string, Tensor>> parameters() = 0;
};

// Default image encoder: per-patch mean/variance statistics over a g x g
// grid, mapped to d_v by a trainable linear layer. A blank (all-zero) image
// is encoded like any other; the bias keeps its feature generally nonzero.
class PatchStatsEncoder : public ImageEncoder {
 public:
  PatchStatsEncoder(Tape& tape, std::size_t grid, std::size_t channels, std::size_t dim,
                    std::mt19937_64& init_rng);

  std::size_t dim() const override { return dim_; }
  Tensor encode(const std::string& ref, const Image& image) override;
  std::vector<std::pair<std::string, Tensor>> parameters() override;

  std::size_t stats_dim() const { return stats_dim_; }
  // The raw statistics vector, exposed for tests: per patch and channel,
  // mean then variance.
  static std::vector<double> patch_statistics(const Image& image, std::size_t grid);

 private:
  Tape* tape_;
  std::size_t grid_;
  std::size_t stats_dim_;
  std::size_t dim_;
  Tensor weight_;  // dim x stats_dim
  Tensor bias_;    // dim
};

// File-backed visual features keyed by image reference.
class PrecomputedImageEncoder : public ImageEncoder {
 public:
  PrecomputedImageEncoder(Tape& tape, const std::string& path);

  std::size_t dim() const override { return dim_; }
  Tensor encode(const std::string& ref, const Image& image) override;
  std::vector<std::pair<std::string, Tensor>> parameters() override { return {}; }

 private:
  Tape* tape_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Precomputed-embedding file format: header line "tgnn-embeddings 1", then
// one line per record: <id> <dim> <v0> <v1> ...
std::unordered_map<std::string, std::vector<double>> load_embedding_file(const std::string& path);
void save_embedding_file(const std::unordered_map<std::string, std::vector<double>>& vectors,
                         const std::string& path);

// Node features F as a d x n tensor: column 0 is the source embedding,
// columns 1..n-1 the replies in stored order.
Tensor embed_conversation(const ConversationGraph& graph, MessageEncoder& encoder);

}  // namespace tgnn
