#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/attention.hpp"
#include "tgnn/checkpoint.hpp"
#include "tgnn/data.hpp"
#include "tgnn/encoders.hpp"
#include "tgnn/fusion.hpp"
#include "tgnn/gat.hpp"
#include "tgnn/tensor.hpp"

namespace tgnn {

struct ModelConfig {
  std::size_t embed_dim = 32;    // d
  std::size_t visual_dim = 16;   // d_v
  std::size_t heads = 4;
  std::size_t transformer_depth = 1;
  std::size_t gat_layers = 1;
  std::size_t hash_buckets = 4096;
  std::uint64_t hash_seed = 0x74676e6e;  // fixed so token buckets are stable
  std::size_t patch_grid = 4;
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::size_t image_channels = 3;
  double dropout = 0.3;
  bool multimodal = true;        // teacher variant; false builds the text-only student
  bool use_layer_norm = false;
  bool use_ffn = false;
  bool strict_eq7 = true;        // keep the 1/K_i prefactor in the local branch
  bool aggregate_local = false;  // weight original embeddings (default) or local features
  bool freeze_encoder = false;
  KdDirection kd_direction = KdDirection::TeacherToStudent;
  double kd_temperature = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

std::vector<std::pair<std::string, std::string>> model_config_to_entries(const ModelConfig& config);
ModelConfig model_config_from_entries(const std::vector<std::pair<std::string, std::string>>& entries);

struct ForwardResult {
  Tensor probabilities;  // 2-class distribution on the tape
  Prediction prediction;
  GlobalLocalAttentionReport attention;
  Tensor representation;  // f = f_c + fused global
  Tensor fused_global;    // visual + global representation (global alone for students)
};

// One trainable rumour-detection model: message encoder, transformer global
// branch, GAT local branch, multimodal fusion and classifier, all on a
// single tape. Instances are independent; one instance per thread.
class TgnnModel {
 public:
  TgnnModel(ModelConfig config, std::uint64_t seed);

  // Runs one conversation through the network. `image` may be null: the
  // multimodal variant then encodes a blank image, the text-only variant has
  // no image path at all.
  ForwardResult forward(const ConversationGraph& graph, const Image* image);

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  const ModelConfig& config() const { return config_; }
  Tape& tape() { return *tape_; }
  std::mt19937_64& dropout_rng() { return dropout_rng_; }

  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::vector<Tensor> trainable_parameters();

  void save(const std::string& path);
  static TgnnModel load(const std::string& path);
  // Copies values for every parameter name both models share; names present
  // only in `source` are ignored (teacher -> student projection).
  void copy_shared_parameters(TgnnModel& source);
  std::string fingerprint();

 private:
  ModelConfig config_;
  std::unique_ptr<Tape> tape_;
  std::mt19937_64 dropout_rng_;
  std::unique_ptr<HashedBagEncoder> message_encoder_;
  std::unique_ptr<PatchStatsEncoder> image_encoder_;
  GlobalBranchParams global_;
  std::vector<GatParams> gat_;
  FusionParams fusion_;
  bool training_ = false;
};

// Losses on the model's tape for one conversation.
Tensor model_cross_entropy(TgnnModel& model, const ForwardResult& result, Label label);

}  // namespace tgnn
