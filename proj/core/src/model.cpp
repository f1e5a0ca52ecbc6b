#include "tgnn/model.hpp"

#include <algorithm>
#include <unordered_map>

#include "tgnn/util.hpp"

namespace tgnn {

namespace {

std::string bool_str(bool v) { return v ? "true" : "false"; }

bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true/false for " + key + ", got " + s);
}

std::size_t parse_size(const std::string& s, const std::string& key) {
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (...) {
    throw ConfigError("expected an unsigned integer for " + key + ", got " + s);
  }
}

}  // namespace

std::vector<std::pair<std::string, std::string>> model_config_to_entries(const ModelConfig& c) {
  return {
      {"embed_dim", std::to_string(c.embed_dim)},
      {"visual_dim", std::to_string(c.visual_dim)},
      {"heads", std::to_string(c.heads)},
      {"transformer_depth", std::to_string(c.transformer_depth)},
      {"gat_layers", std::to_string(c.gat_layers)},
      {"hash_buckets", std::to_string(c.hash_buckets)},
      {"hash_seed", std::to_string(c.hash_seed)},
      {"patch_grid", std::to_string(c.patch_grid)},
      {"image_height", std::to_string(c.image_height)},
      {"image_width", std::to_string(c.image_width)},
      {"image_channels", std::to_string(c.image_channels)},
      {"dropout", format_double_hex(c.dropout)},
      {"multimodal", bool_str(c.multimodal)},
      {"use_layer_norm", bool_str(c.use_layer_norm)},
      {"use_ffn", bool_str(c.use_ffn)},
      {"strict_eq7", bool_str(c.strict_eq7)},
      {"aggregate_local", bool_str(c.aggregate_local)},
      {"freeze_encoder", bool_str(c.freeze_encoder)},
      {"kd_direction",
       c.kd_direction == KdDirection::TeacherToStudent ? "teacher_to_student" : "student_to_teacher"},
      {"kd_temperature", format_double_hex(c.kd_temperature)},
  };
}

ModelConfig model_config_from_entries(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  ModelConfig c;
  for (const auto& [key, value] : entries) {
    if (key == "embed_dim") c.embed_dim = parse_size(value, key);
    else if (key == "visual_dim") c.visual_dim = parse_size(value, key);
    else if (key == "heads") c.heads = parse_size(value, key);
    else if (key == "transformer_depth") c.transformer_depth = parse_size(value, key);
    else if (key == "gat_layers") c.gat_layers = parse_size(value, key);
    else if (key == "hash_buckets") c.hash_buckets = parse_size(value, key);
    else if (key == "hash_seed") c.hash_seed = std::stoull(value);
    else if (key == "patch_grid") c.patch_grid = parse_size(value, key);
    else if (key == "image_height") c.image_height = parse_size(value, key);
    else if (key == "image_width") c.image_width = parse_size(value, key);
    else if (key == "image_channels") c.image_channels = parse_size(value, key);
    else if (key == "dropout") c.dropout = parse_double_hex(value);
    else if (key == "multimodal") c.multimodal = parse_bool(value, key);
    else if (key == "use_layer_norm") c.use_layer_norm = parse_bool(value, key);
    else if (key == "use_ffn") c.use_ffn = parse_bool(value, key);
    else if (key == "strict_eq7") c.strict_eq7 = parse_bool(value, key);
    else if (key == "aggregate_local") c.aggregate_local = parse_bool(value, key);
    else if (key == "freeze_encoder") c.freeze_encoder = parse_bool(value, key);
    else if (key == "kd_direction") {
      if (value == "teacher_to_student") c.kd_direction = KdDirection::TeacherToStudent;
      else if (value == "student_to_teacher") c.kd_direction = KdDirection::StudentToTeacher;
      else throw ConfigError("unknown kd_direction: " + value);
    } else if (key == "kd_temperature") c.kd_temperature = parse_double_hex(value);
    else throw ConfigError("unknown model config key: " + key);
  }
  return c;
}

TgnnModel::TgnnModel(ModelConfig config, std::uint64_t seed)
    : config_(config),
      tape_(std::make_unique<Tape>()),
      dropout_rng_(mix_seed(seed, 0xd409)) {
  if (config_.gat_layers == 0) throw ConfigError("model: gat_layers must be positive");
  std::mt19937_64 init_rng(mix_seed(seed, 0x1417));
  message_encoder_ = std::make_unique<HashedBagEncoder>(
      *tape_, config_.hash_buckets, config_.embed_dim, config_.hash_seed, init_rng,
      !config_.freeze_encoder);
  global_ = make_global_branch(*tape_, config_.embed_dim, config_.heads,
                               config_.transformer_depth, config_.use_layer_norm,
                               config_.use_ffn, init_rng);
  for (std::size_t l = 0; l < config_.gat_layers; ++l) {
    gat_.push_back(make_gat(*tape_, config_.embed_dim, init_rng));
  }
  if (config_.multimodal) {
    image_encoder_ = std::make_unique<PatchStatsEncoder>(
        *tape_, config_.patch_grid, config_.image_channels, config_.visual_dim, init_rng);
  }
  fusion_ = make_fusion(*tape_, config_.embed_dim, config_.visual_dim, config_.multimodal);
}

ForwardResult TgnnModel::forward(const ConversationGraph& graph, const Image* image) {
  Tensor features = embed_conversation(graph, *message_encoder_);
  GlobalBranchOutput global_out = global_forward(features, global_);

  Neighborhood nb = build_connectivity(graph);
  Tensor local = features;
  for (const GatParams& layer : gat_) {
    local = gat_forward(local, nb, layer, config_.strict_eq7);
  }

  Tensor fused_global = global_out.global;
  if (config_.multimodal) {
    const Image* img = image;
    Image blank;
    if (img == nullptr) {
      blank = Image::blank(config_.image_height, config_.image_width, config_.image_channels);
      img = &blank;
    }
    std::string ref = graph.image_ref.value_or("");
    Tensor raw = image_encoder_->encode(ref, *img);
    Tensor visual = project_visual(fusion_.visual_projection, raw);
    fused_global = fuse_global(visual, global_out.global);
  }

  GlobalLocalResult gl = global_local_attention(local, features, fused_global,
                                                config_.aggregate_local);
  Tensor representation = conversation_representation(gl.representation, fused_global);
  Tensor probabilities = classify(fusion_, representation, config_.dropout, dropout_rng_,
                                  training_);

  ForwardResult result;
  result.probabilities = probabilities;
  result.prediction = prediction_from_probabilities(probabilities, graph.id);
  result.attention = std::move(gl.report);
  result.representation = representation;
  result.fused_global = fused_global;
  return result;
}

std::vector<std::pair<std::string, Tensor>> TgnnModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor>> params = message_encoder_->parameters();
  auto global_params = global_branch_parameters(global_);
  params.insert(params.end(), global_params.begin(), global_params.end());
  for (std::size_t l = 0; l < gat_.size(); ++l) {
    params.emplace_back("gat.layer" + std::to_string(l) + ".weight", gat_[l].weight);
  }
  if (config_.multimodal) {
    auto image_params = image_encoder_->parameters();
    params.insert(params.end(), image_params.begin(), image_params.end());
    params.emplace_back("fusion.visual_projection", fusion_.visual_projection);
  }
  params.emplace_back("classifier.weight", fusion_.classifier_weight);
  params.emplace_back("classifier.bias", fusion_.classifier_bias);
  return params;
}

std::vector<Tensor> TgnnModel::trainable_parameters() {
  std::vector<Tensor> out;
  for (auto& [name, tensor] : named_parameters()) {
    (void)name;
    if (tensor.requires_grad()) out.push_back(tensor);
  }
  return out;
}

void TgnnModel::save(const std::string& path) {
  CheckpointFile file;
  file.config = model_config_to_entries(config_);
  for (auto& [name, tensor] : named_parameters()) {
    file.params.push_back({name, tensor.shape(), tensor.values()});
  }
  write_checkpoint_file(path, file);
}

TgnnModel TgnnModel::load(const std::string& path) {
  CheckpointFile file = read_checkpoint_file(path);
  ModelConfig config = model_config_from_entries(file.config);
  TgnnModel model(config, 0);
  std::unordered_map<std::string, CheckpointParam*> by_name;
  for (CheckpointParam& p : file.params) by_name.emplace(p.name, &p);
  for (auto& [name, tensor] : model.named_parameters()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint " + path + " is missing parameter " + name);
    if (it->second->shape != tensor.shape()) {
      throw DataError("checkpoint parameter " + name + " has shape mismatch in " + path);
    }
    tensor.values() = it->second->values;
  }
  return model;
}

void TgnnModel::copy_shared_parameters(TgnnModel& source) {
  std::unordered_map<std::string, Tensor> theirs;
  for (auto& [name, tensor] : source.named_parameters()) theirs.emplace(name, tensor);
  for (auto& [name, tensor] : named_parameters()) {
    auto it = theirs.find(name);
    if (it == theirs.end()) continue;
    if (it->second.shape() != tensor.shape()) {
      throw DimensionError("shared parameter " + name + " differs in shape");
    }
    tensor.values() = it->second.values();
  }
}

std::string TgnnModel::fingerprint() {
  std::vector<CheckpointParam> params;
  for (auto& [name, tensor] : named_parameters()) {
    params.push_back({name, tensor.shape(), tensor.values()});
  }
  return parameters_fingerprint(params);
}

Tensor model_cross_entropy(TgnnModel& model, const ForwardResult& result, Label label) {
  (void)model;
  return cross_entropy(result.probabilities, label == Label::Rumour ? 1 : 0);
}

}  // namespace tgnn
