#include "tgnn/config.hpp"

#include <fstream>
#include <sstream>

#include "tgnn/util.hpp"

namespace tgnn {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text, const std::string& origin) {
  KeyValueConfig config;
  config.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    }
    std::string full = section.empty() ? key : section + "." + key;
    if (!config.values_.emplace(full, value).second) {
      throw ConfigError(origin + ": duplicate key " + full);
    }
  }
  return config;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

bool KeyValueConfig::has(const std::string& section, const std::string& key) const {
  return values_.contains(section + "." + key);
}

std::string KeyValueConfig::get_string(const std::string& section, const std::string& key,
                                       const std::string& fallback) const {
  std::string full = section + "." + key;
  consumed_.insert(full);
  auto it = values_.find(full);
  return it == values_.end() ? fallback : it->second;
}

std::size_t KeyValueConfig::get_size(const std::string& section, const std::string& key,
                                     std::size_t fallback) const {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  try {
    return static_cast<std::size_t>(std::stoull(raw));
  } catch (...) {
    throw ConfigError(origin_ + ": field " + section + "." + key +
                      " expects an unsigned integer, got " + raw);
  }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& section, const std::string& key,
                                      std::uint64_t fallback) const {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  try {
    return std::stoull(raw);
  } catch (...) {
    throw ConfigError(origin_ + ": field " + section + "." + key +
                      " expects an unsigned integer, got " + raw);
  }
}

double KeyValueConfig::get_double(const std::string& section, const std::string& key,
                                  double fallback) const {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  try {
    std::size_t pos = 0;
    double v = std::stod(raw, &pos);
    if (pos != raw.size()) throw ConfigError("");
    return v;
  } catch (...) {
    throw ConfigError(origin_ + ": field " + section + "." + key + " expects a number, got " + raw);
  }
}

bool KeyValueConfig::get_bool(const std::string& section, const std::string& key,
                              bool fallback) const {
  std::string raw = get_string(section, key, "");
  if (raw.empty()) return fallback;
  if (raw == "true" || raw == "1") return true;
  if (raw == "false" || raw == "0") return false;
  throw ConfigError(origin_ + ": field " + section + "." + key + " expects true/false, got " + raw);
}

void KeyValueConfig::ensure_all_consumed() const {
  for (const auto& [key, value] : values_) {
    (void)value;
    if (!consumed_.contains(key)) {
      throw ConfigError(origin_ + ": unknown field " + key);
    }
  }
}

GeneratorConfig generator_config_from(const KeyValueConfig& config) {
  GeneratorConfig c;
  c.events = config.get_size("generator", "events", c.events);
  c.conversations_per_event =
      config.get_size("generator", "conversations_per_event", c.conversations_per_event);
  c.reply_min = config.get_size("generator", "reply_min", c.reply_min);
  c.reply_max = config.get_size("generator", "reply_max", c.reply_max);
  c.rumour_fraction = config.get_double("generator", "rumour_fraction", c.rumour_fraction);
  c.text_signal = config.get_double("generator", "text_signal", c.text_signal);
  c.image_probability = config.get_double("generator", "image_probability", c.image_probability);
  c.image_signal = config.get_double("generator", "image_signal", c.image_signal);
  c.language = config.get_string("generator", "language", c.language);
  c.image_height = config.get_size("generator", "image_height", c.image_height);
  c.image_width = config.get_size("generator", "image_width", c.image_width);
  c.image_channels = config.get_size("generator", "image_channels", c.image_channels);
  return c;
}

TrainConfig train_config_from(const KeyValueConfig& config) {
  TrainConfig c;
  c.batch_size = config.get_size("train", "batch_size", c.batch_size);
  c.epochs = config.get_size("train", "epochs", c.epochs);
  c.learning_rate = config.get_double("train", "learning_rate", c.learning_rate);
  c.l2_rate = config.get_double("train", "l2_rate", c.l2_rate);
  c.dropout = config.get_double("train", "dropout", c.dropout);
  c.seed = config.get_u64("train", "seed", c.seed);
  c.jobs = config.get_size("train", "jobs", c.jobs);

  ModelConfig& m = c.model;
  m.embed_dim = config.get_size("model", "embed_dim", m.embed_dim);
  m.visual_dim = config.get_size("model", "visual_dim", m.visual_dim);
  m.heads = config.get_size("model", "heads", m.heads);
  m.transformer_depth = config.get_size("model", "transformer_depth", m.transformer_depth);
  m.gat_layers = config.get_size("model", "gat_layers", m.gat_layers);
  m.hash_buckets = config.get_size("model", "hash_buckets", m.hash_buckets);
  m.hash_seed = config.get_u64("model", "hash_seed", m.hash_seed);
  m.patch_grid = config.get_size("model", "patch_grid", m.patch_grid);
  m.image_height = config.get_size("model", "image_height", m.image_height);
  m.image_width = config.get_size("model", "image_width", m.image_width);
  m.image_channels = config.get_size("model", "image_channels", m.image_channels);
  m.multimodal = config.get_bool("model", "multimodal", m.multimodal);
  m.use_layer_norm = config.get_bool("model", "use_layer_norm", m.use_layer_norm);
  m.use_ffn = config.get_bool("model", "use_ffn", m.use_ffn);
  m.strict_eq7 = config.get_bool("model", "strict_eq7", m.strict_eq7);
  m.aggregate_local = config.get_bool("model", "aggregate_local", m.aggregate_local);
  m.freeze_encoder = config.get_bool("model", "freeze_encoder", m.freeze_encoder);
  std::string direction = config.get_string("model", "kd_direction", "teacher_to_student");
  if (direction == "teacher_to_student") {
    m.kd_direction = KdDirection::TeacherToStudent;
  } else if (direction == "student_to_teacher") {
    m.kd_direction = KdDirection::StudentToTeacher;
  } else {
    throw ConfigError("field model.kd_direction expects teacher_to_student or student_to_teacher");
  }
  m.kd_temperature = config.get_double("model", "kd_temperature", m.kd_temperature);
  m.dropout = c.dropout;
  return c;
}

std::vector<std::pair<std::string, std::string>> generator_config_entries(const GeneratorConfig& c) {
  return {
      {"generator.events", std::to_string(c.events)},
      {"generator.conversations_per_event", std::to_string(c.conversations_per_event)},
      {"generator.reply_min", std::to_string(c.reply_min)},
      {"generator.reply_max", std::to_string(c.reply_max)},
      {"generator.rumour_fraction", std::to_string(c.rumour_fraction)},
      {"generator.text_signal", std::to_string(c.text_signal)},
      {"generator.image_probability", std::to_string(c.image_probability)},
      {"generator.image_signal", std::to_string(c.image_signal)},
      {"generator.language", c.language},
      {"generator.image_height", std::to_string(c.image_height)},
      {"generator.image_width", std::to_string(c.image_width)},
      {"generator.image_channels", std::to_string(c.image_channels)},
  };
}

std::vector<std::pair<std::string, std::string>> train_config_entries(const TrainConfig& c) {
  std::vector<std::pair<std::string, std::string>> entries = {
      {"train.batch_size", std::to_string(c.batch_size)},
      {"train.epochs", std::to_string(c.epochs)},
      {"train.learning_rate", std::to_string(c.learning_rate)},
      {"train.l2_rate", std::to_string(c.l2_rate)},
      {"train.dropout", std::to_string(c.dropout)},
      {"train.seed", std::to_string(c.seed)},
      {"train.jobs", std::to_string(c.jobs)},
  };
  for (auto& [k, v] : model_config_to_entries(c.model)) {
    entries.emplace_back("model." + k, v);
  }
  return entries;
}

}  // namespace tgnn
