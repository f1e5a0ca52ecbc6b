#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tgnn/model.hpp"
#include "tgnn/synth.hpp"
#include "tgnn/train.hpp"

namespace tgnn {

// Flat key-value configuration with [section] headers, '#' comments and
// key = value lines. Every key is optional; unknown keys are configuration
// errors so typos cannot silently fall back to defaults.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::size_t get_size(const std::string& section, const std::string& key,
                       std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

  // Throws ConfigError naming any key that no getter consumed.
  void ensure_all_consumed() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;  // "section.key" -> value
  mutable std::set<std::string> consumed_;
};

GeneratorConfig generator_config_from(const KeyValueConfig& config);
TrainConfig train_config_from(const KeyValueConfig& config);

// Fully-resolved entries (every knob materialized) for run manifests.
std::vector<std::pair<std::string, std::string>> generator_config_entries(const GeneratorConfig& c);
std::vector<std::pair<std::string, std::string>> train_config_entries(const TrainConfig& c);

}  // namespace tgnn
