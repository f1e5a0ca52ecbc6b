#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tgnn/tensor.hpp"

namespace tgnn {

// One named parameter inside a checkpoint file.
struct CheckpointParam {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;
};

// Text container for model parameters plus the key/value configuration needed
// to rebuild the owning model. Values are written as hexfloats, so files
// round-trip bit-exactly.
struct CheckpointFile {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<CheckpointParam> params;
};

void write_checkpoint_file(const std::string& path, const CheckpointFile& file);
CheckpointFile read_checkpoint_file(const std::string& path);

// Order-sensitive fingerprint over parameter names, shapes and raw bytes.
std::string parameters_fingerprint(const std::vector<CheckpointParam>& params);

}  // namespace tgnn
