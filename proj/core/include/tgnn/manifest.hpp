#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace tgnn {

// One record per CLI run: the command, the fully-resolved configuration and
// fingerprints of inputs and outputs. Re-running a command with the same
// config and inputs reproduces the fingerprinted outputs byte for byte; the
// timestamp is informational only.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path -> fingerprint
  std::vector<std::pair<std::string, std::string>> outputs;  // path -> fingerprint
  std::string timestamp;
};

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

std::string utc_timestamp();

}  // namespace tgnn
