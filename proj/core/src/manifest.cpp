#include "tgnn/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "tgnn/errors.hpp"

namespace tgnn {

using nlohmann::json;

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

json pairs_to_json(const std::vector<std::pair<std::string, std::string>>& pairs) {
  json j = json::object();
  for (const auto& [k, v] : pairs) j[k] = v;
  return j;
}

std::vector<std::pair<std::string, std::string>> pairs_from_json(const json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto it = j.begin(); it != j.end(); ++it) out.emplace_back(it.key(), it.value().get<std::string>());
  return out;
}

}  // namespace

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open manifest for writing: " + path);
  json j;
  j["format"] = "tgnn-manifest";
  j["version"] = 1;
  j["command"] = manifest.command;
  j["seed"] = manifest.seed;
  j["config"] = pairs_to_json(manifest.config);
  j["inputs"] = pairs_to_json(manifest.inputs);
  j["outputs"] = pairs_to_json(manifest.outputs);
  j["timestamp"] = manifest.timestamp;
  out << j.dump(2) << "\n";
  if (!out) throw DataError("failed writing manifest: " + path);
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  if (j.value("format", "") != "tgnn-manifest") throw DataError("not a tgnn-manifest: " + path);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = pairs_from_json(j.at("config"));
  m.inputs = pairs_from_json(j.at("inputs"));
  m.outputs = pairs_from_json(j.at("outputs"));
  m.timestamp = j.value("timestamp", "");
  return m;
}

}  // namespace tgnn
