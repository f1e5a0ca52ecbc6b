#include "tgnn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "tgnn/errors.hpp"
#include "tgnn/util.hpp"

namespace tgnn {

namespace {

constexpr const char* kMagic = "tgnn-checkpoint";
constexpr int kVersion = 1;

}  // namespace

void write_checkpoint_file(const std::string& path, const CheckpointFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open checkpoint for writing: " + path);
  out << kMagic << " " << kVersion << "\n";
  out << "config " << file.config.size() << "\n";
  for (const auto& [k, v] : file.config) out << k << " " << v << "\n";
  out << "params " << file.params.size() << "\n";
  for (const CheckpointParam& p : file.params) {
    out << "param " << p.name << " " << p.shape.size();
    for (std::size_t d : p.shape) out << " " << d;
    out << "\n";
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      out << format_double_hex(p.values[i]);
      out << (((i + 1) % 8 == 0 || i + 1 == p.values.size()) ? "\n" : " ");
    }
  }
  out << "end\n";
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

CheckpointFile read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != kMagic) {
    throw DataError("not a checkpoint file: " + path);
  }
  if (version != kVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version) + " in " + path);
  }
  CheckpointFile file;
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "config") throw DataError("malformed checkpoint header: " + path);
  for (std::size_t i = 0; i < n; ++i) {
    std::string k, v;
    if (!(in >> k >> v)) throw DataError("truncated checkpoint config: " + path);
    file.config.emplace_back(k, v);
  }
  if (!(in >> word >> n) || word != "params") throw DataError("malformed checkpoint params header: " + path);
  for (std::size_t i = 0; i < n; ++i) {
    CheckpointParam p;
    std::size_t rank = 0;
    if (!(in >> word >> p.name >> rank) || word != "param") {
      throw DataError("malformed checkpoint parameter entry: " + path);
    }
    std::size_t count = 1;
    for (std::size_t r = 0; r < rank; ++r) {
      std::size_t d = 0;
      if (!(in >> d) || d == 0) throw DataError("bad shape in checkpoint parameter " + p.name);
      p.shape.push_back(d);
      count *= d;
    }
    p.values.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
      if (!(in >> word)) throw DataError("truncated values for checkpoint parameter " + p.name);
      p.values.push_back(parse_double_hex(word));
    }
    file.params.push_back(std::move(p));
  }
  if (!(in >> word) || word != "end") throw DataError("missing end marker in checkpoint: " + path);
  return file;
}

std::string parameters_fingerprint(const std::vector<CheckpointParam>& params) {
  std::uint64_t h = 14695981039346656037ull;
  for (const CheckpointParam& p : params) {
    h = fnv1a64(p.name, h);
    for (std::size_t d : p.shape) h = fnv1a64(&d, sizeof(d), h);
    h = fnv1a64(p.values.data(), p.values.size() * sizeof(double), h);
  }
  return to_hex(h);
}

}  // namespace tgnn
