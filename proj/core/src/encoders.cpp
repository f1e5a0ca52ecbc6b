#include "tgnn/encoders.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tgnn/util.hpp"

namespace tgnn {

namespace {

// Minimal UTF-8 decoding: returns the code point at byte i and advances i.
// Malformed bytes fall back to the byte value so hashing stays total.
char32_t next_codepoint(const std::string& s, std::size_t& i) {
  unsigned char c = static_cast<unsigned char>(s[i]);
  if (c < 0x80) {
    ++i;
    return c;
  }
  std::size_t extra = 0;
  char32_t cp = 0;
  if ((c & 0xe0) == 0xc0) {
    extra = 1;
    cp = c & 0x1f;
  } else if ((c & 0xf0) == 0xe0) {
    extra = 2;
    cp = c & 0x0f;
  } else if ((c & 0xf8) == 0xf0) {
    extra = 3;
    cp = c & 0x07;
  } else {
    ++i;  // stray continuation byte
    return c;
  }
  if (i + extra >= s.size()) {
    ++i;  // truncated sequence
    return c;
  }
  for (std::size_t k = 1; k <= extra; ++k) {
    unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xc0) != 0x80) {
      ++i;
      return c;
    }
    cp = (cp << 6) | (cc & 0x3f);
  }
  i += extra + 1;
  return cp;
}

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x00a0:  // no-break space
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202f:
    case 0x205f:
    case 0x3000:  // ideographic space
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200a;
  }
}

bool is_edge_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return std::ispunct(static_cast<int>(cp)) != 0;
  }
  switch (cp) {
    case 0x3001:  // 、
    case 0x3002:  // 。
    case 0xff01:  // ！
    case 0xff1f:  // ？
    case 0xff0c:  // ，
    case 0xff1a:  // ：
    case 0xff1b:  // ；
    case 0x2018:
    case 0x2019:
    case 0x201c:
    case 0x201d:
    case 0x2026:  // …
      return true;
    default:
      return false;
  }
}

void append_codepoint(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::vector<char32_t>> raw;
  std::vector<char32_t> current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = next_codepoint(text, i);
    if (is_space_cp(cp)) {
      if (!current.empty()) {
        raw.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    if (cp >= 'A' && cp <= 'Z') cp = cp - 'A' + 'a';
    current.push_back(cp);
  }
  if (!current.empty()) raw.push_back(std::move(current));

  std::vector<std::string> tokens;
  for (auto& cps : raw) {
    std::size_t lo = 0, hi = cps.size();
    while (lo < hi && is_edge_punct_cp(cps[lo])) ++lo;
    while (hi > lo && is_edge_punct_cp(cps[hi - 1])) --hi;
    if (lo == hi) continue;
    std::string token;
    for (std::size_t k = lo; k < hi; ++k) append_codepoint(token, cps[k]);
    tokens.push_back(std::move(token));
  }
  return tokens;
}

std::size_t token_bucket(const std::string& token, std::uint64_t seed, std::size_t buckets) {
  if (buckets == 0) throw ConfigError("token_bucket: bucket count must be positive");
  std::uint64_t h = fnv1a64(token, splitmix64(seed));
  return static_cast<std::size_t>(h % buckets);
}

HashedBagEncoder::HashedBagEncoder(Tape& tape, std::size_t buckets, std::size_t dim,
                                   std::uint64_t hash_seed, std::mt19937_64& init_rng,
                                   bool trainable)
    : buckets_(buckets), dim_(dim), hash_seed_(hash_seed) {
  if (buckets == 0 || dim == 0) throw ConfigError("hashed bag encoder: zero-sized table");
  double limit = std::sqrt(6.0 / static_cast<double>(buckets + dim));
  std::vector<double> init(buckets * dim);
  for (double& v : init) v = uniform_real(init_rng, -limit, limit);
  table_ = tape.make({buckets, dim}, std::move(init), trainable);
}

Tensor HashedBagEncoder::encode(const std::string& message_id, const std::string& text) {
  (void)message_id;
  std::vector<std::size_t> rows;
  for (const std::string& token : tokenize(text)) {
    rows.push_back(token_bucket(token, hash_seed_, buckets_));
  }
  return embedding_mean(table_, std::move(rows));
}

std::vector<std::pair<std::string, Tensor>> HashedBagEncoder::parameters() {
  return {{"message_encoder.table", table_}};
}

PrecomputedMessageEncoder::PrecomputedMessageEncoder(Tape& tape, const std::string& path)
    : tape_(&tape), vectors_(load_embedding_file(path)) {
  if (vectors_.empty()) throw DataError("embedding file has no records: " + path);
  dim_ = vectors_.begin()->second.size();
  for (const auto& [id, v] : vectors_) {
    if (v.size() != dim_) {
      throw DataError("embedding file mixes dimensions (record " + id + "): " + path);
    }
  }
}

Tensor PrecomputedMessageEncoder::encode(const std::string& message_id, const std::string& text) {
  (void)text;
  auto it = vectors_.find(message_id);
  if (it == vectors_.end()) {
    throw DataError("no precomputed embedding for message " + message_id);
  }
  return tape_->make({dim_}, it->second);
}

PatchStatsEncoder::PatchStatsEncoder(Tape& tape, std::size_t grid, std::size_t channels,
                                     std::size_t dim, std::mt19937_64& init_rng)
    : tape_(&tape), grid_(grid), stats_dim_(grid * grid * channels * 2), dim_(dim) {
  if (grid == 0 || channels == 0 || dim == 0) {
    throw ConfigError("patch stats encoder: zero-sized configuration");
  }
  double limit = std::sqrt(6.0 / static_cast<double>(stats_dim_ + dim));
  std::vector<double> w(dim * stats_dim_);
  for (double& v : w) v = uniform_real(init_rng, -limit, limit);
  weight_ = tape.make({dim, stats_dim_}, std::move(w), true);
  bias_ = tape.zeros({dim}, true);
}

std::vector<double> PatchStatsEncoder::patch_statistics(const Image& image, std::size_t grid) {
  for (float p : image.pixels) {
    if (!std::isfinite(p)) throw DomainError("image has non-finite pixels");
  }
  std::vector<double> stats;
  stats.reserve(grid * grid * image.channels * 2);
  for (std::size_t gr = 0; gr < grid; ++gr) {
    std::size_t r0 = gr * image.height / grid;
    std::size_t r1 = (gr + 1) * image.height / grid;
    for (std::size_t gc = 0; gc < grid; ++gc) {
      std::size_t c0 = gc * image.width / grid;
      std::size_t c1 = (gc + 1) * image.width / grid;
      for (std::size_t ch = 0; ch < image.channels; ++ch) {
        double mean = 0.0, count = 0.0;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            mean += image.pixels[(r * image.width + c) * image.channels + ch];
            count += 1.0;
          }
        }
        mean = count > 0.0 ? mean / count : 0.0;
        double var = 0.0;
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            double d = image.pixels[(r * image.width + c) * image.channels + ch] - mean;
            var += d * d;
          }
        }
        var = count > 0.0 ? var / count : 0.0;
        stats.push_back(mean);
        stats.push_back(var);
      }
    }
  }
  return stats;
}

Tensor PatchStatsEncoder::encode(const std::string& ref, const Image& image) {
  (void)ref;
  std::vector<double> stats = patch_statistics(image, grid_);
  if (stats.size() != stats_dim_) {
    throw DimensionError("patch statistics dimension mismatch: expected " +
                         std::to_string(stats_dim_) + ", got " + std::to_string(stats.size()));
  }
  Tensor raw = tape_->make({stats_dim_}, std::move(stats));
  return add(matvec(weight_, raw), bias_);
}

std::vector<std::pair<std::string, Tensor>> PatchStatsEncoder::parameters() {
  return {{"image_encoder.weight", weight_}, {"image_encoder.bias", bias_}};
}

PrecomputedImageEncoder::PrecomputedImageEncoder(Tape& tape, const std::string& path)
    : tape_(&tape), vectors_(load_embedding_file(path)) {
  if (vectors_.empty()) throw DataError("embedding file has no records: " + path);
  dim_ = vectors_.begin()->second.size();
  for (const auto& [id, v] : vectors_) {
    if (v.size() != dim_) {
      throw DataError("embedding file mixes dimensions (record " + id + "): " + path);
    }
  }
}

Tensor PrecomputedImageEncoder::encode(const std::string& ref, const Image& image) {
  (void)image;
  auto it = vectors_.find(ref);
  if (it == vectors_.end()) throw DataError("no precomputed feature for image " + ref);
  return tape_->make({dim_}, it->second);
}

std::unordered_map<std::string, std::vector<double>> load_embedding_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file: " + path);
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "tgnn-embeddings" || version != 1) {
    throw DataError("not a tgnn-embeddings file: " + path);
  }
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::string id;
  while (in >> id) {
    std::size_t dim = 0;
    if (!(in >> dim) || dim == 0) throw DataError("bad embedding record " + id + " in " + path);
    std::vector<double> v(dim);
    for (double& x : v) {
      if (!(in >> word)) throw DataError("truncated embedding record " + id + " in " + path);
      x = parse_double_hex(word);
    }
    if (!vectors.emplace(id, std::move(v)).second) {
      throw DataError("duplicate embedding record " + id + " in " + path);
    }
  }
  return vectors;
}

void save_embedding_file(const std::unordered_map<std::string, std::vector<double>>& vectors,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open embedding file for writing: " + path);
  out << "tgnn-embeddings 1\n";
  // Sorted for reproducible bytes.
  std::vector<std::string> ids;
  ids.reserve(vectors.size());
  for (const auto& [id, v] : vectors) {
    (void)v;
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  for (const std::string& id : ids) {
    const auto& v = vectors.at(id);
    out << id << " " << v.size();
    for (double x : v) out << " " << format_double_hex(x);
    out << "\n";
  }
  if (!out) throw DataError("failed writing embedding file: " + path);
}

Tensor embed_conversation(const ConversationGraph& graph, MessageEncoder& encoder) {
  if (graph.messages.empty()) throw DataError("conversation " + graph.id + " has no messages");
  std::vector<Tensor> columns;
  columns.reserve(graph.messages.size());
  for (const Message& m : graph.messages) columns.push_back(encoder.encode(m.id, m.text));
  return concat_columns(columns);
}

}  // namespace tgnn
