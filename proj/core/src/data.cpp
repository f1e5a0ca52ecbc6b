#include "tgnn/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

namespace tgnn {

namespace fs = std::filesystem;
using nlohmann::json;

std::string label_name(Label l) {
  return l == Label::Rumour ? "rumour" : "non-rumour";
}

Label label_from_name(const std::string& s) {
  if (s == "rumour") return Label::Rumour;
  if (s == "non-rumour") return Label::NonRumour;
  throw DataError("unknown label: " + s);
}

Image Image::blank(std::size_t h, std::size_t w, std::size_t c) {
  Image img;
  img.height = h;
  img.width = w;
  img.channels = c;
  img.pixels.assign(h * w * c, 0.0f);
  return img;
}

const ConversationGraph* Dataset::find(const std::string& id) const {
  for (const auto& g : conversations) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

const Image* Dataset::find_image(const ConversationGraph& g) const {
  if (!g.image_ref) return nullptr;
  auto it = images.find(*g.image_ref);
  if (it == images.end()) throw DataError("conversation " + g.id + " references missing image " + *g.image_ref);
  return &it->second;
}

void Dataset::rebuild_manifest() {
  manifest.clear();
  for (const auto& g : conversations) {
    auto& c = manifest[g.event];
    if (g.label == Label::Rumour) {
      ++c.rumours;
    } else {
      ++c.non_rumours;
    }
  }
}

namespace {

void validate_graph(const ConversationGraph& g) {
  if (g.messages.empty()) throw DataError("conversation " + g.id + " has no messages");
  if (g.messages.front().parent.has_value()) {
    throw DataError("conversation " + g.id + ": first message " + g.messages.front().id +
                    " must be the source (no parent)");
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < g.messages.size(); ++i) {
    const Message& m = g.messages[i];
    if (!seen.insert(m.id).second) {
      throw DataError("conversation " + g.id + ": duplicate message id " + m.id);
    }
    if (i == 0) continue;
    if (!m.parent.has_value()) {
      throw DataError("conversation " + g.id + ": message " + m.id +
                      " has no parent but is not the first message");
    }
    if (*m.parent == m.id) {
      throw DataError("conversation " + g.id + ": message " + m.id + " is its own parent (cycle)");
    }
    if (!seen.contains(*m.parent)) {
      // Parents must appear earlier in the list, which also rules out cycles.
      throw DataError("conversation " + g.id + ": message " + m.id + " has dangling parent " +
                      *m.parent);
    }
  }
}

json graph_to_json(const ConversationGraph& g) {
  json rec;
  rec["id"] = g.id;
  rec["event"] = g.event;
  rec["label"] = label_name(g.label);
  rec["language"] = g.language;
  if (g.image_ref) {
    rec["image"] = *g.image_ref;
  } else {
    rec["image"] = nullptr;
  }
  json msgs = json::array();
  for (const Message& m : g.messages) {
    json jm;
    jm["id"] = m.id;
    jm["text"] = m.text;
    if (m.parent) {
      jm["parent"] = *m.parent;
    } else {
      jm["parent"] = nullptr;
    }
    msgs.push_back(std::move(jm));
  }
  rec["messages"] = std::move(msgs);
  return rec;
}

ConversationGraph graph_from_json(const json& rec) {
  ConversationGraph g;
  try {
    g.id = rec.at("id").get<std::string>();
    g.event = rec.at("event").get<std::string>();
    g.label = label_from_name(rec.at("label").get<std::string>());
    g.language = rec.at("language").get<std::string>();
    if (!rec.at("image").is_null()) g.image_ref = rec.at("image").get<std::string>();
    for (const json& jm : rec.at("messages")) {
      Message m;
      m.id = jm.at("id").get<std::string>();
      m.text = jm.at("text").get<std::string>();
      if (!jm.at("parent").is_null()) m.parent = jm.at("parent").get<std::string>();
      g.messages.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed conversation record: ") + e.what());
  }
  validate_graph(g);
  return g;
}

}  // namespace

ConversationGraph parse_conversation(const std::string& json_record) {
  json rec;
  try {
    rec = json::parse(json_record);
  } catch (const json::exception& e) {
    throw DataError(std::string("conversation record is not valid JSON: ") + e.what());
  }
  return graph_from_json(rec);
}

std::string serialize_conversation(const ConversationGraph& graph) {
  validate_graph(graph);
  return graph_to_json(graph).dump();
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  fs::path file(path);
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot open dataset for writing: " + path);
  json header;
  header["format"] = "tgnn-dataset";
  header["version"] = 1;
  header["conversations"] = dataset.conversations.size();
  out << header.dump() << "\n";
  for (const auto& g : dataset.conversations) out << serialize_conversation(g) << "\n";
  if (!out) throw DataError("failed writing dataset: " + path);
  for (const auto& [ref, img] : dataset.images) {
    fs::path img_path = file.parent_path() / ref;
    if (img_path.has_parent_path()) fs::create_directories(img_path.parent_path());
    save_image(img, img_path.string());
  }
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty dataset file: " + path);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    throw DataError("missing dataset header in " + path);
  }
  if (header.value("format", "") != "tgnn-dataset") {
    throw DataError("not a tgnn-dataset file: " + path);
  }
  if (header.value("version", 0) != 1) {
    throw DataError("unsupported dataset version in " + path);
  }
  Dataset ds;
  std::set<std::string> ids;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ConversationGraph g = parse_conversation(line);
    if (!ids.insert(g.id).second) {
      throw DataError("duplicate conversation id " + g.id + " in " + path);
    }
    ds.conversations.push_back(std::move(g));
  }
  ds.rebuild_manifest();
  fs::path dir = fs::path(path).parent_path();
  for (const auto& g : ds.conversations) {
    if (!g.image_ref || ds.images.contains(*g.image_ref)) continue;
    ds.images.emplace(*g.image_ref, load_image((dir / *g.image_ref).string()));
  }
  return ds;
}

Neighborhood build_connectivity(const ConversationGraph& graph) {
  validate_graph(graph);
  std::size_t n = graph.messages.size();
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index.emplace(graph.messages[i].id, i);
  std::vector<std::set<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    adj[i].insert(i);  // self-loop keeps isolated nodes well-defined
    if (!graph.messages[i].parent) continue;
    std::size_t p = index.at(*graph.messages[i].parent);
    adj[i].insert(p);
    adj[p].insert(i);
  }
  Neighborhood nb;
  nb.neighbors.reserve(n);
  for (auto& s : adj) nb.neighbors.emplace_back(s.begin(), s.end());
  return nb;
}

namespace {
constexpr char kImageMagic[4] = {'T', 'G', 'I', '1'};

void put_u16(std::ofstream& out, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2] = {0, 0};
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}
}  // namespace

void save_image(const Image& image, const std::string& path) {
  if (image.pixels.size() != image.height * image.width * image.channels) {
    throw DataError("image pixel count does not match dimensions: " + path);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open image for writing: " + path);
  out.write(kImageMagic, 4);
  put_u16(out, static_cast<std::uint16_t>(image.height));
  put_u16(out, static_cast<std::uint16_t>(image.width));
  put_u16(out, static_cast<std::uint16_t>(image.channels));
  put_u16(out, 0);  // reserved
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size() * sizeof(float)));
  if (!out) throw DataError("failed writing image: " + path);
}

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open image: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kImageMagic, 4) != 0) {
    throw DataError("bad image magic in " + path);
  }
  Image img;
  img.height = get_u16(in);
  img.width = get_u16(in);
  img.channels = get_u16(in);
  get_u16(in);  // reserved
  if (!in || img.height == 0 || img.width == 0 || img.channels == 0) {
    throw DataError("bad image header in " + path);
  }
  img.pixels.resize(img.height * img.width * img.channels);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size() * sizeof(float)));
  if (!in) throw DataError("truncated image data in " + path);
  for (float p : img.pixels) {
    if (!std::isfinite(p)) throw DomainError("non-finite pixel in " + path);
  }
  return img;
}

}  // namespace tgnn
