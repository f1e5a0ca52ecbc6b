#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgnn/errors.hpp"

namespace tgnn {

enum class Label : int { NonRumour = 0, Rumour = 1 };

std::string label_name(Label l);
Label label_from_name(const std::string& s);

// Raw pixel container. Stored on disk as a 12-byte header (4-byte magic
// "TGI1", then height/width/channels as little-endian u16 plus 2 reserved
// bytes) followed by float32 pixels in row-major HxWxC order.
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<float> pixels;

  bool operator==(const Image&) const = default;
  static Image blank(std::size_t h, std::size_t w, std::size_t c);
};

struct Message {
  std::string id;
  std::string text;
  std::optional<std::string> parent;  // empty for the source post

  bool operator==(const Message&) const = default;
};

// A source post plus its tree of replies. The first message is the source;
// every later message's parent refers to an earlier one.
struct ConversationGraph {
  std::string id;
  std::string event;
  Label label = Label::NonRumour;
  std::string language = "english";
  std::optional<std::string> image_ref;  // relative path; empty means no image
  std::vector<Message> messages;

  bool operator==(const ConversationGraph&) const = default;
  std::size_t size() const { return messages.size(); }
};

struct EventCounts {
  std::size_t rumours = 0;
  std::size_t non_rumours = 0;
  bool operator==(const EventCounts&) const = default;
};

struct Dataset {
  std::vector<ConversationGraph> conversations;
  std::map<std::string, EventCounts> manifest;  // event -> counts
  std::unordered_map<std::string, Image> images;  // image_ref -> pixels

  const ConversationGraph* find(const std::string& id) const;
  const Image* find_image(const ConversationGraph& g) const;
  void rebuild_manifest();
};

// Undirected adjacency with self-loops, one sorted neighbor list per node
// (node order = message list order, source first).
struct Neighborhood {
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const { return neighbors.size(); }
  std::size_t degree(std::size_t i) const { return neighbors.at(i).size(); }
};

// One JSON record per conversation; validates the tree invariants and names
// the offending message id on failure.
ConversationGraph parse_conversation(const std::string& json_record);
std::string serialize_conversation(const ConversationGraph& graph);

// Dataset files are newline-delimited JSON records preceded by one header
// record; image files live in an `images/` directory next to the dataset.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

Neighborhood build_connectivity(const ConversationGraph& graph);

void save_image(const Image& image, const std::string& path);
Image load_image(const std::string& path);

}  // namespace tgnn
