#include "tgnn/report.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace tgnn {

using nlohmann::json;

AttentionRecord attention_report(TgnnModel& model, const ConversationGraph& graph,
                                 const Image* image, std::size_t k) {
  if (k == 0) throw DomainError("attention_report: k must be positive");
  bool was_training = model.training();
  model.set_training(false);
  ForwardResult result = model.forward(graph, image);
  model.tape().clear();
  model.set_training(was_training);

  AttentionRecord record;
  record.conversation_id = graph.id;
  record.ground_truth = graph.label;
  record.prediction = result.prediction;

  std::vector<std::size_t> order(result.attention.scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.attention.scores[a] > result.attention.scores[b];
  });
  std::size_t keep = std::min(k, order.size());
  for (std::size_t r = 0; r < keep; ++r) {
    std::size_t node = result.attention.indices[order[r]];
    const Message& m = graph.messages.at(node);
    record.replies.push_back({m.id, m.text, result.attention.scores[order[r]]});
  }
  return record;
}

void save_attention_records(const std::vector<AttentionRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open report file for writing: " + path);
  json header;
  header["format"] = "tgnn-attention";
  header["version"] = 1;
  out << header.dump() << "\n";
  for (const AttentionRecord& r : records) {
    json j;
    j["id"] = r.conversation_id;
    j["ground_truth"] = label_name(r.ground_truth);
    j["prediction"] = label_name(r.prediction.label());
    j["probabilities"] = {r.prediction.probabilities[0], r.prediction.probabilities[1]};
    json replies = json::array();
    for (const ReplyScore& s : r.replies) {
      json jr;
      jr["id"] = s.id;
      jr["text"] = s.text;
      jr["score"] = s.score;
      replies.push_back(std::move(jr));
    }
    j["replies"] = std::move(replies);
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("failed writing report: " + path);
}

std::vector<AttentionRecord> load_attention_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty report file: " + path);
  json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("format", "") != "tgnn-attention") {
    throw DataError("not a tgnn-attention file: " + path);
  }
  std::vector<AttentionRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("malformed attention record in " + path);
    AttentionRecord r;
    r.conversation_id = j.at("id").get<std::string>();
    r.ground_truth = label_from_name(j.at("ground_truth").get<std::string>());
    r.prediction.conversation_id = r.conversation_id;
    r.prediction.probabilities = {j.at("probabilities")[0].get<double>(),
                                  j.at("probabilities")[1].get<double>()};
    r.prediction.predicted_class = j.at("prediction").get<std::string>() == "rumour" ? 1 : 0;
    for (const json& jr : j.at("replies")) {
      r.replies.push_back({jr.at("id").get<std::string>(), jr.at("text").get<std::string>(),
                           jr.at("score").get<double>()});
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace tgnn
