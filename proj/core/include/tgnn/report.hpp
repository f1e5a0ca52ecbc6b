#pragma once

#include <string>
#include <vector>

#include "tgnn/model.hpp"

namespace tgnn {

struct ReplyScore {
  std::string id;
  std::string text;
  double score = 0.0;
};

// Machine-readable attention record for one conversation: prediction,
// ground truth and the top replies by attention weight.
struct AttentionRecord {
  std::string conversation_id;
  Label ground_truth = Label::NonRumour;
  Prediction prediction;
  std::vector<ReplyScore> replies;  // descending score; ties by reply order
};

// Top-k replies by global-local attention weight; k larger than the reply
// count returns all replies, a source-only conversation returns none.
AttentionRecord attention_report(TgnnModel& model, const ConversationGraph& graph,
                                 const Image* image, std::size_t k);

void save_attention_records(const std::vector<AttentionRecord>& records, const std::string& path);
std::vector<AttentionRecord> load_attention_records(const std::string& path);

}  // namespace tgnn
