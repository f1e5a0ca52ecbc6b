#include "tgnn/splits.hpp"

#include <fstream>
#include <random>

#include "json.hpp"
#include "tgnn/util.hpp"

namespace tgnn {

using nlohmann::json;

SplitPlan make_splits(const Dataset& dataset, SplitMode mode, std::uint64_t seed) {
  if (dataset.conversations.empty()) throw ConfigError("make_splits: dataset is empty");
  SplitPlan plan;
  if (mode == SplitMode::LeaveOneEventOut) {
    if (dataset.manifest.size() < 2) {
      throw ConfigError("leave-one-event-out needs at least two events, got " +
                        std::to_string(dataset.manifest.size()));
    }
    for (const auto& [event, counts] : dataset.manifest) {
      (void)counts;
      SplitFold fold;
      fold.name = event;
      for (const auto& g : dataset.conversations) {
        (g.event == event ? fold.test : fold.train).push_back(g.id);
      }
      plan.folds.push_back(std::move(fold));
    }
    return plan;
  }

  // Ratio mode: seeded shuffle, then tune / test / train by the fixed rule.
  std::vector<std::string> ids;
  ids.reserve(dataset.conversations.size());
  for (const auto& g : dataset.conversations) ids.push_back(g.id);
  std::mt19937_64 rng(mix_seed(seed, 0x73706c69));
  deterministic_shuffle(ids, rng);
  std::size_t total = ids.size();
  std::size_t tune = total / 10;
  std::size_t rest = total - tune;
  std::size_t test = rest / 4;
  std::size_t train = rest - test;
  if (train == 0 || test == 0) {
    throw ConfigError("ratio split needs at least one train and one test conversation, got " +
                      std::to_string(total) + " total");
  }
  SplitFold fold;
  fold.name = "ratio";
  fold.tune.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(tune));
  fold.train.assign(ids.begin() + static_cast<std::ptrdiff_t>(tune),
                    ids.begin() + static_cast<std::ptrdiff_t>(tune + train));
  fold.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(tune + train), ids.end());
  plan.folds.push_back(std::move(fold));
  return plan;
}

void save_split_plan(const SplitPlan& plan, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open split plan for writing: " + path);
  json header;
  header["format"] = "tgnn-splits";
  header["version"] = 1;
  out << header.dump() << "\n";
  for (const SplitFold& fold : plan.folds) {
    json rec;
    rec["fold"] = fold.name;
    rec["train"] = fold.train;
    rec["tune"] = fold.tune;
    rec["test"] = fold.test;
    out << rec.dump() << "\n";
  }
  if (!out) throw DataError("failed writing split plan: " + path);
}

SplitPlan load_split_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open split plan: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty split plan: " + path);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    throw DataError("missing split plan header in " + path);
  }
  if (header.value("format", "") != "tgnn-splits" || header.value("version", 0) != 1) {
    throw DataError("not a tgnn-splits file: " + path);
  }
  SplitPlan plan;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      json rec = json::parse(line);
      SplitFold fold;
      fold.name = rec.at("fold").get<std::string>();
      fold.train = rec.at("train").get<std::vector<std::string>>();
      fold.tune = rec.at("tune").get<std::vector<std::string>>();
      fold.test = rec.at("test").get<std::vector<std::string>>();
      plan.folds.push_back(std::move(fold));
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed split record: ") + e.what());
    }
  }
  return plan;
}

}  // namespace tgnn
