#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tgnn/data.hpp"

namespace tgnn {

struct SplitFold {
  std::string name;
  std::vector<std::string> train;
  std::vector<std::string> tune;
  std::vector<std::string> test;
};

struct SplitPlan {
  std::vector<SplitFold> folds;
};

enum class SplitMode { LeaveOneEventOut, Ratio };

// LeaveOneEventOut: one fold per event; that event is the whole test set and
// contributes nothing to train. Ratio: a single fold with 10% tune carved
// out first, then the rest split 3:1 train:test (tune = floor(0.10*total),
// test = floor(rest/4)).
SplitPlan make_splits(const Dataset& dataset, SplitMode mode, std::uint64_t seed);

void save_split_plan(const SplitPlan& plan, const std::string& path);
SplitPlan load_split_plan(const std::string& path);

}  // namespace tgnn
