#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgnn/data.hpp"
#include "tgnn/metrics.hpp"
#include "tgnn/model.hpp"
#include "tgnn/splits.hpp"

namespace tgnn {

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  double learning_rate = 2e-5;
  double l2_rate = 1e-4;
  double dropout = 0.3;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;  // fold-level parallelism in cross_validate
  ModelConfig model;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::optional<double> tune_accuracy;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
};

void save_history(const TrainHistory& history, const std::string& path);

// Teacher class distributions keyed by conversation id, plus the fingerprint
// of the checkpoint that produced them.
struct SoftLabelStore {
  std::unordered_map<std::string, std::array<double, 2>> labels;
  std::string teacher_fingerprint;
};

// Mini-batch loop: conversations are processed one graph at a time, gradients
// accumulate across the batch, losses reduce by mean, one optimizer step per
// batch. Deterministic in (seed, data, config). Returns the best-on-tune
// parameters when the fold has a tune set, else the final ones.
TrainHistory train(TgnnModel& model, const Dataset& dataset, const SplitFold& fold,
                   const TrainConfig& config);

// Teacher predictions for every conversation in the dataset, eval mode.
SoftLabelStore predict_soft_labels(TgnnModel& teacher, const Dataset& dataset);

// Same loop as train but the objective adds the distillation term against
// the stored teacher distributions (constants; the teacher never changes).
TrainHistory distill(TgnnModel& student, const Dataset& dataset, const SplitFold& fold,
                     const SoftLabelStore& store, const TrainConfig& config);

// Accuracy/F1 metrics of the model on the listed conversations, eval mode.
MetricsRow evaluate_model(TgnnModel& model, const Dataset& dataset,
                          const std::vector<std::string>& test_ids, const std::string& row_name);

enum class ModelVariant { Teacher, Student, StudentKd };

// Trains one fresh model per fold (per-fold RNG streams derived from the
// master seed by fold index, so results do not depend on scheduling) and
// evaluates it on the fold's test set. StudentKd trains the fold's teacher
// first, then distills into a fresh student.
MetricsReport cross_validate(const Dataset& dataset, const SplitPlan& plan,
                             const TrainConfig& config, ModelVariant variant);

}  // namespace tgnn
