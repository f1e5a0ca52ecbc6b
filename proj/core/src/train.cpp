#include "tgnn/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <thread>

#include "json.hpp"
#include "tgnn/optim.hpp"
#include "tgnn/util.hpp"

namespace tgnn {

using nlohmann::json;

namespace {

const ConversationGraph& conversation_by_id(const Dataset& dataset, const std::string& id) {
  const ConversationGraph* g = dataset.find(id);
  if (g == nullptr) throw DataError("split references unknown conversation " + id);
  return *g;
}

const Image* image_for(const TgnnModel& model, const Dataset& dataset,
                       const ConversationGraph& graph) {
  if (!model.config().multimodal) return nullptr;
  return dataset.find_image(graph);
}

double tune_accuracy(TgnnModel& model, const Dataset& dataset,
                     const std::vector<std::string>& ids) {
  bool was_training = model.training();
  model.set_training(false);
  std::size_t correct = 0;
  for (const std::string& id : ids) {
    const ConversationGraph& g = conversation_by_id(dataset, id);
    ForwardResult result = model.forward(g, image_for(model, dataset, g));
    model.tape().clear();
    if (result.prediction.label() == g.label) ++correct;
  }
  model.set_training(was_training);
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

using LossFn = std::function<Tensor(TgnnModel&, const ForwardResult&, const ConversationGraph&)>;

TrainHistory run_training_loop(TgnnModel& model, const Dataset& dataset, const SplitFold& fold,
                               const TrainConfig& config, const LossFn& loss_fn) {
  if (fold.train.empty()) throw ConfigError("training fold has an empty train set");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");

  Adam optimizer({.learning_rate = config.learning_rate,
                  .weight_decay = config.l2_rate},
                 model.trainable_parameters());

  std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x5f75));
  TrainHistory history;
  std::vector<std::string> order = fold.train;

  double best_tune = -1.0;
  std::vector<std::vector<double>> best_snapshot;
  auto snapshot_params = [&] {
    std::vector<std::vector<double>> snap;
    for (auto& [name, t] : model.named_parameters()) {
      (void)name;
      snap.push_back(t.values());
    }
    return snap;
  };
  auto restore_params = [&](const std::vector<std::vector<double>>& snap) {
    std::size_t k = 0;
    for (auto& [name, t] : model.named_parameters()) {
      (void)name;
      t.values() = snap[k++];
    }
  };

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto started = std::chrono::steady_clock::now();
    deterministic_shuffle(order, shuffle_rng);
    model.set_training(true);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
      std::size_t end = std::min(begin + config.batch_size, order.size());
      double inv_batch = 1.0 / static_cast<double>(end - begin);
      optimizer.zero_grad();
      for (std::size_t k = begin; k < end; ++k) {
        const ConversationGraph& g = conversation_by_id(dataset, order[k]);
        try {
          ForwardResult result = model.forward(g, image_for(model, dataset, g));
          Tensor loss = loss_fn(model, result, g);
          double value = loss.value();
          if (!std::isfinite(value)) throw NumericError("loss is not finite");
          loss_sum += value;
          model.tape().backward(scale(loss, inv_batch));
          model.tape().clear();
        } catch (const NumericError& e) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                             ", batch " + std::to_string(batch_index + 1) + ", conversation " +
                             g.id + ": " + e.what());
        }
      }
      optimizer.step();
    }
    model.set_training(false);

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    if (!fold.tune.empty()) {
      stats.tune_accuracy = tune_accuracy(model, dataset, fold.tune);
      if (*stats.tune_accuracy > best_tune) {
        best_tune = *stats.tune_accuracy;
        best_snapshot = snapshot_params();
      }
    }
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    history.epochs.push_back(std::move(stats));
  }

  if (!fold.tune.empty() && !best_snapshot.empty()) restore_params(best_snapshot);
  return history;
}

}  // namespace

TrainHistory train(TgnnModel& model, const Dataset& dataset, const SplitFold& fold,
                   const TrainConfig& config) {
  return run_training_loop(model, dataset, fold, config,
                           [](TgnnModel& m, const ForwardResult& result,
                              const ConversationGraph& g) {
                             return model_cross_entropy(m, result, g.label);
                           });
}

SoftLabelStore predict_soft_labels(TgnnModel& teacher, const Dataset& dataset) {
  bool was_training = teacher.training();
  teacher.set_training(false);
  SoftLabelStore store;
  store.teacher_fingerprint = teacher.fingerprint();
  for (const ConversationGraph& g : dataset.conversations) {
    ForwardResult result = teacher.forward(g, image_for(teacher, dataset, g));
    teacher.tape().clear();
    store.labels.emplace(g.id, result.prediction.probabilities);
  }
  teacher.set_training(was_training);
  return store;
}

TrainHistory distill(TgnnModel& student, const Dataset& dataset, const SplitFold& fold,
                     const SoftLabelStore& store, const TrainConfig& config) {
  for (const std::string& id : fold.train) {
    if (!store.labels.contains(id)) {
      throw DataError("soft-label store is missing conversation " + id);
    }
  }
  const KdDirection direction = student.config().kd_direction;
  const double temperature = student.config().kd_temperature;
  return run_training_loop(
      student, dataset, fold, config,
      [&store, direction, temperature](TgnnModel& m, const ForwardResult& result,
                                       const ConversationGraph& g) {
        Tensor ce = model_cross_entropy(m, result, g.label);
        Tensor kd = kd_loss(result.probabilities, store.labels.at(g.id), direction, temperature);
        return total_loss(ce, kd);
      });
}

MetricsRow evaluate_model(TgnnModel& model, const Dataset& dataset,
                          const std::vector<std::string>& test_ids, const std::string& row_name) {
  if (test_ids.empty()) throw ConfigError("evaluate: empty test set");
  bool was_training = model.training();
  model.set_training(false);
  std::vector<int> predicted, actual;
  predicted.reserve(test_ids.size());
  actual.reserve(test_ids.size());
  for (const std::string& id : test_ids) {
    const ConversationGraph& g = conversation_by_id(dataset, id);
    ForwardResult result = model.forward(g, image_for(model, dataset, g));
    model.tape().clear();
    predicted.push_back(result.prediction.predicted_class);
    actual.push_back(g.label == Label::Rumour ? 1 : 0);
  }
  model.set_training(was_training);
  MetricsRow row = compute_metrics(predicted, actual);
  row.name = row_name;
  return row;
}

MetricsReport cross_validate(const Dataset& dataset, const SplitPlan& plan,
                             const TrainConfig& config, ModelVariant variant) {
  if (plan.folds.empty()) throw ConfigError("cross_validate: split plan has no folds");
  std::vector<MetricsRow> rows(plan.folds.size());

  auto run_fold = [&](std::size_t index) {
    const SplitFold& fold = plan.folds[index];
    TrainConfig fold_config = config;
    fold_config.seed = mix_seed(config.seed, 0xf01d + index);
    fold_config.model.dropout = config.dropout;

    ModelConfig teacher_config = fold_config.model;
    teacher_config.multimodal = true;
    ModelConfig student_config = fold_config.model;
    student_config.multimodal = false;

    std::uint64_t teacher_seed = mix_seed(fold_config.seed, 0x7e);
    std::uint64_t student_seed = mix_seed(fold_config.seed, 0x57);

    if (variant == ModelVariant::Teacher) {
      TgnnModel model(teacher_config, teacher_seed);
      train(model, dataset, fold, fold_config);
      rows[index] = evaluate_model(model, dataset, fold.test, fold.name);
      return;
    }
    if (variant == ModelVariant::Student) {
      TgnnModel model(student_config, student_seed);
      train(model, dataset, fold, fold_config);
      rows[index] = evaluate_model(model, dataset, fold.test, fold.name);
      return;
    }
    // StudentKd: the fold's multimodal teacher is always trained first on the
    // same train split, then a fresh student learns from its soft labels.
    TgnnModel teacher(teacher_config, teacher_seed);
    train(teacher, dataset, fold, fold_config);
    SoftLabelStore store = predict_soft_labels(teacher, dataset);
    TgnnModel student(student_config, student_seed);
    distill(student, dataset, fold, store, fold_config);
    rows[index] = evaluate_model(student, dataset, fold.test, fold.name);
  };

  std::size_t jobs = std::max<std::size_t>(1, std::min(config.jobs, plan.folds.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < plan.folds.size(); ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t i = next.fetch_add(1); i < plan.folds.size(); i = next.fetch_add(1)) {
            run_fold(i);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  MetricsReport report;
  report.folds = std::move(rows);
  report.average = average_rows(report.folds);
  return report;
}

void save_history(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open history file for writing: " + path);
  json header;
  header["format"] = "tgnn-history";
  header["version"] = 1;
  out << header.dump() << "\n";
  for (const EpochStats& e : history.epochs) {
    json j;
    j["epoch"] = e.epoch;
    j["mean_loss"] = e.mean_loss;
    if (e.tune_accuracy) {
      j["tune_accuracy"] = *e.tune_accuracy;
    } else {
      j["tune_accuracy"] = nullptr;
    }
    j["seconds"] = e.seconds;
    out << j.dump() << "\n";
  }
  if (!out) throw DataError("failed writing history: " + path);
}

}  // namespace tgnn
