// Command-line entry point: generate / train / distill / eval / cv / report
// over the documented dataset, checkpoint, metrics and report formats.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tgnn/config.hpp"
#include "tgnn/data.hpp"
#include "tgnn/manifest.hpp"
#include "tgnn/metrics.hpp"
#include "tgnn/model.hpp"
#include "tgnn/report.hpp"
#include "tgnn/splits.hpp"
#include "tgnn/synth.hpp"
#include "tgnn/train.hpp"
#include "tgnn/util.hpp"

namespace fs = std::filesystem;
using namespace tgnn;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string data_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

KeyValueConfig load_config(const std::string& path) {
  if (path.empty()) return KeyValueConfig::parse_string("", "<defaults>");
  return KeyValueConfig::parse_file(path);
}

fs::path ensure_out_dir(const std::string& out) {
  if (out.empty()) throw ConfigError("--out is required");
  fs::path dir(out);
  fs::create_directories(dir);
  return dir;
}

void add_fingerprint(std::vector<std::pair<std::string, std::string>>& list,
                     const std::string& path) {
  list.emplace_back(path, file_fingerprint(path));
}

void finish_manifest(RunManifest& manifest, const fs::path& out_dir) {
  manifest.timestamp = utc_timestamp();
  write_manifest(manifest, (out_dir / "manifest.json").string());
}

// Training hyperparameter flags shared by train / distill / cv. Defaults
// mirror the config-file defaults; explicit flags win over the config file.
struct HyperFlags {
  std::size_t batch_size = 32;
  std::size_t epochs = 5;
  double learning_rate = 0.00002;
  double l2_rate = 0.0001;
  double dropout = 0.3;
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& flags) {
  cmd->add_option("--batch-size", flags.batch_size, "Mini-batch size (conversations per step)")
      ->capture_default_str();
  cmd->add_option("--epochs", flags.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--learning-rate", flags.learning_rate, "Adam learning rate")
      ->capture_default_str();
  cmd->add_option("--l2-rate", flags.l2_rate, "L2 regularization rate")->capture_default_str();
  cmd->add_option("--dropout", flags.dropout, "Dropout rate on the classifier input")
      ->capture_default_str();
}

TrainConfig resolve_train_config(const CommonOptions& common, CLI::App* cmd,
                                 const HyperFlags& flags, const KeyValueConfig& file) {
  TrainConfig config = train_config_from(file);
  if (cmd->count("--batch-size")) config.batch_size = flags.batch_size;
  if (cmd->count("--epochs")) config.epochs = flags.epochs;
  if (cmd->count("--learning-rate")) config.learning_rate = flags.learning_rate;
  if (cmd->count("--l2-rate")) config.l2_rate = flags.l2_rate;
  if (cmd->count("--dropout")) config.dropout = flags.dropout;
  if (common.seed_given) config.seed = common.seed;
  config.model.dropout = config.dropout;
  return config;
}

int run_generate(const CommonOptions& common) {
  KeyValueConfig file = load_config(common.config_path);
  GeneratorConfig generator = generator_config_from(file);
  file.ensure_all_consumed();
  fs::path out_dir = ensure_out_dir(common.out_dir);

  Dataset dataset = synth_generate(generator, common.seed);
  std::string dataset_path = (out_dir / "dataset.jsonl").string();
  save_dataset(dataset, dataset_path);

  RunManifest manifest;
  manifest.command = "generate";
  manifest.seed = common.seed;
  manifest.config = generator_config_entries(generator);
  if (!common.config_path.empty()) add_fingerprint(manifest.inputs, common.config_path);
  add_fingerprint(manifest.outputs, dataset_path);
  finish_manifest(manifest, out_dir);

  std::printf("generated %zu conversations across %zu events -> %s\n",
              dataset.conversations.size(), dataset.manifest.size(), dataset_path.c_str());
  return 0;
}

int run_train(const CommonOptions& common, CLI::App* cmd, const HyperFlags& flags,
              const std::string& mode, bool student_text_only) {
  if (mode == "loeo") {
    throw ConfigError("train runs a single ratio split; use `tgnn cv --mode loeo` for "
                      "leave-one-event-out cross-validation");
  }
  KeyValueConfig file = load_config(common.config_path);
  TrainConfig config = resolve_train_config(common, cmd, flags, file);
  file.ensure_all_consumed();
  if (student_text_only) config.model.multimodal = false;
  fs::path out_dir = ensure_out_dir(common.out_dir);

  Dataset dataset = load_dataset(common.data_path);
  SplitPlan plan = make_splits(dataset, SplitMode::Ratio, config.seed);
  save_split_plan(plan, (out_dir / "splits.jsonl").string());

  TgnnModel model(config.model, mix_seed(config.seed, 0x7e));
  TrainHistory history = train(model, dataset, plan.folds[0], config);
  std::string checkpoint_path = (out_dir / "model.ckpt").string();
  model.save(checkpoint_path);
  save_history(history, (out_dir / "history.jsonl").string());

  MetricsReport report;
  report.folds.push_back(evaluate_model(model, dataset, plan.folds[0].test, plan.folds[0].name));
  report.average = average_rows(report.folds);
  std::string metrics_path = (out_dir / "metrics.jsonl").string();
  save_metrics(report, metrics_path);
  std::fputs(render_metrics_table(report).c_str(), stdout);

  RunManifest manifest;
  manifest.command = student_text_only ? "train --student-text-only" : "train";
  manifest.seed = config.seed;
  manifest.config = train_config_entries(config);
  if (!common.config_path.empty()) add_fingerprint(manifest.inputs, common.config_path);
  add_fingerprint(manifest.inputs, common.data_path);
  add_fingerprint(manifest.outputs, checkpoint_path);
  add_fingerprint(manifest.outputs, metrics_path);
  add_fingerprint(manifest.outputs, (out_dir / "splits.jsonl").string());
  finish_manifest(manifest, out_dir);
  return 0;
}

int run_distill(const CommonOptions& common, CLI::App* cmd, const HyperFlags& flags,
                const std::string& teacher_checkpoint) {
  if (teacher_checkpoint.empty()) {
    throw ConfigError("distill needs --teacher-checkpoint; train the multimodal teacher first "
                      "(`tgnn train`), then distill the student from it");
  }
  KeyValueConfig file = load_config(common.config_path);
  TrainConfig config = resolve_train_config(common, cmd, flags, file);
  file.ensure_all_consumed();
  fs::path out_dir = ensure_out_dir(common.out_dir);

  TgnnModel teacher = TgnnModel::load(teacher_checkpoint);
  if (!teacher.config().multimodal) {
    throw ConfigError("distill expects a multimodal teacher checkpoint; " + teacher_checkpoint +
                      " holds a text-only model");
  }

  Dataset dataset = load_dataset(common.data_path);
  SplitPlan plan = make_splits(dataset, SplitMode::Ratio, config.seed);
  save_split_plan(plan, (out_dir / "splits.jsonl").string());

  SoftLabelStore store = predict_soft_labels(teacher, dataset);
  ModelConfig student_config = config.model;
  student_config.multimodal = false;
  TgnnModel student(student_config, mix_seed(config.seed, 0x57));
  TrainHistory history = distill(student, dataset, plan.folds[0], store, config);

  std::string checkpoint_path = (out_dir / "student.ckpt").string();
  student.save(checkpoint_path);
  save_history(history, (out_dir / "history.jsonl").string());

  MetricsReport report;
  report.folds.push_back(evaluate_model(student, dataset, plan.folds[0].test, plan.folds[0].name));
  report.average = average_rows(report.folds);
  std::string metrics_path = (out_dir / "metrics.jsonl").string();
  save_metrics(report, metrics_path);
  std::fputs(render_metrics_table(report).c_str(), stdout);

  RunManifest manifest;
  manifest.command = "distill";
  manifest.seed = config.seed;
  manifest.config = train_config_entries(config);
  manifest.config.emplace_back("teacher_fingerprint", store.teacher_fingerprint);
  if (!common.config_path.empty()) add_fingerprint(manifest.inputs, common.config_path);
  add_fingerprint(manifest.inputs, common.data_path);
  add_fingerprint(manifest.inputs, teacher_checkpoint);
  add_fingerprint(manifest.outputs, checkpoint_path);
  add_fingerprint(manifest.outputs, metrics_path);
  finish_manifest(manifest, out_dir);
  return 0;
}

int run_eval(const CommonOptions& common, const std::string& checkpoint) {
  if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint");
  fs::path out_dir = ensure_out_dir(common.out_dir);
  TgnnModel model = TgnnModel::load(checkpoint);
  Dataset dataset = load_dataset(common.data_path);

  std::vector<std::string> ids;
  ids.reserve(dataset.conversations.size());
  for (const auto& g : dataset.conversations) ids.push_back(g.id);

  MetricsReport report;
  report.folds.push_back(evaluate_model(model, dataset, ids, "all"));
  report.average = average_rows(report.folds);
  std::string metrics_path = (out_dir / "metrics.jsonl").string();
  save_metrics(report, metrics_path);
  std::fputs(render_metrics_table(report).c_str(), stdout);

  RunManifest manifest;
  manifest.command = "eval";
  manifest.seed = 0;
  add_fingerprint(manifest.inputs, checkpoint);
  add_fingerprint(manifest.inputs, common.data_path);
  add_fingerprint(manifest.outputs, metrics_path);
  finish_manifest(manifest, out_dir);
  return 0;
}

int run_cv(const CommonOptions& common, CLI::App* cmd, const HyperFlags& flags,
           const std::string& mode, std::size_t jobs, bool student_text_only, bool kd) {
  KeyValueConfig file = load_config(common.config_path);
  TrainConfig config = resolve_train_config(common, cmd, flags, file);
  file.ensure_all_consumed();
  if (cmd->count("--jobs")) config.jobs = jobs;
  fs::path out_dir = ensure_out_dir(common.out_dir);

  Dataset dataset = load_dataset(common.data_path);
  SplitMode split_mode = mode == "ratio" ? SplitMode::Ratio : SplitMode::LeaveOneEventOut;
  SplitPlan plan = make_splits(dataset, split_mode, config.seed);
  save_split_plan(plan, (out_dir / "splits.jsonl").string());

  ModelVariant variant = ModelVariant::Teacher;
  if (kd) {
    variant = ModelVariant::StudentKd;
  } else if (student_text_only) {
    variant = ModelVariant::Student;
  }
  MetricsReport report = cross_validate(dataset, plan, config, variant);
  std::string metrics_path = (out_dir / "metrics.jsonl").string();
  save_metrics(report, metrics_path);
  std::fputs(render_metrics_table(report).c_str(), stdout);

  RunManifest manifest;
  manifest.command = "cv";
  manifest.seed = config.seed;
  manifest.config = train_config_entries(config);
  manifest.config.emplace_back("cv.mode", mode);
  manifest.config.emplace_back("cv.variant", kd ? "student-kd"
                                                : (student_text_only ? "student" : "teacher"));
  if (!common.config_path.empty()) add_fingerprint(manifest.inputs, common.config_path);
  add_fingerprint(manifest.inputs, common.data_path);
  add_fingerprint(manifest.outputs, metrics_path);
  add_fingerprint(manifest.outputs, (out_dir / "splits.jsonl").string());
  finish_manifest(manifest, out_dir);
  return 0;
}

int run_report(const CommonOptions& common, const std::string& checkpoint, std::size_t k) {
  if (checkpoint.empty()) throw ConfigError("report needs --checkpoint");
  fs::path out_dir = ensure_out_dir(common.out_dir);
  TgnnModel model = TgnnModel::load(checkpoint);
  Dataset dataset = load_dataset(common.data_path);

  std::vector<AttentionRecord> records;
  records.reserve(dataset.conversations.size());
  for (const auto& g : dataset.conversations) {
    const Image* image = model.config().multimodal ? dataset.find_image(g) : nullptr;
    records.push_back(attention_report(model, g, image, k));
  }
  std::string report_path = (out_dir / "attention.jsonl").string();
  save_attention_records(records, report_path);

  RunManifest manifest;
  manifest.command = "report";
  manifest.seed = 0;
  manifest.config.emplace_back("report.k", std::to_string(k));
  add_fingerprint(manifest.inputs, checkpoint);
  add_fingerprint(manifest.inputs, common.data_path);
  add_fingerprint(manifest.outputs, report_path);
  finish_manifest(manifest, out_dir);
  std::printf("wrote %zu attention records -> %s\n", records.size(), report_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TGNN rumour detection: train and evaluate transformer-GNN models with "
               "global-local attention, multimodal fusion and knowledge distillation"};
  app.require_subcommand(1);

  CommonOptions common;
  HyperFlags flags;
  std::string mode = "ratio";
  std::string cv_mode = "loeo";
  std::string teacher_checkpoint;
  std::string checkpoint;
  std::size_t jobs = 1;
  std::size_t top_k = 5;
  bool student_text_only = false;
  bool kd = false;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    cmd->add_option("--config", common.config_path, "Key-value config file (all keys optional)");
    if (needs_data) {
      cmd->add_option("--data", common.data_path, "Dataset file (tgnn-dataset JSONL)")
          ->required();
    }
    cmd->add_option("--out", common.out_dir, "Output directory")->required();
    cmd->add_option("--seed", common.seed, "Master random seed")
        ->capture_default_str()
        ->each([&](const std::string&) { common.seed_given = true; });
  };

  CLI::App* generate = app.add_subcommand("generate", "Create a synthetic benchmark dataset");
  add_common(generate, false);

  CLI::App* train_cmd = app.add_subcommand("train", "Train one model on a seeded ratio split");
  add_common(train_cmd, true);
  add_hyper_flags(train_cmd, flags);
  train_cmd->add_option("--mode", mode, "Split mode: ratio (loeo lives under cv)")
      ->capture_default_str();
  train_cmd->add_flag("--student-text-only", student_text_only,
                      "Train the text-only student variant instead of the multimodal teacher");

  CLI::App* distill_cmd =
      app.add_subcommand("distill", "Train a text-only student under a teacher's soft labels");
  add_common(distill_cmd, true);
  add_hyper_flags(distill_cmd, flags);
  distill_cmd->add_option("--teacher-checkpoint", teacher_checkpoint,
                          "Checkpoint of the multimodal teacher (train it first)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint to evaluate")->required();

  CLI::App* cv_cmd = app.add_subcommand("cv", "Cross-validate (leave-one-event-out or ratio)");
  add_common(cv_cmd, true);
  add_hyper_flags(cv_cmd, flags);
  cv_cmd->add_option("--mode", cv_mode, "Split mode: loeo or ratio")->capture_default_str();
  cv_cmd->add_option("--jobs", jobs, "Parallel fold workers")->capture_default_str();
  cv_cmd->add_flag("--student-text-only", student_text_only, "Evaluate the text-only student");
  cv_cmd->add_flag("--kd", kd, "Teacher + distilled student per fold (implies text-only student)");

  CLI::App* report_cmd =
      app.add_subcommand("report", "Write per-conversation attention reports for a checkpoint");
  add_common(report_cmd, true);
  report_cmd->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  report_cmd->add_option("--k", top_k, "Replies to keep per conversation")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) return run_generate(common);
    if (train_cmd->parsed()) return run_train(common, train_cmd, flags, mode, student_text_only);
    if (distill_cmd->parsed()) return run_distill(common, distill_cmd, flags, teacher_checkpoint);
    if (eval_cmd->parsed()) return run_eval(common, checkpoint);
    if (cv_cmd->parsed()) return run_cv(common, cv_cmd, flags, cv_mode, jobs, student_text_only, kd);
    if (report_cmd->parsed()) return run_report(common, checkpoint, top_k);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
