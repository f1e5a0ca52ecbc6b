#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tgnn/autodiff.hpp"
#include "tgnn/model.hpp"
#include "tgnn/synth.hpp"
#include "tgnn/util.hpp"

using namespace tgnn;
using test_helpers::random_values;

namespace {

ModelConfig small_config(bool multimodal) {
  ModelConfig c;
  c.embed_dim = 8;
  c.visual_dim = 4;
  c.heads = 2;
  c.hash_buckets = 32;
  c.patch_grid = 2;
  c.image_height = 8;
  c.image_width = 8;
  c.image_channels = 3;
  c.dropout = 0.0;
  c.multimodal = multimodal;
  return c;
}

ConversationGraph five_node_conversation() {
  ConversationGraph g;
  g.id = "conv-5";
  g.event = "e0";
  g.label = Label::Rumour;
  g.language = "english";
  g.image_ref = "images/conv-5.img";
  g.messages = {{"m0", "breaking report from the river bridge", std::nullopt},
                {"m1", "is this real or fake?", "m0"},
                {"m2", "looks fake to me honestly", "m0"},
                {"m3", "i saw it too, can confirm", "m1"},
                {"m4", "source? this is unverified", "m2"}};
  return g;
}

Image test_image(std::uint64_t seed) {
  Image img = Image::blank(8, 8, 3);
  std::mt19937_64 rng(seed);
  for (float& p : img.pixels) p = static_cast<float>(uniform_real(rng, 0.0, 1.0));
  return img;
}

// Range +-1.0 keeps every gradient well above the finite-difference noise
// floor without saturating the classifier softmax.
void randomize_parameters(TgnnModel& model, std::uint64_t seed, double range = 1.0) {
  std::mt19937_64 rng(seed);
  for (auto& [name, tensor] : model.named_parameters()) {
    (void)name;
    for (double& v : tensor.values()) v = uniform_real(rng, -range, range);
  }
}

}  // namespace

TEST_CASE("teacher forward emits a simplex prediction and a full reply report") {
  TgnnModel model(small_config(true), 3);
  ConversationGraph g = five_node_conversation();
  Image img = test_image(1);
  ForwardResult out = model.forward(&g == nullptr ? g : g, &img);
  CHECK(out.probabilities.size() == 2);
  double total = out.probabilities.at(0) + out.probabilities.at(1);
  CHECK(std::fabs(total - 1.0) <= 1e-9);
  CHECK(out.attention.scores.size() == 4);
  double score_sum = 0.0;
  for (double s : out.attention.scores) {
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    score_sum += s;
  }
  CHECK(std::fabs(score_sum - 1.0) <= 1e-9);
}

TEST_CASE("forward is deterministic in eval mode") {
  TgnnModel model(small_config(true), 4);
  randomize_parameters(model, 9);
  ConversationGraph g = five_node_conversation();
  Image img = test_image(2);
  auto a = model.forward(g, &img).probabilities.values();
  model.tape().clear();
  auto b = model.forward(g, &img).probabilities.values();
  CHECK(a == b);
}

TEST_CASE("end-to-end gradients match finite differences for every parameter group") {
  TgnnModel model(small_config(true), 5);
  // zero-initialized classifier and visual projection would zero most
  // gradients; randomize everything so the check exercises every path
  randomize_parameters(model, 14);
  ConversationGraph g = five_node_conversation();
  Image img = test_image(3);
  auto loss = [&] {
    ForwardResult out = model.forward(g, &img);
    return model_cross_entropy(model, out, g.label);
  };
  // guard against a saturated softmax making the check vacuous
  double first_loss = loss().value();
  model.tape().clear();
  CHECK(first_loss > 1e-3);
  auto res = grad_check(model.tape(), loss, model.named_parameters(), 1e-5, 1e-4);
  INFO("worst ", res.worst_parameter, " err ", res.max_rel_error);
  CHECK(res.passed);
}

TEST_CASE("student equals the teacher with the visual path forced to zero") {
  // Same seed: the shared text parameters draw from the same init stream,
  // and the teacher's visual projection starts at zero.
  TgnnModel teacher(small_config(true), 21);
  TgnnModel student(small_config(false), 21);
  ConversationGraph g = five_node_conversation();
  Image img = test_image(4);
  ForwardResult teacher_out = teacher.forward(g, &img);
  ForwardResult student_out = student.forward(g, nullptr);
  CHECK(teacher_out.representation.values() == student_out.representation.values());
  CHECK(teacher_out.probabilities.values() == student_out.probabilities.values());

  // after perturbing the teacher's visual projection the paths diverge
  for (auto& [name, tensor] : teacher.named_parameters()) {
    if (name == "fusion.visual_projection") {
      for (double& v : tensor.values()) v = 0.05;
    }
  }
  teacher.tape().clear();
  auto fused = teacher.forward(g, &img).representation.values();
  CHECK(fused != student_out.representation.values());
}

TEST_CASE("copy_shared_parameters projects teacher weights onto the student") {
  TgnnModel teacher(small_config(true), 31);
  randomize_parameters(teacher, 32);
  TgnnModel student(small_config(false), 33);
  student.copy_shared_parameters(teacher);
  for (auto& [name, tensor] : teacher.named_parameters()) {
    if (name == "fusion.visual_projection" || name.rfind("image_encoder.", 0) == 0) {
      for (double& v : tensor.values()) v = 0.0;
    }
  }
  ConversationGraph g = five_node_conversation();
  Image img = test_image(5);
  auto a = teacher.forward(g, &img).probabilities.values();
  auto b = student.forward(g, nullptr).probabilities.values();
  CHECK(a == b);
}

TEST_CASE("a source-only conversation degenerates to the fused global representation") {
  TgnnModel model(small_config(true), 41);
  randomize_parameters(model, 42);
  ConversationGraph g;
  g.id = "solo";
  g.event = "e";
  g.label = Label::NonRumour;
  g.messages = {{"m0", "just one post", std::nullopt}};
  ForwardResult out = model.forward(g, nullptr);
  CHECK(out.attention.scores.empty());
  CHECK(out.representation.values() == out.fused_global.values());
}

TEST_CASE("a missing image encodes as a blank image, not a bypass") {
  TgnnModel model(small_config(true), 51);
  randomize_parameters(model, 52);
  ConversationGraph g = five_node_conversation();
  Image blank = Image::blank(8, 8, 3);
  auto with_null = model.forward(g, nullptr).probabilities.values();
  model.tape().clear();
  auto with_blank = model.forward(g, &blank).probabilities.values();
  CHECK(with_null == with_blank);
  // and the blank path differs from a non-blank image
  Image img = test_image(6);
  model.tape().clear();
  auto with_pixels = model.forward(g, &img).probabilities.values();
  CHECK(with_pixels != with_blank);
}

TEST_CASE("checkpoints rebuild an identical model") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tgnn_test_model_ckpt";
  fs::create_directories(dir);
  std::string path = (dir / "model.ckpt").string();

  TgnnModel model(small_config(true), 61);
  randomize_parameters(model, 62);
  model.save(path);
  TgnnModel loaded = TgnnModel::load(path);
  CHECK(loaded.config() == model.config());
  CHECK(loaded.fingerprint() == model.fingerprint());

  ConversationGraph g = five_node_conversation();
  Image img = test_image(7);
  CHECK(loaded.forward(g, &img).probabilities.values() ==
        model.forward(g, &img).probabilities.values());

  // round-trip through a second save stays bit-identical
  std::string path2 = (dir / "model2.ckpt").string();
  loaded.save(path2);
  CHECK(file_fingerprint(path) == file_fingerprint(path2));
  fs::remove_all(dir);
}

TEST_CASE("frozen encoders drop the table from the trainable set") {
  ModelConfig cfg = small_config(false);
  cfg.freeze_encoder = true;
  TgnnModel model(cfg, 71);
  for (auto& [name, tensor] : model.named_parameters()) {
    if (name == "message_encoder.table") CHECK_FALSE(tensor.requires_grad());
  }
  TgnnModel plain(small_config(false), 71);
  CHECK(model.trainable_parameters().size() + 1 == plain.trainable_parameters().size());
}

TEST_CASE("training-mode dropout draws from the model rng, eval does not") {
  ModelConfig cfg = small_config(true);
  cfg.dropout = 0.5;
  TgnnModel model(cfg, 81);
  randomize_parameters(model, 82);
  ConversationGraph g = five_node_conversation();
  Image img = test_image(8);
  model.set_training(true);
  auto t1 = model.forward(g, &img).probabilities.values();
  model.tape().clear();
  auto t2 = model.forward(g, &img).probabilities.values();
  CHECK(t1 != t2);  // rng advanced between dropout masks
  model.set_training(false);
  model.tape().clear();
  auto e1 = model.forward(g, &img).probabilities.values();
  model.tape().clear();
  auto e2 = model.forward(g, &img).probabilities.values();
  CHECK(e1 == e2);
}

TEST_CASE("softmax stages stay normalized across random model inputs") {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    TgnnModel model(small_config(true), 100 + trial);
    randomize_parameters(model, 200 + trial);
    GeneratorConfig gen;
    gen.events = 1;
    gen.conversations_per_event = 1;
    gen.reply_min = 2 + trial % 4;
    gen.reply_max = 2 + trial % 4;
    Dataset ds = synth_generate(gen, 300 + trial);
    const ConversationGraph& g = ds.conversations[0];
    const Image* img = ds.find_image(g);
    ForwardResult out = model.forward(g, img);
    double p = out.probabilities.at(0) + out.probabilities.at(1);
    CHECK(std::fabs(p - 1.0) <= 1e-9);
    double s = 0.0;
    for (double a : out.attention.scores) s += a;
    CHECK(std::fabs(s - 1.0) <= 1e-9);
  }
}
