#pragma once

#include <array>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tgnn/data.hpp"
#include "tgnn/tensor.hpp"

namespace tgnn {

struct FusionParams {
  Tensor visual_projection;  // d x d_v
  Tensor classifier_weight;  // 2 x d
  Tensor classifier_bias;    // 2
};

// Per-reply attention weights from the global-local module, aligned to
// conversation order (reply i is node i). Empty for source-only
// conversations; otherwise the scores sum to 1.
struct GlobalLocalAttentionReport {
  std::vector<double> scores;        // one per reply, simplex
  std::vector<std::size_t> indices;  // node indices 1..n-1
};

// Class order is [non-rumour, rumour] everywhere.
struct Prediction {
  std::array<double, 2> probabilities{0.5, 0.5};
  int predicted_class = 0;  // argmax; exact ties go to the lower index
  std::string conversation_id;

  Label label() const { return predicted_class == 1 ? Label::Rumour : Label::NonRumour; }
};

enum class KdDirection {
  TeacherToStudent,  // KL(teacher || student), the soft-label objective
  StudentToTeacher,  // KL(student || teacher), the alternative reading
};

// Classifier zero-initialized, visual projection zero-initialized: their
// learning signal then drives predictions from the first optimizer steps
// instead of fighting random-init logits.
FusionParams make_fusion(Tape& tape, std::size_t embed_dim, std::size_t visual_dim,
                         bool multimodal);

Tensor project_visual(const Tensor& visual_projection, const Tensor& raw);   // W_v raw
Tensor fuse_global(const Tensor& visual, const Tensor& global);              // v + f_g

struct GlobalLocalResult {
  Tensor representation;  // f_c, d
  GlobalLocalAttentionReport report;
};

// Scores each reply's local feature against the fused global representation
// (dot product, softmax over replies only), then averages the selected
// columns: f_c = (1/N) sum_i alpha'_i f_i with N = n-1. The weighted columns
// come from `features` by default (the original embeddings); aggregate_local
// switches them to the local-branch outputs. Source-only conversations yield
// the zero vector and an empty report.
GlobalLocalResult global_local_attention(const Tensor& local_features, const Tensor& features,
                                         const Tensor& fused_global, bool aggregate_local = false);

Tensor conversation_representation(const Tensor& local_summary, const Tensor& fused_global);

// softmax(W_c f + b_c) with dropout on f in training mode.
Tensor classify(const FusionParams& params, const Tensor& representation, double dropout_rate,
                std::mt19937_64& rng, bool training);

Prediction prediction_from_probabilities(const Tensor& probabilities,
                                         const std::string& conversation_id);

// Bernoulli cross-entropy on the rumour-class probability p = y_hat[1],
// clamped to keep the logs finite: -(y log p + (1-y) log(1-p)).
Tensor cross_entropy(const Tensor& probabilities, int label);

// Distillation divergence between the student distribution (on tape) and the
// teacher distribution (a constant; no gradient flows into it). Default
// direction is KL(teacher || student). Temperature != 1 sharpens or softens
// both distributions via p^(1/T) renormalization before the divergence.
Tensor kd_loss(const Tensor& student_probabilities, const std::array<double, 2>& teacher,
               KdDirection direction = KdDirection::TeacherToStudent, double temperature = 1.0);

Tensor total_loss(const Tensor& cross_entropy_loss, const Tensor& distillation_loss);

}  // namespace tgnn
