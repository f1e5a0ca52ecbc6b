#include "tgnn/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "tgnn/util.hpp"

namespace tgnn {

FusionParams make_fusion(Tape& tape, std::size_t embed_dim, std::size_t visual_dim,
                         bool multimodal) {
  if (embed_dim == 0) throw ConfigError("fusion: embedding dim must be positive");
  FusionParams params;
  if (multimodal) {
    if (visual_dim == 0) throw ConfigError("fusion: visual dim must be positive");
    params.visual_projection = tape.zeros({embed_dim, visual_dim}, true);
  }
  params.classifier_weight = tape.zeros({2, embed_dim}, true);
  params.classifier_bias = tape.zeros({2}, true);
  return params;
}

Tensor project_visual(const Tensor& visual_projection, const Tensor& raw) {
  if (visual_projection.rank() != 2 || raw.rank() != 1 ||
      visual_projection.cols() != raw.size()) {
    throw DimensionError("project_visual: expected [d,d_v] x [d_v], got " +
                         shape_string(visual_projection.shape()) + " and " +
                         shape_string(raw.shape()));
  }
  return matvec(visual_projection, raw);
}

Tensor fuse_global(const Tensor& visual, const Tensor& global) {
  if (visual.shape() != global.shape()) {
    throw DimensionError("fuse_global: shapes differ, " + shape_string(visual.shape()) + " vs " +
                         shape_string(global.shape()));
  }
  return add(visual, global);
}

GlobalLocalResult global_local_attention(const Tensor& local_features, const Tensor& features,
                                         const Tensor& fused_global, bool aggregate_local) {
  if (local_features.rank() != 2 || features.rank() != 2) {
    throw DimensionError("global_local_attention expects d x n feature matrices");
  }
  if (local_features.shape() != features.shape()) {
    throw DimensionError("global_local_attention: local and input features differ in shape");
  }
  if (fused_global.rank() != 1 || fused_global.size() != features.rows()) {
    throw DimensionError("global_local_attention: fused global has wrong dimension");
  }
  std::size_t n = features.cols();
  Tape* tape = features.tape();
  GlobalLocalResult result;
  if (n == 1) {
    result.representation = tape->zeros({features.rows()});
    return result;
  }
  // Replies only: nodes 1..n-1.
  std::vector<Tensor> scores;
  std::vector<std::size_t> indices;
  scores.reserve(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    scores.push_back(dot(column(local_features, i), fused_global));
    indices.push_back(i);
  }
  Tensor alphas = softmax(stack(scores));
  const Tensor& source_matrix = aggregate_local ? local_features : features;
  Tensor weighted = weighted_columns(source_matrix, indices, alphas);
  result.representation = scale(weighted, 1.0 / static_cast<double>(n - 1));
  result.report.scores = alphas.values();
  result.report.indices = std::move(indices);
  return result;
}

Tensor conversation_representation(const Tensor& local_summary, const Tensor& fused_global) {
  if (local_summary.shape() != fused_global.shape()) {
    throw DimensionError("conversation_representation: shapes differ");
  }
  return add(local_summary, fused_global);
}

Tensor classify(const FusionParams& params, const Tensor& representation, double dropout_rate,
                std::mt19937_64& rng, bool training) {
  if (representation.rank() != 1 || representation.size() != params.classifier_weight.cols()) {
    throw DimensionError("classify: representation has wrong dimension " +
                         shape_string(representation.shape()));
  }
  Tensor f = dropout(representation, dropout_rate, rng, training);
  return softmax(add(matvec(params.classifier_weight, f), params.classifier_bias));
}

Prediction prediction_from_probabilities(const Tensor& probabilities,
                                         const std::string& conversation_id) {
  if (probabilities.size() != 2) {
    throw DimensionError("prediction expects a 2-class distribution");
  }
  Prediction p;
  p.probabilities = {probabilities.at(0), probabilities.at(1)};
  p.predicted_class = probabilities.at(1) > probabilities.at(0) ? 1 : 0;
  p.conversation_id = conversation_id;
  return p;
}

Tensor cross_entropy(const Tensor& probabilities, int label) {
  if (label != 0 && label != 1) {
    throw DomainError("cross_entropy: label must be 0 or 1, got " + std::to_string(label));
  }
  if (probabilities.size() != 2) {
    throw DimensionError("cross_entropy expects a 2-class distribution");
  }
  Tensor p = element(probabilities, 1);  // rumour-class probability
  if (label == 1) {
    return scale(log_clamped(p), -1.0);
  }
  Tensor one_minus = sub(p.tape()->scalar(1.0), p);
  return scale(log_clamped(one_minus), -1.0);
}

namespace {

std::array<double, 2> clamp_simplex(const std::array<double, 2>& p) {
  return {std::clamp(p[0], kLogEpsilon, 1.0 - kLogEpsilon),
          std::clamp(p[1], kLogEpsilon, 1.0 - kLogEpsilon)};
}

void check_simplex(const std::array<double, 2>& p, const char* who) {
  if (p[0] < 0.0 || p[1] < 0.0 || std::fabs(p[0] + p[1] - 1.0) > 1e-6) {
    throw DomainError(std::string(who) + " distribution is not on the simplex");
  }
}

// p^(1/T) renormalized; identity at T == 1.
std::array<double, 2> apply_temperature(const std::array<double, 2>& p, double t) {
  if (t == 1.0) return p;
  std::array<double, 2> q{std::pow(p[0], 1.0 / t), std::pow(p[1], 1.0 / t)};
  double z = q[0] + q[1];
  return {q[0] / z, q[1] / z};
}

}  // namespace

Tensor kd_loss(const Tensor& student_probabilities, const std::array<double, 2>& teacher,
               KdDirection direction, double temperature) {
  if (student_probabilities.size() != 2) {
    throw DimensionError("kd_loss expects a 2-class student distribution");
  }
  if (temperature <= 0.0) throw DomainError("kd_loss: temperature must be positive");
  std::array<double, 2> s_now{student_probabilities.at(0), student_probabilities.at(1)};
  check_simplex(s_now, "student");
  check_simplex(teacher, "teacher");
  std::array<double, 2> t = clamp_simplex(apply_temperature(teacher, temperature));

  Tape* tape = student_probabilities.tape();
  Tensor s = student_probabilities;
  if (temperature != 1.0) {
    // Renormalized power of the student distribution, kept on the tape.
    Tensor powered = softmax(scale(log_clamped(s), 1.0 / temperature));
    s = powered;
  }
  Tensor log_s = log_clamped(s);
  Tensor t_const = tape->make({2}, {t[0], t[1]});

  if (direction == KdDirection::TeacherToStudent) {
    // KL(t || s) = sum t_k (log t_k - log s_k); the first term is constant.
    double t_entropy_term = t[0] * std::log(t[0]) + t[1] * std::log(t[1]);
    Tensor cross = sum(mul(t_const, log_s));
    return add(scale(cross, -1.0), t_entropy_term);
  }
  // KL(s || t) = sum s_k (log s_k - log t_k)
  Tensor log_t = tape->make({2}, {std::log(t[0]), std::log(t[1])});
  return sum(mul(s, sub(log_s, log_t)));
}

Tensor total_loss(const Tensor& cross_entropy_loss, const Tensor& distillation_loss) {
  if (!cross_entropy_loss.is_scalar() || !distillation_loss.is_scalar()) {
    throw DomainError("total_loss expects scalar losses");
  }
  return add(cross_entropy_loss, distillation_loss);
}

}  // namespace tgnn
