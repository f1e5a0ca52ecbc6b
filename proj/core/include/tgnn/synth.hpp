#pragma once

#include <cstdint>
#include <string>

#include "tgnn/data.hpp"

namespace tgnn {

// Knobs for the synthetic conversation generator. Rumour conversations carry
// planted signals: an elevated rate of doubt-lexicon replies (text_signal)
// and, when an image is attached, a higher chance of a manipulated pixel
// pattern (image_signal). At signal 0 the class-conditional distributions
// coincide and the labels are unlearnable.
struct GeneratorConfig {
  std::size_t events = 5;
  std::size_t conversations_per_event = 100;
  std::size_t reply_min = 3;
  std::size_t reply_max = 8;
  double rumour_fraction = 0.5;
  double text_signal = 0.9;       // in [0,1]; doubt-reply rate is 0.5*(1 +/- signal)
  double image_probability = 1.0; // chance a conversation has an image at all
  double image_signal = 0.9;      // in [0,1]; manipulated-image rate analogous to text
  std::string language = "english";  // "english" or "cjk"
  std::size_t image_height = 32;
  std::size_t image_width = 32;
  std::size_t image_channels = 3;
};

// Deterministic in (config, seed); conversation and message ids embed the
// event and running indices so they are globally unique.
Dataset synth_generate(const GeneratorConfig& config, std::uint64_t seed);

}  // namespace tgnn
