#include "tgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "tgnn/util.hpp"

namespace tgnn {

namespace {

const std::vector<std::string>& doubt_bank(const std::string& language) {
  static const std::vector<std::string> english = {
      "real or fake?",
      "is this actually real",
      "looks fake to me",
      "i doubt this",
      "source? this is unconfirmed",
      "this is false, see the fact check",
      "not true, stop spreading this",
      "seems like a hoax",
      "any proof for this claim?",
      "unverified, be careful",
      "this photo looks edited",
      "citation needed, who reported this",
  };
  static const std::vector<std::string> cjk = {
      "真假 存疑",
      "这 是 假 的 吧",
      "来源 在哪",
      "不 可信 求 证实",
      "看起来 像 谣言",
      "图 被 改 过",
      "没有 证据 别 乱 传",
      "官方 没有 证实",
      "求 辟谣",
      "假 消息 吧",
      "哪里 来 的 说法",
      "存疑 等 权威 消息",
  };
  return language == "cjk" ? cjk : english;
}

const std::vector<std::string>& neutral_bank(const std::string& language) {
  static const std::vector<std::string> english = {
      "thanks for sharing",
      "interesting, following this",
      "wow, big if true",
      "good point",
      "saw this earlier today",
      "more details in the thread",
      "stay safe everyone",
      "what a day",
      "great coverage",
      "keeping an eye on updates",
      "appreciate the update",
      "sending this to friends",
  };
  static const std::vector<std::string> cjk = {
      "谢谢 分享",
      "关注 后续",
      "今天 新闻 好多",
      "已 转发",
      "说得 有 道理",
      "等 更多 消息",
      "大家 注意 安全",
      "先 马克 一下",
      "持续 关注",
      "收到 了",
      "辛苦 了",
      "继续 更新 吧",
  };
  return language == "cjk" ? cjk : english;
}

// Deterministic pseudo-words so each event has its own topic vocabulary.
std::vector<std::string> topic_words(std::size_t event_index, const std::string& language,
                                     std::mt19937_64& rng) {
  std::vector<std::string> words;
  if (language == "cjk") {
    static const std::vector<std::string> glyphs = {"山", "河", "桥", "城", "灯", "路",
                                                    "海", "云", "星", "林", "雨", "风"};
    for (std::size_t w = 0; w < 10; ++w) {
      std::string word = glyphs[uniform_index(rng, glyphs.size())] +
                         glyphs[uniform_index(rng, glyphs.size())] +
                         std::to_string(event_index);
      words.push_back(std::move(word));
    }
    return words;
  }
  static const std::vector<std::string> syllables = {"na", "lo", "ri", "ta", "ve", "mo",
                                                     "ke", "su", "di", "pa", "zu", "fe"};
  for (std::size_t w = 0; w < 10; ++w) {
    std::string word;
    std::size_t parts = 2 + uniform_index(rng, 2);
    for (std::size_t p = 0; p < parts; ++p) word += syllables[uniform_index(rng, syllables.size())];
    word += std::to_string(event_index);
    words.push_back(std::move(word));
  }
  return words;
}

// Smooth low-frequency base pattern; manipulated images get a high-frequency
// checkerboard patch spliced in, which patch-variance features pick up.
Image make_image(const GeneratorConfig& cfg, bool manipulated, std::mt19937_64& rng) {
  Image img = Image::blank(cfg.image_height, cfg.image_width, cfg.image_channels);
  double fr = uniform_real(rng, 0.5, 1.5);
  double fc = uniform_real(rng, 0.5, 1.5);
  double phase = uniform_real(rng, 0.0, 6.28318530717958648);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        double v = 0.5 + 0.35 * std::sin(phase + 6.28318530717958648 *
                                                     (fr * static_cast<double>(r) / static_cast<double>(img.height) +
                                                      fc * static_cast<double>(c) / static_cast<double>(img.width)) +
                                         0.7 * static_cast<double>(ch));
        img.pixels[(r * img.width + c) * img.channels + ch] = static_cast<float>(v);
      }
    }
  }
  // Patch position is drawn either way so the draw sequence is label-free.
  std::size_t patch = std::min<std::size_t>(8, std::min(img.height, img.width));
  std::size_t r0 = uniform_index(rng, img.height - patch + 1);
  std::size_t c0 = uniform_index(rng, img.width - patch + 1);
  if (manipulated) {
    for (std::size_t r = r0; r < r0 + patch; ++r) {
      for (std::size_t c = c0; c < c0 + patch; ++c) {
        double v = ((r + c) % 2 == 0) ? 1.0 : 0.0;
        for (std::size_t ch = 0; ch < img.channels; ++ch) {
          img.pixels[(r * img.width + c) * img.channels + ch] = static_cast<float>(v);
        }
      }
    }
  }
  return img;
}

std::string pick(const std::vector<std::string>& bank, std::mt19937_64& rng) {
  return bank[uniform_index(rng, bank.size())];
}

}  // namespace

Dataset synth_generate(const GeneratorConfig& cfg, std::uint64_t seed) {
  if (cfg.events == 0) throw ConfigError("generator: events must be positive");
  if (cfg.conversations_per_event == 0) {
    throw ConfigError("generator: conversations_per_event must be positive");
  }
  if (cfg.reply_min > cfg.reply_max) {
    throw ConfigError("generator: reply_min exceeds reply_max");
  }
  if (cfg.rumour_fraction < 0.0 || cfg.rumour_fraction > 1.0) {
    throw ConfigError("generator: rumour_fraction must be in [0,1]");
  }
  if (cfg.text_signal < 0.0 || cfg.text_signal > 1.0) {
    throw ConfigError("generator: text_signal must be in [0,1]");
  }
  if (cfg.image_probability < 0.0 || cfg.image_probability > 1.0) {
    throw ConfigError("generator: image_probability must be in [0,1]");
  }
  if (cfg.image_signal < 0.0 || cfg.image_signal > 1.0) {
    throw ConfigError("generator: image_signal must be in [0,1]");
  }
  if (cfg.language != "english" && cfg.language != "cjk") {
    throw ConfigError("generator: language must be english or cjk");
  }

  std::mt19937_64 rng(mix_seed(seed, 0x67656e));
  Dataset ds;
  const auto& doubts = doubt_bank(cfg.language);
  const auto& neutrals = neutral_bank(cfg.language);

  for (std::size_t e = 0; e < cfg.events; ++e) {
    std::string event = "event-" + std::to_string(e);
    std::vector<std::string> topics = topic_words(e, cfg.language, rng);
    for (std::size_t k = 0; k < cfg.conversations_per_event; ++k) {
      ConversationGraph g;
      g.id = event + "-c" + std::to_string(k);
      g.event = event;
      g.language = cfg.language;
      g.label = uniform_real(rng, 0.0, 1.0) < cfg.rumour_fraction ? Label::Rumour
                                                                  : Label::NonRumour;
      bool rumour = g.label == Label::Rumour;

      Message src;
      src.id = g.id + "-m0";
      src.text = pick(topics, rng) + " " + pick(topics, rng) + " " + pick(topics, rng);
      g.messages.push_back(std::move(src));

      std::size_t replies = cfg.reply_min + uniform_index(rng, cfg.reply_max - cfg.reply_min + 1);
      double doubt_rate = 0.5 * (1.0 + (rumour ? cfg.text_signal : -cfg.text_signal));
      for (std::size_t r = 0; r < replies; ++r) {
        Message m;
        m.id = g.id + "-m" + std::to_string(r + 1);
        m.parent = g.messages[uniform_index(rng, g.messages.size())].id;
        bool doubtful = uniform_real(rng, 0.0, 1.0) < doubt_rate;
        m.text = doubtful ? pick(doubts, rng) : pick(neutrals, rng);
        m.text += " " + pick(topics, rng);
        g.messages.push_back(std::move(m));
      }

      if (uniform_real(rng, 0.0, 1.0) < cfg.image_probability) {
        double manip_rate = 0.5 * (1.0 + (rumour ? cfg.image_signal : -cfg.image_signal));
        bool manipulated = uniform_real(rng, 0.0, 1.0) < manip_rate;
        Image img = make_image(cfg, manipulated, rng);
        std::string ref = "images/" + g.id + ".img";
        ds.images.emplace(ref, std::move(img));
        g.image_ref = ref;
      }
      ds.conversations.push_back(std::move(g));
    }
  }
  ds.rebuild_manifest();
  return ds;
}

}  // namespace tgnn
