#include <algorithm>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "tgnn/autodiff.hpp"
#include "tgnn/encoders.hpp"
#include "tgnn/util.hpp"

using namespace tgnn;
using test_helpers::check_abs_close;
using test_helpers::check_exact;

namespace {

HashedBagEncoder make_encoder(Tape& tape, std::size_t buckets = 64, std::size_t dim = 8,
                              std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  return HashedBagEncoder(tape, buckets, dim, 0x7461, rng);
}

}  // namespace

TEST_CASE("tokenizer lowercases, splits on unicode whitespace, strips edge punctuation") {
  CHECK(tokenize("Hello,  WORLD!") == std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("  ") == std::vector<std::string>{});
  CHECK(tokenize("a\tb\nc") == std::vector<std::string>{"a", "b", "c"});
  // ideographic space and CJK punctuation edges
  CHECK(tokenize("真的　假的？") == std::vector<std::string>{"真的", "假的"});
  CHECK(tokenize("\"quoted\" (parens)") == std::vector<std::string>{"quoted", "parens"});
  // interior punctuation stays
  CHECK(tokenize("don't stop") == std::vector<std::string>{"don't", "stop"});
  // pure punctuation tokens disappear
  CHECK(tokenize("?! ... --") == std::vector<std::string>{});
}

TEST_CASE("token buckets are pure functions of token and seed") {
  for (const std::string& tok : {"alpha", "真的", "🤔", "x"}) {
    CHECK(token_bucket(tok, 1, 4096) == token_bucket(tok, 1, 4096));
    CHECK(token_bucket(tok, 1, 4096) < 4096);
  }
  CHECK(token_bucket("alpha", 1, 4096) != token_bucket("alpha", 2, 4096));
}

TEST_CASE("empty text encodes to the zero vector") {
  Tape tape;
  auto enc = make_encoder(tape);
  check_exact(enc.encode("m", "").values(), std::vector<double>(8, 0.0));
  check_exact(enc.encode("m", " ?! ").values(), std::vector<double>(8, 0.0));
}

TEST_CASE("repeated tokens collapse to the token embedding") {
  Tape tape;
  auto enc = make_encoder(tape);
  check_exact(enc.encode("a", "fake fake").values(), enc.encode("b", "fake").values());
}

TEST_CASE("bag semantics: token order does not change the encoding") {
  Tape tape;
  auto enc = make_encoder(tape);
  // Oracle: compare bucket multisets after sorting the tokens.
  auto buckets_of = [&](const std::string& text) {
    std::vector<std::size_t> b;
    for (const auto& tok : tokenize(text)) b.push_back(token_bucket(tok, 0x7461, 64));
    std::sort(b.begin(), b.end());
    return b;
  };
  REQUIRE(buckets_of("is it real") == buckets_of("real it is"));
  check_exact(enc.encode("a", "is it real").values(), enc.encode("b", "real it is").values());

  std::mt19937_64 rng(3);
  std::vector<std::string> words = {"one", "two", "three", "four", "five"};
  for (int trial = 0; trial < 10; ++trial) {
    deterministic_shuffle(words, rng);
    std::string text;
    for (const auto& w : words) text += w + " ";
    CHECK(enc.encode("x", text).values() == enc.encode("y", "one two three four five").values());
  }
}

TEST_CASE("mean of bucket embeddings matches a per-token oracle") {
  Tape tape;
  auto enc = make_encoder(tape);
  std::string text = "alpha beta gamma";
  std::vector<double> expected(8, 0.0);
  for (const auto& tok : tokenize(text)) {
    std::size_t b = token_bucket(tok, 0x7461, 64);
    for (std::size_t i = 0; i < 8; ++i) expected[i] += enc.table().at(b, i);
  }
  for (double& v : expected) v /= 3.0;
  check_abs_close(enc.encode("m", text).values(), expected, 1e-15);
}

TEST_CASE("any unicode token maps to a valid bucket") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::string token;
    std::size_t len = 1 + uniform_index(rng, 12);
    for (std::size_t i = 0; i < len; ++i) token.push_back(static_cast<char>(rng() % 256));
    CHECK(token_bucket(token, 9, 4096) < 4096);
  }
}

TEST_CASE("encoder gradients pass grad_check on random short texts") {
  Tape tape;
  std::mt19937_64 rng(8);
  HashedBagEncoder enc(tape, 16, 4, 0x7461, rng);
  std::vector<std::string> texts = {"real or fake", "looks fine", "fake fake news", "ok"};
  auto f = [&] {
    std::vector<Tensor> parts;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      parts.push_back(enc.encode("m" + std::to_string(i), texts[i]));
    }
    Tensor m = concat_columns(parts);
    return sum(mul(m, m));
  };
  auto res = grad_check(tape, f, enc.parameters(), 1e-5, 1e-5);
  CHECK(res.passed);
}

TEST_CASE("embed_conversation lays out columns source-first in stored order") {
  Tape tape;
  auto enc = make_encoder(tape);
  ConversationGraph g;
  g.id = "c";
  g.event = "e";
  g.messages = {{"m0", "source words", std::nullopt},
                {"m1", "real or fake", "m0"},
                {"m2", "thanks", "m0"}};
  Tensor features = embed_conversation(g, enc);
  CHECK(features.rows() == 8);
  CHECK(features.cols() == 3);
  check_exact(column(features, 0).values(), enc.encode("m0", "source words").values());
  check_exact(column(features, 1).values(), enc.encode("m1", "real or fake").values());
  check_exact(column(features, 2).values(), enc.encode("m2", "thanks").values());

  // permuting stored replies permutes columns 1..n-1 identically
  std::swap(g.messages[1], g.messages[2]);
  g.messages[1].parent = "m0";
  g.messages[2].parent = "m0";
  Tensor permuted = embed_conversation(g, enc);
  CHECK(column(permuted, 1).values() == column(features, 2).values());
  CHECK(column(permuted, 2).values() == column(features, 1).values());
  CHECK(column(permuted, 0).values() == column(features, 0).values());
}

TEST_CASE("source-only conversations embed to a single column") {
  Tape tape;
  auto enc = make_encoder(tape);
  ConversationGraph g;
  g.id = "c";
  g.event = "e";
  g.messages = {{"m0", "just the source", std::nullopt}};
  Tensor features = embed_conversation(g, enc);
  CHECK(features.shape() == std::vector<std::size_t>{8, 1});
  check_exact(column(features, 0).values(), enc.encode("m0", "just the source").values());
}

TEST_CASE("patch statistics of a constant image are mean c, variance 0") {
  Image img = Image::blank(8, 8, 2);
  for (float& p : img.pixels) p = 0.75f;
  auto stats = PatchStatsEncoder::patch_statistics(img, 2);
  REQUIRE(stats.size() == 2 * 2 * 2 * 2);
  for (std::size_t i = 0; i < stats.size(); i += 2) {
    CHECK(stats[i] == doctest::Approx(0.75));
    CHECK(stats[i + 1] == doctest::Approx(0.0));
  }
}

TEST_CASE("constant image encodes through the closed-form linear map") {
  Tape tape;
  std::mt19937_64 rng(4);
  PatchStatsEncoder enc(tape, 2, 1, 3, rng);
  Image img = Image::blank(4, 4, 1);
  for (float& p : img.pixels) p = 0.5f;
  auto stats = PatchStatsEncoder::patch_statistics(img, 2);
  // Oracle: W * stats + b expanded by hand.
  Tensor w = tape.make({3, enc.stats_dim()}, enc.parameters()[0].second.values());
  std::vector<double> expected(3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < stats.size(); ++j) expected[i] += w.at(i, j) * stats[j];
  }
  check_abs_close(enc.encode("", img).values(), expected, 1e-12);
}

TEST_CASE("blank images go through the encoder like any other image") {
  Tape tape;
  std::mt19937_64 rng(4);
  PatchStatsEncoder enc(tape, 2, 3, 5, rng);
  // bias nonzero so the blank image maps away from zero
  enc.parameters()[1].second.values()[2] = 0.25;
  Image blank = Image::blank(8, 8, 3);
  auto direct = enc.encode("", blank).values();
  auto via_zero_pixels = enc.encode("", Image::blank(8, 8, 3)).values();
  check_exact(direct, via_zero_pixels);
  CHECK(direct[2] == 0.25);
}

TEST_CASE("pixel-identical images produce identical features") {
  Tape tape;
  std::mt19937_64 rng(4);
  PatchStatsEncoder enc(tape, 4, 3, 6, rng);
  std::mt19937_64 pix(9);
  Image a = Image::blank(16, 16, 3);
  for (float& p : a.pixels) p = static_cast<float>(uniform_real(pix, 0.0, 1.0));
  Image b = a;
  check_exact(enc.encode("x", a).values(), enc.encode("y", b).values());
}

TEST_CASE("non-finite pixels are a domain error") {
  Tape tape;
  std::mt19937_64 rng(4);
  PatchStatsEncoder enc(tape, 2, 1, 3, rng);
  Image img = Image::blank(4, 4, 1);
  img.pixels[5] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(enc.encode("", img), DomainError);
}

TEST_CASE("precomputed embeddings load by id and reject unknown ids") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "tgnn_test_embed";
  fs::create_directories(dir);
  std::string path = (dir / "vectors.txt").string();
  std::unordered_map<std::string, std::vector<double>> vectors = {
      {"m0", {1.0, 2.0, 3.0}},
      {"m1", {-0.5, 0.25, 1e-9}},
  };
  save_embedding_file(vectors, path);
  auto loaded = load_embedding_file(path);
  CHECK(loaded == vectors);

  Tape tape;
  PrecomputedMessageEncoder enc(tape, path);
  CHECK(enc.dim() == 3);
  check_exact(enc.encode("m1", "ignored text").values(), {-0.5, 0.25, 1e-9});
  CHECK_THROWS_AS(enc.encode("missing", ""), DataError);
  CHECK(enc.parameters().empty());
  fs::remove_all(dir);
}
