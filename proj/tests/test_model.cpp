#include <fstream>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "swinlite/checkpoint.hpp"
#include "swinlite/model.hpp"

using namespace swinlite;
using oracle::random_tensor;

namespace {

SwinConfig tiny_config() {
  SwinConfig c;
  c.image_size = 32;
  c.patch_size = 4;
  c.embed_dim = 8;
  c.depths = {2, 2, 0, 2};
  c.heads = {2, 2, 4, 4};
  c.window_size = 4;
  c.mlp_ratio = 2;
  c.num_classes = 3;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SwinConfig c = swin_micro_config();
  CHECK_NOTHROW(c.validate());
  c.depths[1] = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = swin_micro_config();
  c.heads[0] = 64;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = swin_micro_config();
  c.image_size = 48;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = swin_micro_config();
  c.window_size = 3;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(named_config("swin-huge"), std::invalid_argument);
  CHECK(named_config("swin-micro") == swin_micro_config());
}

TEST_CASE("stage geometry and window clamping") {
  const SwinConfig p = swin_paper_config();
  const std::size_t grids[] = {56, 28, 14, 7}, chans[] = {128, 256, 512, 1024};
  for (std::size_t s = 0; s < 4; ++s) {
    CHECK(p.stage_grid(s) == grids[s]);
    CHECK(p.stage_channels(s) == chans[s]);
    CHECK(p.stage_window(s) == 7);
  }
  CHECK(p.stage_shift(0) == 3);
  CHECK(p.stage_shift(3) == 0);
  const SwinConfig m = swin_micro_config();
  CHECK(m.stage_window(3) == 2);
  CHECK(m.stage_shift(3) == 0);
  CHECK(m.stage_shift(2) == 0);
  CHECK(m.stage_shift(1) == 2);
}

TEST_CASE("swin-paper constructs and its stage shapes match the token counts") {
  SwinModel model(swin_paper_config());
  CHECK(model.parameter_count() == param_count(swin_paper_config()));
  Tape tape;
  const auto bound = model.bind(tape, false);
  Tensor img({1, 224, 224, 3}, 0.5);
  FeatureMap fm = patch_partition(tape.constant(img), 4);
  fm = linear_embedding(fm, bound[0], bound[1]);
  CHECK(fm.tokens.shape() == Shape{1, 56 * 56, 128});
  // Only the patch merging of each stage, which fixes the output geometry.
  const std::size_t grids[] = {28, 14, 7};
  for (std::size_t s = 1; s < 4; ++s) {
    fm = patch_merging(fm, bound[*model.stages()[s].merge_weight]);
    CHECK(fm.h == grids[s - 1]);
    CHECK(fm.channels == 128u << s);
  }
}

TEST_CASE("param_count equals enumeration") {
  std::vector<SwinConfig> configs{swin_micro_config(), tiny_config()};
  SwinConfig z = tiny_config();
  z.depths = {0, 0, 0, 0};
  configs.push_back(z);
  SwinConfig uneven = tiny_config();
  uneven.heads = {3, 3, 5, 6};
  configs.push_back(uneven);
  for (const SwinConfig& c : configs) {
    SwinModel m(c);
    std::set<std::string> names;
    std::size_t total = 0;
    for (const Parameter& p : m.parameters()) {
      total += p.value.size();
      names.insert(p.name);
    }
    CHECK(names.size() == m.parameters().size());
    CHECK(total == param_count(c));
  }
  // Zero depth everywhere: embedding, merges and head only.
  const std::size_t c0 = 8;
  std::size_t want = 48 * c0 + c0;
  for (std::size_t s = 1; s < 4; ++s) want += 4 * (c0 << (s - 1)) * (c0 << s);
  const std::size_t cf = c0 << 3;
  want += 2 * cf + cf * 3 + 3;
  CHECK(param_count(z) == want);
  SwinConfig more = swin_micro_config();
  more.num_classes = 20;
  CHECK(param_count(more) - param_count(swin_micro_config()) == 256 * 10 + 10);
}

TEST_CASE("initialization") {
  SwinModel a(swin_micro_config()), b(swin_micro_config());
  SwinConfig other = swin_micro_config();
  other.seed = 1;
  SwinModel c(other);
  bool differs = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    const Parameter& p = a.parameters()[i];
    CHECK(p.value == b.parameters()[i].value);
    differs |= !(p.value == c.parameters()[i].value);
    if (is_random_init(p.name)) {
      for (double v : p.value.data()) REQUIRE(std::abs(v) <= 0.04);
    } else if (p.name.ends_with(".gamma")) {
      CHECK(p.value == Tensor::ones(p.value.shape()));
    } else {
      CHECK(p.value == Tensor::zeros(p.value.shape()));
    }
  }
  CHECK(differs);
  CHECK(a.find("stage0.bias_table") != nullptr);
  CHECK(a.find("stage0.merge.weight") == nullptr);
  CHECK(a.find("stage2.block1.attn.wq")->value.shape() == Shape{128, 128});
  CHECK(a.find("stage1.merge.weight")->value.shape() == Shape{128, 64});
  CHECK(is_random_init("stage0.block0.mlp.fc1.weight"));
  CHECK(!is_random_init("stage0.block0.mlp.fc1.bias"));
}

TEST_CASE("block pair preserves shape and runs in the documented order") {
  SwinModel model(tiny_config());
  Tape tape;
  const auto bound = model.bind(tape, false);
  Rng rng{1};
  // Stage 0 of the tiny config works on an 8x8 map with 8 channels.
  const FeatureMap fm(tape.constant(random_tensor({2, 64, 8}, rng)), 8, 8);
  const RelativePositionBias bias{bound[*model.stages()[0].bias_table], build_relative_index(4)};
  std::vector<BlockActivation> acts;
  const FeatureMap out = swin_block_pair(fm, model.block_weights(bound, 0, 0),
                                         model.block_weights(bound, 0, 1), bias, 4, 2, &acts);
  CHECK(out.tokens.shape() == fm.tokens.shape());
  REQUIRE(acts.size() == 2);
  CHECK(acts[0].s_prev == fm.tokens.value());
  CHECK(acts[1].s_prev == acts[0].s);
  CHECK(acts[1].s == out.tokens.value());
  CHECK(acts[0].s_hat.shape() == acts[0].s.shape());
}

TEST_CASE("zeroed update weights make the trunk an identity") {
  SwinModel model(swin_micro_config());
  for (Parameter& p : model.parameters())
    if (p.name.ends_with(".attn.wo") || p.name.ends_with(".mlp.fc2.weight")) p.value.fill(0.0);
  Rng rng{2};
  Tensor img = random_tensor({2, 64, 64, 3}, rng, 0, 1);
  Tape tape;
  const auto bound = model.bind(tape, false);
  std::vector<BlockActivation> acts;
  const FeatureMap trunk = model.forward_trunk(bound, tape.constant(img), kNumStages, &acts);
  CHECK(acts.size() == 8);
  for (const BlockActivation& a : acts) {
    CHECK(a.s_hat == a.s_prev);
    CHECK(a.s == a.s_prev);
  }
  // The same map with every block skipped.
  FeatureMap ref = linear_embedding(patch_partition(tape.constant(img), 4), bound[0], bound[1]);
  for (std::size_t s = 1; s < 4; ++s) ref = patch_merging(ref, bound[*model.stages()[s].merge_weight]);
  CHECK(trunk.tokens.value() == ref.tokens.value());
}

TEST_CASE("shifted second block carries information across windows") {
  SwinConfig c = tiny_config();
  SwinModel model(c);
  oracle::jitter(model, 3);
  Tape tape;
  const auto bound = model.bind(tape, false);
  const RelativePositionBias bias{bound[*model.stages()[0].bias_table], build_relative_index(4)};
  // A 4x8 map: windows {cols 0-3} and {cols 4-7}.
  Rng rng{3};
  Tensor x = random_tensor({1, 32, 8}, rng);
  Tensor x2 = x;
  // Token (0, 3); a uniform offset would vanish under layer norm.
  for (std::size_t ch = 0; ch < 8; ++ch) x2[(0 * 8 + 3) * 8 + ch] += 0.25 * static_cast<double>(ch);
  auto run = [&](const Tensor& in, std::size_t shift) {
    return swin_block_pair(FeatureMap(tape.constant(in), 4, 8), model.block_weights(bound, 0, 0),
                           model.block_weights(bound, 0, 1), bias, 4, shift)
        .tokens.value();
  };
  auto right_window_change = [&](const Tensor& a, const Tensor& b) {
    double d = 0;
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t q = 4; q < 8; ++q)
        for (std::size_t ch = 0; ch < 8; ++ch)
          d = std::max(d, std::abs(a[(r * 8 + q) * 8 + ch] - b[(r * 8 + q) * 8 + ch]));
    return d;
  };
  CHECK(right_window_change(run(x, 0), run(x2, 0)) == 0.0);
  CHECK(right_window_change(run(x, 2), run(x2, 2)) > 1e-6);
}

TEST_CASE("stage structure") {
  SwinConfig c = tiny_config();
  c.depths = {2, 2, 8, 0};
  SwinModel model(c);
  CHECK(model.stages()[2].blocks.size() == 8);
  CHECK(!model.stages()[3].bias_table.has_value());
  Tape tape;
  const auto bound = model.bind(tape, false);
  Rng rng{4};
  Tensor img = random_tensor({1, 32, 32, 3}, rng, 0, 1);
  std::vector<BlockActivation> acts;
  FeatureMap fm = linear_embedding(patch_partition(tape.constant(img), 4), bound[0], bound[1]);
  fm = model.stage_forward(bound, fm, 0);
  fm = model.stage_forward(bound, fm, 1);
  fm = model.stage_forward(bound, fm, 2, &acts);
  CHECK(acts.size() == 8);  // four pairs
  CHECK(fm.h == 2);
  CHECK(fm.channels == 32);
  const FeatureMap last = model.stage_forward(bound, fm, 3, &acts);
  CHECK(acts.size() == 8);
  CHECK(last.h == 1);
  CHECK(last.tokens.value() == patch_merging(fm, bound[*model.stages()[3].merge_weight]).tokens.value());
}

TEST_CASE("model forward") {
  SwinModel model(swin_micro_config());
  Rng rng{5};
  Tensor img = random_tensor({3, 64, 64, 3}, rng, 0, 1);
  const Tensor logits = model.predict(img);
  CHECK(logits.shape() == Shape{3, 10});
  Tape tape;
  const Tensor p = softmax(tape.constant(logits), 1).value();
  for (std::size_t b = 0; b < 3; ++b) {
    double s = 0;
    for (std::size_t k = 0; k < 10; ++k) s += p[b * 10 + k];
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
  SwinModel again(swin_micro_config());
  CHECK(again.predict(img) == logits);
  CHECK_THROWS_AS(model.predict(Tensor({1, 32, 32, 3})), DimensionError);
}

TEST_CASE("gradient checks for a block and the full model") {
  SwinModel model(tiny_config());
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    oracle::jitter(model, seed);
    Rng rng{400, seed};
    const std::size_t table = *model.stages()[0].bias_table;
    Tensor x = random_tensor({1, 64, 8}, rng);
    const auto block = [&](Tape& t, Var v) {
      const auto bound = model.bind(t, false);
      const RelativePositionBias bias{bound[table], build_relative_index(4)};
      return oracle::probe(swin_block(FeatureMap(v, 8, 8), model.block_weights(bound, 0, 1),
                                      bias, 4, 2).tokens, seed);
    };
    CHECK(grad_check(block, x) <= 1e-5);

    Tensor img = random_tensor({2, 32, 32, 3}, rng, 0, 1);
    GradCheckOptions o;
    o.max_coords = 3;
    o.seed = seed;
    double worst = 0;
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      const auto r = grad_check_detailed(oracle::model_loss_in(model, i, img, {0, 2}),
                                         model.parameters()[i].value, o);
      worst = std::max(worst, r.max_rel_error);
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("checkpoint round trips") {
  const auto dir = oracle::scratch("ckpt");
  SwinModel model(tiny_config());
  oracle::jitter(model, 9);
  CheckpointExtras extras;
  extras.config = {{"note", "x"}};
  extras.tensors.push_back({"extra", DType::kFloat64, Tensor({2}, {1.5, -2.0})});
  save_checkpoint(model, dir / "a.ckpt", extras);
  LoadedCheckpoint loaded = load_checkpoint(dir / "a.ckpt");
  CHECK(loaded.model.config() == model.config());
  for (std::size_t i = 0; i < model.parameters().size(); ++i)
    CHECK(loaded.model.parameters()[i].value == model.parameters()[i].value);
  CHECK(loaded.extras.config == extras.config);
  REQUIRE(loaded.extras.tensors.size() == 1);
  CHECK(loaded.extras.tensors[0].value == extras.tensors[0].value);
  save_checkpoint(loaded.model, dir / "b.ckpt", loaded.extras);
  CHECK(read_bytes(dir / "a.ckpt") == read_bytes(dir / "b.ckpt"));
  const auto bytes = read_bytes(dir / "a.ckpt");
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  auto kind_of = [](std::vector<std::uint8_t> b) {
    try {
      decode_checkpoint(b);
    } catch (const CheckpointError& e) {
      return static_cast<int>(e.kind());
    }
    return -1;
  };
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of(bad) == static_cast<int>(CheckpointErrorKind::kBadMagic));
  bad = bytes;
  bad[4] = 2;
  CHECK(kind_of(bad) == static_cast<int>(CheckpointErrorKind::kBadVersion));
  bad = bytes;
  bad.resize(bytes.size() - 3);
  CHECK(kind_of(bad) == static_cast<int>(CheckpointErrorKind::kTruncated));
  bad = bytes;
  bad.push_back(0);
  CHECK(kind_of(bad) >= 0);

  // A config that disagrees with the stored tensor shapes.
  CheckpointFile f = decode_checkpoint(bytes);
  for (auto& [k, v] : f.config)
    if (k == "embed_dim") v = "16";
  write_bytes(dir / "c.ckpt", encode_checkpoint(f));
  try {
    load_checkpoint(dir / "c.ckpt");
    FAIL("expected a shape mismatch");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::kShapeMismatch);
  }
  for (auto& [k, v] : f.config)
    if (k == "embed_dim") v = "sixteen";
  write_bytes(dir / "d.ckpt", encode_checkpoint(f));
  try {
    load_checkpoint(dir / "d.ckpt");
    FAIL("expected a config error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::kBadConfig);
  }
  try {
    load_checkpoint(dir / "missing.ckpt");
    FAIL("expected an io error");
  } catch (const CheckpointError& e) {
    CHECK(e.kind() == CheckpointErrorKind::kIo);
  }
}

TEST_CASE("float32 records decode to the nearest double") {
  CheckpointFile f;
  f.config = config_entries(tiny_config());
  f.tensors.push_back({"t", DType::kFloat32, Tensor({3}, {0.1, 1.0, -2.5})});
  const CheckpointFile g = decode_checkpoint(encode_checkpoint(f));
  CHECK(g.tensors[0].dtype == DType::kFloat32);
  CHECK(g.tensors[0].value[0] == static_cast<double>(0.1f));
  CHECK(g.tensors[0].value[2] == -2.5);
}
