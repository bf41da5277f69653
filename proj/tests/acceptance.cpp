// Acceptance harness: one PASS/FAIL line per criterion. Optional arguments
// restrict the run to criteria whose key contains any of them.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "swinlite/checkpoint.hpp"
#include "swinlite/cli.hpp"
#include "swinlite/training.hpp"

using namespace swinlite;
using oracle::random_tensor;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Criterion = std::function<void(Outcome&)>;

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  if (out) *out = o.str();
  if (code != kExitOk) std::cerr << e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(cur);
  if (!s.empty() && s.back() == sep) parts.push_back("");
  return parts;
}

// Attention oracle equivalence.
void oracle_equivalence(Outcome& o) {
  Rng rng{1001};
  double worst_region = 0;
  std::size_t combos = 0;
  for (std::size_t h : {4u, 6u, 8u})
    for (std::size_t w : {4u, 6u, 8u})
      for (std::size_t m : {2u, 4u}) {
        if (h % m || w % m) continue;
        ++combos;
        Tape tape;
        const oracle::Mha mha = oracle::random_mha(6, 2, m, rng);
        const auto b = oracle::bind(tape, mha);
        const Tensor x = random_tensor({2, h * w, 6}, rng);
        const Tensor got =
            sw_msa(FeatureMap(tape.constant(x), h, w), m, m / 2, b.weights, &*b.bias).tokens.value();
        for (std::size_t n = 0; n < 2; ++n) {
          const std::size_t len = h * w * 6;
          std::vector<double> xn(x.vec().begin() + static_cast<long>(n * len),
                                 x.vec().begin() + static_cast<long>((n + 1) * len));
          const auto want = oracle::region_attention(mha, xn, h, w, m / 2);
          for (std::size_t i = 0; i < len; ++i)
            worst_region = std::max(worst_region, std::abs(got[n * len + i] - want[i]));
        }
      }
  double worst_global = 0;
  for (std::size_t side : {2u, 4u, 8u}) {
    Tape tape;
    const oracle::Mha mha = oracle::random_mha(6, 3, side, rng);
    const auto b = oracle::bind(tape, mha);
    const Tensor x = random_tensor({1, side * side, 6}, rng);
    const Tensor got =
        w_msa(FeatureMap(tape.constant(x), side, side), side, b.weights, &*b.bias).tokens.value();
    std::vector<std::pair<long, long>> pos;
    for (std::size_t r = 0; r < side; ++r)
      for (std::size_t c = 0; c < side; ++c) pos.push_back({static_cast<long>(r), static_cast<long>(c)});
    const auto want = oracle::attend(mha, x.vec(), pos);
    for (std::size_t i = 0; i < want.size(); ++i)
      worst_global = std::max(worst_global, std::abs(got[i] - want[i]));
  }
  o.require(combos == 13, "13 feasible (h, w, M) combinations");
  o.require(worst_region <= 1e-6, "sw_msa vs region oracle <= 1e-6");
  o.require(worst_global <= 1e-10, "w_msa at M = grid vs global <= 1e-10");
  o.detail << combos << " combos, sw_msa max diff " << worst_region
           << ", global max diff " << worst_global;
}

void mask_structure(Outcome& o) {
  const ShiftMask m = build_shift_mask(8, 8, 4, 2);
  const std::size_t regions = std::set<int>(m.region.begin(), m.region.end()).size();
  o.require(regions == 9, "9 region ids");
  o.require(m.num_windows() == 4, "4 windows");
  std::size_t mismatches = 0, pairs = 0;
  for (std::size_t win = 0; win < 4; ++win) {
    const std::size_t wy = win / 2, wx = win % 2;
    for (std::size_t i = 0; i < 16; ++i)
      for (std::size_t j = 0; j < 16; ++j, ++pairs) {
        const int ri = m.region[(wy * 4 + i / 4) * 8 + wx * 4 + i % 4];
        const int rj = m.region[(wy * 4 + j / 4) * 8 + wx * 4 + j % 4];
        mismatches += m.bias[(win * 16 + i) * 16 + j] != (ri == rj ? 0.0 : kMaskNeg);
      }
  }
  o.require(mismatches == 0, "mask entries agree with region ids");
  o.detail << regions << " regions, " << m.num_windows() << " windows, " << pairs
           << " pairs checked, " << mismatches << " mismatches";
}

void complexity(Outcome& o) {
  const FlopsReport r = flops(56, 56, 128, 7);
  o.require(r.omega_wmsa == 244858880ull, "omega_wmsa = 244858880");
  o.require(r.omega_msa == 2723151872ull, "omega_msa = 2723151872");
  const SwinConfig c = swin_micro_config();
  Rng rng{1002};
  std::size_t matched = 0;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::size_t g = c.stage_grid(s), ch = c.stage_channels(s), m = c.stage_window(s);
    const std::size_t heads = c.heads[s];
    Tape tape;
    MultiHeadWeights w;
    w.wq = tape.constant(random_tensor({ch, ch}, rng));
    w.wk = tape.constant(random_tensor({ch, ch}, rng));
    w.wv = tape.constant(random_tensor({ch, ch}, rng));
    w.wo = tape.constant(random_tensor({ch, ch}, rng));
    w.bo = tape.constant(Tensor({ch}));
    w.heads = heads;
    const RelativePositionBias bias{tape.constant(Tensor({(2 * m - 1) * (2 * m - 1), heads})),
                                    build_relative_index(m)};
    const FeatureMap fm(tape.constant(random_tensor({1, g * g, ch}, rng)), g, g);
    std::uint64_t counted = 0;
    {
      MacCounter counter;
      w_msa(fm, m, w, &bias);
      counted = counter.count();
    }
    const std::uint64_t want = flops(g, g, ch, m).omega_wmsa;
    matched += counted == want;
    o.detail << "stage " << s + 1 << " " << counted << "/" << want << "; ";
  }
  o.require(matched == kNumStages, "MAC counter equals omega_wmsa at every swin-micro stage");
  o.detail << "flops(56,56,128,7) = " << r.omega_wmsa << " / " << r.omega_msa;
}

// Every differentiable op, 20 seeds, all coordinates.
void gradient_ops(Outcome& o) {
  double worst = 0;
  std::string worst_op;
  std::size_t checks = 0;
  auto check = [&](const std::string& name, const TapedFunction& f, const Tensor& x) {
    const double e = grad_check(f, x);
    ++checks;
    if (e > worst) {
      worst = e;
      worst_op = name;
    }
  };
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng{1003, seed};
    const Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 5}, rng);
    const Tensor bias = random_tensor({5}, rng), row = random_tensor({4}, rng);
    const Tensor t3 = random_tensor({2, 3, 4}, rng), bt = random_tensor({2, 4, 3}, rng);
    check("matmul.lhs", [&](Tape& t, Var v) { return oracle::probe(matmul(v, t.constant(b)), seed); }, a);
    check("matmul.rhs", [&](Tape& t, Var v) { return oracle::probe(matmul(t.constant(a), v), seed); }, b);
    check("matmul.batched", [&](Tape& t, Var v) {
      return oracle::probe(matmul(v, t.constant(bt)), seed);
    }, t3);
    check("linear.x", [&](Tape& t, Var v) {
      return oracle::probe(linear(v, t.constant(b), t.constant(bias)), seed);
    }, a);
    check("linear.w", [&](Tape& t, Var v) {
      return oracle::probe(linear(t.constant(a), v, t.constant(bias)), seed);
    }, b);
    check("linear.b", [&](Tape& t, Var v) {
      return oracle::probe(linear(t.constant(a), t.constant(b), v), seed);
    }, bias);
    check("add.broadcast", [&](Tape& t, Var v) { return oracle::probe(add(t.constant(a), v), seed); }, row);
    check("mul", [&](Tape& t, Var v) { return oracle::probe(mul(v, t.constant(a)), seed); }, a);
    check("scale", [&](Tape&, Var v) { return oracle::probe(scale(v, -1.7), seed); }, a);
    for (std::size_t axis = 0; axis < 3; ++axis)
      check("softmax", [&, axis](Tape&, Var v) { return oracle::probe(softmax(v, axis), seed); }, t3);
    const Tensor g = random_tensor({4}, rng), be = random_tensor({4}, rng);
    check("layernorm.x", [&](Tape& t, Var v) {
      return oracle::probe(layernorm(v, t.constant(g), t.constant(be)), seed);
    }, t3);
    check("layernorm.gamma", [&](Tape& t, Var v) {
      return oracle::probe(layernorm(t.constant(t3), v, t.constant(be)), seed);
    }, g);
    check("layernorm.beta", [&](Tape& t, Var v) {
      return oracle::probe(layernorm(t.constant(t3), t.constant(g), v), seed);
    }, be);
    check("gelu", [&](Tape&, Var v) { return oracle::probe(gelu(v), seed); }, t3);
    check("reshape", [&](Tape&, Var v) { return oracle::probe(reshape(v, {4, 6}), seed); }, t3);
    check("permute", [&](Tape&, Var v) { return oracle::probe(permute(v, {2, 0, 1}), seed); }, t3);
    check("transpose", [&](Tape&, Var v) { return oracle::probe(transpose(v), seed); }, a);
    check("mean_axis", [&](Tape&, Var v) { return oracle::probe(mean_axis(v, 1), seed); }, t3);
    check("sum", [&](Tape&, Var v) { return sum(mul(v, v)); }, a);
    const std::vector<std::size_t> labels{1, 0, 4};
    check("cross_entropy", [&](Tape& t, Var v) {
      return cross_entropy(matmul(t.constant(a), v), labels);
    }, b);
    const std::vector<std::uint32_t> idx{2, 0, 0, 1};
    check("gather_rows", [&](Tape&, Var v) {
      return oracle::probe(gather_rows(v, idx, 3, 4, {2, 4, 4}), seed);
    }, t3);

    const Tensor img = random_tensor({1, 8, 8, 3}, rng);
    check("patch_partition", [&](Tape&, Var v) {
      return oracle::probe(patch_partition(v, 4).tokens, seed);
    }, img);
    const Tensor tok = random_tensor({2, 16, 3}, rng), mw = random_tensor({12, 6}, rng);
    check("patch_merging.x", [&](Tape& t, Var v) {
      return oracle::probe(patch_merging(FeatureMap(v, 4, 4), t.constant(mw)).tokens, seed);
    }, tok);
    check("patch_merging.w", [&](Tape& t, Var v) {
      return oracle::probe(patch_merging(FeatureMap(t.constant(tok), 4, 4), v).tokens, seed);
    }, mw);
    const Tensor ew = random_tensor({48, 5}, rng), eb = random_tensor({5}, rng);
    check("linear_embedding", [&](Tape& t, Var v) {
      return oracle::probe(
          linear_embedding(patch_partition(v, 4), t.constant(ew), t.constant(eb)).tokens, seed);
    }, img);
    check("cyclic_shift+window_partition", [&](Tape&, Var v) {
      return oracle::probe(window_partition(cyclic_shift(FeatureMap(v, 4, 4), -1, -2), 2).windows, seed);
    }, tok);
    check("window_reverse", [&](Tape&, Var v) {
      WindowGrid grid{reshape(v, {8, 4, 3}), 2, 4, 4, 3};
      return oracle::probe(window_reverse(grid).tokens, seed);
    }, tok);

    const oracle::Mha mha = oracle::random_mha(4, 2, 2, rng);
    const Tensor x = random_tensor({1, 16, 4}, rng);
    auto attn_with = [&](Tape& t, std::optional<Var> wq, std::optional<Var> table,
                         std::optional<Var> input) {
      auto bnd = oracle::bind(t, mha);
      if (wq) bnd.weights.wq = *wq;
      if (table) bnd.bias->table = *table;
      const FeatureMap fm(input ? *input : t.constant(x), 4, 4);
      return oracle::probe(sw_msa(fm, 2, 1, bnd.weights, &*bnd.bias).tokens, seed);
    };
    check("sw_msa.x", [&](Tape& t, Var v) { return attn_with(t, {}, {}, v); }, x);
    check("sw_msa.wq", [&](Tape& t, Var v) { return attn_with(t, v, {}, {}); }, mha.wq);
    check("sw_msa.table", [&](Tape& t, Var v) { return attn_with(t, {}, v, {}); }, mha.table);
    check("multi_head_attention", [&](Tape& t, Var v) {
      const auto bnd = oracle::bind(t, mha);
      return oracle::probe(multi_head_attention(v, bnd.weights, &*bnd.bias), seed);
    }, random_tensor({4, 4}, rng));
  }
  o.require(worst <= 1e-6, "max relative error <= 1e-6");
  o.detail << checks << " checks over 20 seeds, worst " << worst << " (" << worst_op << ")";
}

// Full swin-micro, 20 seeds, two sampled coordinates in every parameter.
void gradient_model(Outcome& o) {
  double worst = 0;
  std::size_t coords = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SwinConfig c = swin_micro_config();
    c.seed = seed;
    SwinModel model(c);
    oracle::jitter(model, seed);
    Rng rng{1004, seed};
    const Tensor img = random_tensor({1, 64, 64, 3}, rng, 0, 1);
    const std::vector<std::size_t> labels{rng.below(10)};
    GradCheckOptions opt;
    opt.max_coords = 2;
    opt.seed = seed;
    for (std::size_t i = 0; i < model.parameters().size(); ++i) {
      const auto r = grad_check_detailed(oracle::model_loss_in(model, i, img, labels),
                                         model.parameters()[i].value, opt);
      worst = std::max(worst, r.max_rel_error);
      coords += r.coords_checked;
    }
  }
  o.require(worst <= 1e-4, "end-to-end relative error <= 1e-4");
  o.detail << coords << " coordinates over 20 seeds, worst " << worst;
}

void structural(Outcome& o) {
  Rng rng{1005};
  std::size_t round_trips = 0, broken = 0;
  for (std::size_t h = 1; h <= 16; ++h)
    for (std::size_t w = 1; w <= 16; ++w) {
      Tape tape;
      const Tensor x = random_tensor({2, h * w, 3}, rng);
      const FeatureMap fm(tape.constant(x), h, w);
      for (std::size_t m = 1; m <= std::min(h, w); ++m) {
        if (h % m || w % m) continue;
        ++round_trips;
        broken += !(window_reverse(window_partition(fm, m)).tokens.value() == x);
      }
      for (long s = 0; s < static_cast<long>(std::min(h, w)); ++s) {
        ++round_trips;
        broken += !(cyclic_shift(cyclic_shift(fm, -s, -s), s, s).tokens.value() == x);
      }
    }
  o.require(broken == 0, "partition and shift round trips exact");

  SwinModel model(swin_micro_config());
  for (Parameter& p : model.parameters())
    if (p.name.ends_with(".attn.wo") || p.name.ends_with(".mlp.fc2.weight")) p.value.fill(0.0);
  const Tensor img = random_tensor({2, 64, 64, 3}, rng, 0, 1);
  Tape tape;
  const auto bound = model.bind(tape, false);
  std::vector<BlockActivation> acts;
  const FeatureMap trunk = model.forward_trunk(bound, tape.constant(img), kNumStages, &acts);
  bool identity = !acts.empty();
  for (const BlockActivation& a : acts) identity = identity && a.s == a.s_prev;
  FeatureMap ref = linear_embedding(patch_partition(tape.constant(img), 4), bound[0], bound[1]);
  for (std::size_t s = 1; s < kNumStages; ++s)
    ref = patch_merging(ref, bound[*model.stages()[s].merge_weight]);
  identity = identity && trunk.tokens.value() == ref.tokens.value();
  o.require(identity, "zeroed update weights give an identity trunk");

  const oracle::Mha mha = oracle::random_mha(8, 2, 4, rng);
  const auto b = oracle::bind(tape, mha);
  const FeatureMap fm(tape.constant(random_tensor({2, 64, 8}, rng)), 8, 8);
  const bool shift0 = sw_msa(fm, 4, 0, b.weights, &*b.bias).tokens.value() ==
                      w_msa(fm, 4, b.weights, &*b.bias).tokens.value();
  o.require(shift0, "shift 0 sw_msa bit-identical to w_msa");
  o.detail << round_trips << " round trips exact, " << acts.size()
           << " identity blocks, shift-0 identical " << (shift0 ? "yes" : "no");
}

const fs::path& work_dir() {
  static const fs::path p = oracle::scratch("acceptance");
  return p;
}

void desk_learning(Outcome& o) {
  const fs::path data = work_dir() / "synthetic";
  const fs::path ckpt = work_dir() / "desk.ckpt";
  if (cli({"gen-data", "--out", data.string(), "--seed", "7"}) != kExitOk) {
    o.require(false, "gen-data");
    return;
  }
  const auto t0 = std::chrono::steady_clock::now();
  if (cli({"train", "--data", data.string(), "--out", ckpt.string(), "--epochs", "60",
           "--seed", "7", "--quiet"}) != kExitOk) {
    o.require(false, "train");
    return;
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  LoadedCheckpoint loaded = load_checkpoint(ckpt);
  const ScanResult scan = load_dataset(data, 0.2, 7);
  const auto train_set = select_split(scan, Split::kTrain);
  const auto val_set = select_split(scan, Split::kVal);
  const double train_acc = evaluate_top1(loaded.model, train_set).accuracy;
  const double val_acc = evaluate_top1(loaded.model, val_set).accuracy;
  o.require(train_acc >= 0.99, "train accuracy >= 0.99");
  o.require(val_acc >= 0.90, "val accuracy >= 0.90");
  o.detail << "train " << train_acc << " (" << train_set.size() << "), val " << val_acc
           << " (" << val_set.size() << "), " << minutes << " min (timing); ";

  // Single-batch overfit with augmentation off.
  SwinModel model(swin_micro_config());
  TrainPlan plan;
  plan.flip = false;
  plan.crop = false;
  plan.batch_size = 32;
  const std::vector<LabeledImage> batch(train_set.begin(), train_set.begin() + 32);
  std::vector<Tensor> imgs;
  std::vector<std::size_t> labels;
  for (const auto& s : batch) {
    imgs.push_back(s.image);
    labels.push_back(s.label);
  }
  const Tensor x = stack_images(imgs);
  AdamState adam;
  double loss = 0;
  std::size_t steps = 0;
  while (steps < 200) {
    model.zero_grad();
    Tape tape;
    const auto bound = model.bind(tape, true);
    const Var l = cross_entropy(model.forward(bound, tape.constant(x)), labels);
    loss = l.value()[0];
    if (loss <= 0.01) break;
    tape.backward(l);
    optimizer_step(model.parameters(), plan.lr0, adam);
    ++steps;
  }
  o.require(loss <= 0.01, "single-batch loss <= 0.01 within 200 steps");
  o.detail << "overfit loss " << loss << " after " << steps << " steps";
}

void determinism(Outcome& o) {
  const fs::path dir = work_dir() / "determinism";
  const fs::path data = dir / "data";
  fs::create_directories(dir);
  if (cli({"gen-data", "--out", data.string(), "--classes", "3", "--per-class", "8",
           "--seed", "5"}) != kExitOk) {
    o.require(false, "gen-data");
    return;
  }
  auto train_to = [&](const std::string& name, const std::string& epochs,
                      const std::string& resume) {
    std::vector<std::string> args{"train", "--data", data.string(), "--out",
                                  (dir / (name + ".ckpt")).string(), "--epochs", epochs,
                                  "--seed", "4", "--batch-size", "8", "--decay-every", "1",
                                  "--lr", "1e-3", "--no-timing", "--quiet"};
    if (!resume.empty()) {
      args.push_back("--resume");
      args.push_back(resume);
    }
    return cli(args);
  };
  bool ok = train_to("a", "4", "") == kExitOk && train_to("b", "4", "") == kExitOk;
  ok = ok && train_to("c", "2", "") == kExitOk;
  ok = ok && train_to("c", "4", (dir / "c.ckpt").string()) == kExitOk;
  o.require(ok, "all train invocations succeed");
  if (!ok) return;
  const std::string a = slurp(dir / "a.ckpt"), b = slurp(dir / "b.ckpt"), c = slurp(dir / "c.ckpt");
  const std::string ma = slurp(dir / "a.metrics.csv"), mb = slurp(dir / "b.metrics.csv"),
                    mc = slurp(dir / "c.metrics.csv");
  o.require(!a.empty() && a == b, "identical runs give identical checkpoints");
  o.require(!ma.empty() && ma == mb, "identical runs give identical metrics");
  o.require(a == c, "resumed checkpoint equals uninterrupted");
  o.require(ma == mc, "resumed metrics equal uninterrupted");
  o.detail << "checkpoints " << a.size() << " bytes, metrics " << split_on(ma, '\n').size() - 1
           << " lines; repeat " << (a == b && ma == mb ? "identical" : "differs") << ", resume "
           << (a == c && ma == mc ? "identical" : "differs");
}

void sweep_harness(Outcome& o) {
  const fs::path dir = work_dir() / "sweep";
  const fs::path data = dir / "data";
  fs::create_directories(dir);
  if (cli({"gen-data", "--out", data.string(), "--classes", "3", "--per-class", "6",
           "--seed", "6"}) != kExitOk) {
    o.require(false, "gen-data");
    return;
  }
  const std::pair<std::string, std::vector<std::string>> axes[] = {
      {"depth3", {"2", "4", "8"}}, {"window", {"2", "4"}}, {"embed", {"16", "32", "64"}}};
  for (const auto& [axis, values] : axes) {
    std::string joined;
    for (const auto& v : values) joined += (joined.empty() ? "" : ",") + v;
    const fs::path csv = dir / (axis + ".csv");
    std::string printed;
    if (cli({"sweep", "--data", data.string(), "--out", csv.string(), "--axis", axis,
             "--values", joined, "--epochs", "1", "--batch-size", "8", "--seed", "1"},
            &printed) != kExitOk) {
      o.require(false, "sweep " + axis + " runs");
      continue;
    }
    const std::string text = slurp(csv);
    o.require(text == printed, axis + " CSV printed and written identically");
    const auto lines = split_on(text, '\n');
    o.require(lines.size() == values.size() + 2 && lines.back().empty(),
              axis + " one row per value");
    o.require(!lines.empty() && lines[0] == kSweepHeader, axis + " header");
    std::size_t ran = 0;
    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
      const auto f = split_on(lines[i], ',');
      const bool shape = f.size() == 6 && f[0] == axis && f[1] == values[i - 1];
      o.require(shape, axis + " row " + std::to_string(i) + " has 6 fields");
      if (!shape) continue;
      if (f[5].rfind("ok", 0) == 0) {
        ++ran;
        const double tr = parse_double(f[3]), va = parse_double(f[4]);
        o.require(std::stoull(f[2]) > 0 && tr >= 0 && tr <= 1 && va >= 0 && va <= 1,
                  axis + " numeric fields in range");
      } else {
        o.require(f[5].rfind("skipped: ", 0) == 0, axis + " status ok or skipped");
      }
    }
    o.detail << (o.detail.tellp() > 0 ? "; " : "") << axis << " " << ran << "/" << values.size() << " ran";
  }
}

void throughput(Outcome& o) {
  std::string out;
  const int code = cli({"bench", "--config", "swin-micro", "--batch", "8", "--repetitions", "5",
                        "--warmup", "1"},
                       &out);
  o.require(code == kExitOk, "bench runs");
  const auto pos = out.find("images_per_sec_median ");
  o.require(pos != std::string::npos, "median throughput line present");
  if (pos == std::string::npos) return;
  const std::string line = out.substr(pos, out.find('\n', pos) - pos);
  o.detail << "swin-micro batch 8: " << line;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"oracle-equivalence", oracle_equivalence},
      {"mask-structure", mask_structure},
      {"complexity-formulas", complexity},
      {"gradient-ops", gradient_ops},
      {"gradient-end-to-end", gradient_model},
      {"structural-identities", structural},
      {"desk-scale-learning", desk_learning},
      {"determinism", determinism},
      {"sweep-harness", sweep_harness},
      {"throughput-reporting", throughput},
  };
  std::vector<std::string> filters(argv + 1, argv + argc);
  std::size_t failed = 0, ran = 0;
  for (const auto& [key, fn] : criteria) {
    if (!filters.empty() &&
        std::none_of(filters.begin(), filters.end(),
                     [&](const std::string& f) { return key.find(f) != std::string::npos; }))
      continue;
    ++ran;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("%s %-22s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", key.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
