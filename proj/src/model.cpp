#include "swinlite/model.hpp"

#include <stdexcept>

#include "swinlite/rng.hpp"

namespace swinlite {

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string str(std::size_t v) { return std::to_string(v); }
}  // namespace

void SwinConfig::validate() const {
  if (patch_size == 0 || image_size == 0 ||
      image_size % (patch_size * 8) != 0) {
    throw std::invalid_argument("image size " + str(image_size) +
                                " must be a positive multiple of 8 x patch " +
                                str(patch_size));
  }
  if (embed_dim == 0) throw std::invalid_argument("embed dim must be positive");
  if (window_size == 0) throw std::invalid_argument("window size must be positive");
  if (mlp_ratio == 0) throw std::invalid_argument("mlp ratio must be positive");
  if (num_classes == 0) throw std::invalid_argument("need at least one class");
  for (std::size_t s = 0; s < kNumStages; ++s) {
    if (depths[s] % 2 != 0) {
      throw std::invalid_argument("stage " + str(s + 1) + " depth " +
                                  str(depths[s]) + " is odd");
    }
    if (heads[s] == 0 || heads[s] > stage_channels(s)) {
      throw std::invalid_argument("stage " + str(s + 1) + " heads " +
                                  str(heads[s]) + " do not fit " +
                                  str(stage_channels(s)) + " channels");
    }
    if (stage_grid(s) % stage_window(s) != 0) {
      throw std::invalid_argument("window " + str(stage_window(s)) +
                                  " does not tile the stage " + str(s + 1) +
                                  " grid of " + str(stage_grid(s)));
    }
  }
}

std::size_t SwinConfig::stage_window(std::size_t stage) const {
  return std::min(window_size, stage_grid(stage));
}

std::size_t SwinConfig::stage_shift(std::size_t stage) const {
  const std::size_t m = stage_window(stage);
  return m == stage_grid(stage) ? 0 : m / 2;
}

SwinConfig swin_paper_config() {
  SwinConfig c;
  c.image_size = 224;
  c.patch_size = 4;
  c.embed_dim = 128;
  c.depths = {2, 2, 8, 2};
  c.heads = {3, 6, 12, 24};
  c.window_size = 7;
  c.mlp_ratio = 4;
  c.num_classes = 10;
  return c;
}

SwinConfig swin_micro_config() { return SwinConfig{}; }

SwinConfig named_config(const std::string& name) {
  if (name == "swin-paper") return swin_paper_config();
  if (name == "swin-micro") return swin_micro_config();
  throw std::invalid_argument("unknown config '" + name +
                              "' (expected swin-paper or swin-micro)");
}

std::size_t param_count(const SwinConfig& config) {
  config.validate();
  const std::size_t p = config.patch_size;
  const std::size_t c0 = config.embed_dim;
  std::size_t total = 3 * p * p * c0 + c0;
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::size_t c = config.stage_channels(s);
    if (s > 0) total += 2 * c * c;  // [4(c/2) x c]
    if (config.depths[s] == 0) continue;
    const std::size_t span = 2 * config.stage_window(s) - 1;
    total += span * span * config.heads[s];
    const std::size_t hidden = config.mlp_ratio * c;
    const std::size_t inner = config.heads[s] * head_dim(c, config.heads[s]);
    const std::size_t block = 2 * c                // norm1
                              + 4 * c * inner + c  // q, k, v, o and output bias
                              + 2 * c          // norm2
                              + c * hidden + hidden + hidden * c + c;
    total += config.depths[s] * block;
  }
  const std::size_t cf = config.stage_channels(kNumStages - 1);
  total += 2 * cf + cf * config.num_classes + config.num_classes;
  return total;
}

bool is_random_init(const std::string& name) {
  return ends_with(name, ".weight") || ends_with(name, ".wq") ||
         ends_with(name, ".wk") || ends_with(name, ".wv") ||
         ends_with(name, ".wo");
}

std::size_t SwinModel::add_param(std::string name, Shape shape) {
  Parameter p;
  p.name = std::move(name);
  // Gradients are allocated by zero_grad or backward, so inference-only
  // models carry no second copy.
  p.value = Tensor(std::move(shape));
  params_.push_back(std::move(p));
  return params_.size() - 1;
}

SwinModel::SwinModel(SwinConfig config) : config_(config) {
  config_.validate();
  const std::size_t p = config_.patch_size;
  const std::size_t c0 = config_.embed_dim;
  embed_weight_ = add_param("embed.weight", {3 * p * p, c0});
  embed_bias_ = add_param("embed.bias", {c0});
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::string prefix = "stage" + str(s);
    const std::size_t c = config_.stage_channels(s);
    StageIds ids;
    if (s > 0) ids.merge_weight = add_param(prefix + ".merge.weight", {2 * c, c});
    const std::size_t m = config_.stage_window(s);
    rel_index_.push_back(build_relative_index(m));
    if (config_.depths[s] > 0) {
      ids.bias_table = add_param(prefix + ".bias_table",
                                 {(2 * m - 1) * (2 * m - 1), config_.heads[s]});
    }
    const std::size_t hidden = config_.mlp_ratio * c;
    const std::size_t inner = config_.heads[s] * head_dim(c, config_.heads[s]);
    for (std::size_t b = 0; b < config_.depths[s]; ++b) {
      const std::string bp = prefix + ".block" + str(b);
      BlockIds bi{};
      bi.norm1_gamma = add_param(bp + ".norm1.gamma", {c});
      bi.norm1_beta = add_param(bp + ".norm1.beta", {c});
      bi.attn.wq = add_param(bp + ".attn.wq", {c, inner});
      bi.attn.wk = add_param(bp + ".attn.wk", {c, inner});
      bi.attn.wv = add_param(bp + ".attn.wv", {c, inner});
      bi.attn.wo = add_param(bp + ".attn.wo", {inner, c});
      bi.attn.bo = add_param(bp + ".attn.bo", {c});
      bi.norm2_gamma = add_param(bp + ".norm2.gamma", {c});
      bi.norm2_beta = add_param(bp + ".norm2.beta", {c});
      bi.fc1_weight = add_param(bp + ".mlp.fc1.weight", {c, hidden});
      bi.fc1_bias = add_param(bp + ".mlp.fc1.bias", {hidden});
      bi.fc2_weight = add_param(bp + ".mlp.fc2.weight", {hidden, c});
      bi.fc2_bias = add_param(bp + ".mlp.fc2.bias", {c});
      ids.blocks.push_back(bi);
    }
    stages_.push_back(std::move(ids));
  }
  const std::size_t cf = config_.stage_channels(kNumStages - 1);
  head_norm_gamma_ = add_param("head.norm.gamma", {cf});
  head_norm_beta_ = add_param("head.norm.beta", {cf});
  head_weight_ = add_param("head.weight", {cf, config_.num_classes});
  head_bias_ = add_param("head.bias", {config_.num_classes});

  Rng rng{tag(Stream::kInit), config_.seed};
  for (Parameter& param : params_) {
    if (is_random_init(param.name)) {
      for (double& v : param.value.data()) v = rng.truncated_normal(0.02);
    } else if (ends_with(param.name, ".gamma")) {
      param.value.fill(1.0);
    }
  }
}

std::size_t SwinModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

const Parameter* SwinModel::find(const std::string& name) const {
  for (const Parameter& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<Var> SwinModel::bind(Tape& tape, bool trainable) {
  std::vector<Var> bound;
  bound.reserve(params_.size());
  for (Parameter& p : params_) {
    bound.push_back(trainable ? tape.parameter(p) : tape.constant(p.value));
  }
  return bound;
}

void SwinModel::zero_grad() {
  for (Parameter& p : params_) p.zero_grad();
}

BlockWeights SwinModel::block_weights(std::span<const Var> bound,
                                      std::size_t stage,
                                      std::size_t block) const {
  const BlockIds& b = stages_.at(stage).blocks.at(block);
  BlockWeights w;
  w.norm1_gamma = bound[b.norm1_gamma];
  w.norm1_beta = bound[b.norm1_beta];
  w.attn.wq = bound[b.attn.wq];
  w.attn.wk = bound[b.attn.wk];
  w.attn.wv = bound[b.attn.wv];
  w.attn.wo = bound[b.attn.wo];
  w.attn.bo = bound[b.attn.bo];
  w.attn.heads = config_.heads[stage];
  w.norm2_gamma = bound[b.norm2_gamma];
  w.norm2_beta = bound[b.norm2_beta];
  w.fc1_weight = bound[b.fc1_weight];
  w.fc1_bias = bound[b.fc1_bias];
  w.fc2_weight = bound[b.fc2_weight];
  w.fc2_bias = bound[b.fc2_bias];
  return w;
}

FeatureMap swin_block(const FeatureMap& fm, const BlockWeights& weights,
                      const RelativePositionBias& bias, std::size_t window,
                      std::size_t shift,
                      std::vector<BlockActivation>* capture) {
  Var x = fm.tokens;
  const FeatureMap normed(layernorm(x, weights.norm1_gamma, weights.norm1_beta),
                          fm.h, fm.w);
  const FeatureMap attended =
      shift == 0 ? w_msa(normed, window, weights.attn, &bias)
                 : sw_msa(normed, window, shift, weights.attn, &bias);
  Var s_hat = add(x, attended.tokens);
  Var hidden = gelu(linear(layernorm(s_hat, weights.norm2_gamma,
                                     weights.norm2_beta),
                           weights.fc1_weight, weights.fc1_bias));
  Var s = add(s_hat, linear(hidden, weights.fc2_weight, weights.fc2_bias));
  if (capture) capture->push_back({x.value(), s_hat.value(), s.value()});
  return FeatureMap(s, fm.h, fm.w);
}

FeatureMap swin_block_pair(const FeatureMap& fm, const BlockWeights& first,
                           const BlockWeights& second,
                           const RelativePositionBias& bias,
                           std::size_t window, std::size_t shift,
                           std::vector<BlockActivation>* capture) {
  FeatureMap out = swin_block(fm, first, bias, window, 0, capture);
  return swin_block(out, second, bias, window, shift, capture);
}

FeatureMap SwinModel::stage_forward(std::span<const Var> bound,
                                    const FeatureMap& fm, std::size_t stage,
                                    std::vector<BlockActivation>* capture) const {
  const StageIds& ids = stages_.at(stage);
  FeatureMap out = fm;
  if (ids.merge_weight) out = patch_merging(out, bound[*ids.merge_weight]);
  if (ids.blocks.empty()) return out;
  const RelativePositionBias bias{bound[*ids.bias_table], rel_index_[stage]};
  const std::size_t window = config_.stage_window(stage);
  const std::size_t shift = config_.stage_shift(stage);
  for (std::size_t b = 0; b + 1 < ids.blocks.size(); b += 2) {
    out = swin_block_pair(out, block_weights(bound, stage, b),
                          block_weights(bound, stage, b + 1), bias, window,
                          shift, capture);
  }
  return out;
}

FeatureMap SwinModel::forward_trunk(std::span<const Var> bound, Var images,
                                    std::size_t stages,
                                    std::vector<BlockActivation>* capture) const {
  if (bound.size() != params_.size()) {
    throw std::invalid_argument("bound parameter list has " +
                                str(bound.size()) + " entries, model has " +
                                str(params_.size()));
  }
  const Shape& s = images.shape();
  const std::size_t n = config_.image_size;
  if (s.size() != 4 || s[1] != n || s[2] != n || s[3] != 3) {
    throw DimensionError("model expects images [batch, " + str(n) + ", " +
                         str(n) + ", 3], got " + shape_str(s));
  }
  FeatureMap fm = patch_partition(images, config_.patch_size);
  fm = linear_embedding(fm, bound[embed_weight_], bound[embed_bias_]);
  for (std::size_t st = 0; st < std::min(stages, kNumStages); ++st) {
    fm = stage_forward(bound, fm, st, capture);
  }
  return fm;
}

Var SwinModel::forward(std::span<const Var> bound, Var images,
                       std::vector<BlockActivation>* capture) const {
  const FeatureMap fm = forward_trunk(bound, images, kNumStages, capture);
  Var normed =
      layernorm(fm.tokens, bound[head_norm_gamma_], bound[head_norm_beta_]);
  Var pooled = mean_axis(normed, 1);
  return linear(pooled, bound[head_weight_], bound[head_bias_]);
}

Tensor SwinModel::predict(const Tensor& images) {
  Tape tape;
  const auto bound = bind(tape, false);
  return forward(bound, tape.constant(images)).value();
}

}  // namespace swinlite
