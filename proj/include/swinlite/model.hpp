#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swinlite/attention.hpp"

namespace swinlite {

inline constexpr std::size_t kNumStages = 4;

/// Architectural hyperparameters of the hierarchical window transformer.
struct SwinConfig {
  std::size_t image_size = 64;
  std::size_t patch_size = 4;
  std::size_t embed_dim = 32;
  std::array<std::size_t, kNumStages> depths{2, 2, 2, 2};
  std::array<std::size_t, kNumStages> heads{2, 4, 8, 16};
  std::size_t window_size = 4;
  std::size_t mlp_ratio = 2;
  std::size_t num_classes = 10;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  std::size_t stage_channels(std::size_t stage) const {
    return embed_dim << stage;
  }
  std::size_t stage_grid(std::size_t stage) const {
    return image_size / patch_size >> stage;
  }
  /// min(window_size, grid side) for the stage.
  std::size_t stage_window(std::size_t stage) const;
  /// floor(window/2), or 0 when the window covers the whole grid.
  std::size_t stage_shift(std::size_t stage) const;

  bool operator==(const SwinConfig&) const = default;
};

/// 224 px input, C=128, depths (2,2,8,2), heads (3,6,12,24), M=7, MLP ratio 4.
SwinConfig swin_paper_config();
/// 64 px input, C=32, depths (2,2,2,2), heads (2,4,8,16), M=4, MLP ratio 2.
SwinConfig swin_micro_config();
/// Looks up "swin-paper" or "swin-micro".
SwinConfig named_config(const std::string& name);

/// Closed-form number of scalar parameters.
std::size_t param_count(const SwinConfig& config);

/// Weights of one transformer block, bound to a tape.
struct BlockWeights {
  Var norm1_gamma;
  Var norm1_beta;
  MultiHeadWeights attn;
  Var norm2_gamma;
  Var norm2_beta;
  Var fc1_weight;
  Var fc1_bias;
  Var fc2_weight;
  Var fc2_bias;
};

/// Per-block snapshots: block input, post-attention residual, block output.
struct BlockActivation {
  Tensor s_prev;
  Tensor s_hat;
  Tensor s;
};

/// One block: LN → (S)W-MSA → residual, then LN → MLP → residual.
FeatureMap swin_block(const FeatureMap& fm, const BlockWeights& weights,
                      const RelativePositionBias& bias, std::size_t window,
                      std::size_t shift,
                      std::vector<BlockActivation>* capture = nullptr);

/// A W-MSA block followed by an SW-MSA block with the given shift.
FeatureMap swin_block_pair(const FeatureMap& fm, const BlockWeights& first,
                           const BlockWeights& second,
                           const RelativePositionBias& bias,
                           std::size_t window, std::size_t shift,
                           std::vector<BlockActivation>* capture = nullptr);

/// Model parameters in canonical order plus the structure that indexes them.
class SwinModel {
 public:
  /// Builds and initializes all parameters from config.seed.
  explicit SwinModel(SwinConfig config);

  const SwinConfig& config() const { return config_; }
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  /// Sum of all parameter sizes.
  std::size_t parameter_count() const;
  const Parameter* find(const std::string& name) const;

  /// Places every parameter on the tape: watched (gradients flow into each
  /// Parameter::grad) or constant.
  std::vector<Var> bind(Tape& tape, bool trainable);

  /// images [batch, H, W, 3] → logits [batch, num_classes].
  Var forward(std::span<const Var> bound, Var images,
              std::vector<BlockActivation>* capture = nullptr) const;

  /// One stage: patch merging (stages 1-3, zero-based) then the block pairs.
  FeatureMap stage_forward(std::span<const Var> bound, const FeatureMap& fm,
                           std::size_t stage,
                           std::vector<BlockActivation>* capture = nullptr) const;

  /// Runs the stages only and returns the last feature map.
  FeatureMap forward_trunk(std::span<const Var> bound, Var images,
                           std::size_t stages = kNumStages,
                           std::vector<BlockActivation>* capture = nullptr) const;

  /// Logits without gradient tracking.
  Tensor predict(const Tensor& images);

  void zero_grad();

  struct AttnIds {
    std::size_t wq, wk, wv, wo, bo;
  };
  struct BlockIds {
    std::size_t norm1_gamma, norm1_beta;
    AttnIds attn;
    std::size_t norm2_gamma, norm2_beta;
    std::size_t fc1_weight, fc1_bias, fc2_weight, fc2_bias;
  };
  struct StageIds {
    std::optional<std::size_t> merge_weight;
    std::optional<std::size_t> bias_table;
    std::vector<BlockIds> blocks;
  };

  const std::vector<StageIds>& stages() const { return stages_; }

  /// Block weights of stage s, block b, from a bound parameter list.
  BlockWeights block_weights(std::span<const Var> bound, std::size_t stage,
                             std::size_t block) const;

 private:
  std::size_t add_param(std::string name, Shape shape);

  SwinConfig config_;
  std::vector<Parameter> params_;
  std::size_t embed_weight_ = 0;
  std::size_t embed_bias_ = 0;
  std::vector<StageIds> stages_;
  std::vector<RelativePositionIndex> rel_index_;
  std::size_t head_norm_gamma_ = 0;
  std::size_t head_norm_beta_ = 0;
  std::size_t head_weight_ = 0;
  std::size_t head_bias_ = 0;
};

/// Whether a parameter gets the truncated-normal draw at construction.
/// Biases, norm offsets and bias tables start at zero; norm scales at one.
bool is_random_init(const std::string& name);

}  // namespace swinlite
