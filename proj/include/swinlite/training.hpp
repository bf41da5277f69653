#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swinlite/checkpoint.hpp"
#include "swinlite/data.hpp"
#include "swinlite/model.hpp"
#include "swinlite/rng.hpp"

namespace swinlite {

/// Optimization recipe: batch 32, lr 1e-4 cut to a fifth every 40 epochs,
/// random horizontal flip and zero-padded random crop.
struct TrainPlan {
  std::size_t batch_size = 32;
  std::size_t epochs = 60;
  double lr0 = 1e-4;
  double decay_factor = 5.0;
  std::size_t decay_every = 40;
  std::uint64_t seed = 0;
  bool flip = true;
  bool crop = true;
  std::size_t crop_pad = 4;

  void validate() const;
};

/// lr0 · (1/decay_factor)^floor(epoch / decay_every).
double lr_at_epoch(const TrainPlan& plan, std::size_t epoch);

Tensor flip_horizontal(const Tensor& image);
/// Zero-pads by pad on every side and crops the original extent starting at
/// (oy, ox) of the padded image.
Tensor pad_crop(const Tensor& image, std::size_t pad, std::size_t oy,
                std::size_t ox);
/// Coin flip for mirroring, then a random crop offset in [0, 2·pad]. Both
/// draws are always consumed so the stream does not depend on the switches.
Tensor augment(const Tensor& image, const TrainPlan& plan, Rng& rng);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update from each Parameter::grad. Throws
/// NumericError naming the parameter if a gradient is not finite.
void optimizer_step(std::vector<Parameter>& params, double lr, AdamState& state,
                    const AdamConfig& config = {});

struct MetricsRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double lr = 0.0;
  double images_per_second = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,train_loss,train_acc,val_acc,lr,images_per_sec";

/// CSV line without newline. With timing off the throughput column is 0 so
/// that runs can be compared byte for byte.
std::string format_metrics_row(const MetricsRow& row, bool timing = true);
/// Shortest round-trip decimal form.
std::string format_double(double v);
double parse_double(const std::string& text);

/// Seeded permutation of [0, n) for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::size_t epoch);

/// Stacks images into [batch, H, W, 3]; all images must share a shape.
Tensor stack_images(std::span<const Tensor> images);

/// Maps a batch of images [B, H, W, 3] to logits [B, K].
using Predictor = std::function<Tensor(const Tensor& images)>;

struct EvalResult {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double images_per_second = 0.0;
};

/// Fraction of rows whose first maximal logit is the label.
std::size_t count_correct(const Tensor& logits, std::span<const std::size_t> labels);

EvalResult evaluate_top1(const Predictor& predict,
                         std::span<const LabeledImage> samples,
                         std::size_t batch_size = 32);
EvalResult evaluate_top1(SwinModel& model, std::span<const LabeledImage> samples,
                         std::size_t batch_size = 32);

/// One pass over the shuffled training set followed by validation (skipped,
/// val_acc = 0, when val is empty).
MetricsRow train_epoch(SwinModel& model, AdamState& adam,
                       std::span<const LabeledImage> train,
                       std::span<const LabeledImage> val, const TrainPlan& plan,
                       std::size_t epoch);

/// Everything needed to continue a run bit-exactly. Randomness is keyed by
/// (plan.seed, epoch, sample), so the epoch counter is the generator state.
struct TrainingState {
  TrainPlan plan;
  std::size_t next_epoch = 0;
  AdamState adam;
  double val_fraction = 0.2;
};

CheckpointExtras training_extras(const TrainingState& state,
                                 const SwinModel& model);
/// Throws CheckpointError when the training keys or optimizer tensors are
/// missing or disagree with the model.
TrainingState training_state_from(const CheckpointExtras& extras,
                                  const SwinModel& model);

/// Runs epochs [state.next_epoch, plan.epochs) and reports each row.
void train(SwinModel& model, TrainingState& state,
           std::span<const LabeledImage> train_set,
           std::span<const LabeledImage> val_set,
           const std::function<void(const MetricsRow&)>& on_epoch = {});

enum class SweepAxis { kDepth3, kHeads, kWindow, kEmbed };

SweepAxis parse_sweep_axis(const std::string& name);
const char* sweep_axis_name(SweepAxis axis);

/// The base config with one axis set to value, or nullopt with a reason when
/// the combination is infeasible. heads sets stage heads to
/// (v, 2v, 4v, 8v).
std::optional<SwinConfig> apply_sweep_value(const SwinConfig& base,
                                            SweepAxis axis, std::size_t value,
                                            std::string* reason);

struct SweepRow {
  SweepAxis axis = SweepAxis::kDepth3;
  std::size_t value = 0;
  bool ran = false;
  std::size_t params = 0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  std::string note;
};

/// Trains one model per value under the same plan and seed.
std::vector<SweepRow> sweep(SweepAxis axis, std::span<const std::size_t> values,
                            const SwinConfig& base, const TrainPlan& plan,
                            std::span<const LabeledImage> train_set,
                            std::span<const LabeledImage> val_set);

inline constexpr const char* kSweepHeader =
    "axis,value,params,train_acc,val_acc,status";
std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace swinlite
