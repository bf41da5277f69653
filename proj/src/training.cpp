#include "swinlite/training.hpp"

#include <algorithm>
#include <chrono>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "swinlite/ops.hpp"

namespace swinlite {

namespace {
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}
}  // namespace

void TrainPlan::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr0 > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(decay_factor > 1.0)) {
    throw std::invalid_argument("decay factor must exceed 1");
  }
  if (decay_every == 0) throw std::invalid_argument("decay period must be >= 1");
}

double lr_at_epoch(const TrainPlan& plan, std::size_t epoch) {
  const auto steps = static_cast<int>(epoch / plan.decay_every);
  double lr = plan.lr0;
  for (int i = 0; i < steps; ++i) lr /= plan.decay_factor;
  return lr;
}

Tensor flip_horizontal(const Tensor& image) {
  const std::size_t h = image.dim(0);
  const std::size_t w = image.dim(1);
  const std::size_t c = image.dim(2);
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(y * w + x) * c + ch] = image[(y * w + (w - 1 - x)) * c + ch];
      }
    }
  }
  return out;
}

Tensor pad_crop(const Tensor& image, std::size_t pad, std::size_t oy,
                std::size_t ox) {
  const std::size_t h = image.dim(0);
  const std::size_t w = image.dim(1);
  const std::size_t c = image.dim(2);
  if (oy > 2 * pad || ox > 2 * pad) {
    throw std::invalid_argument("crop offset outside the padded image");
  }
  Tensor out(image.shape());
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t py = y + oy;
    if (py < pad || py - pad >= h) continue;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t px = x + ox;
      if (px < pad || px - pad >= w) continue;
      for (std::size_t ch = 0; ch < c; ++ch) {
        out[(y * w + x) * c + ch] = image[((py - pad) * w + (px - pad)) * c + ch];
      }
    }
  }
  return out;
}

Tensor augment(const Tensor& image, const TrainPlan& plan, Rng& rng) {
  const bool coin = rng.below(2) == 1;
  const std::size_t span = 2 * plan.crop_pad + 1;
  const std::size_t oy = rng.below(span);
  const std::size_t ox = rng.below(span);
  Tensor out = plan.flip && coin ? flip_horizontal(image) : image;
  if (plan.crop && plan.crop_pad > 0) out = pad_crop(out, plan.crop_pad, oy, ox);
  return out;
}

void optimizer_step(std::vector<Parameter>& params, double lr, AdamState& state,
                    const AdamConfig& config) {
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const Parameter& p : params) {
      state.m.push_back(Tensor::zeros(p.value.shape()));
      state.v.push_back(Tensor::zeros(p.value.shape()));
    }
  }
  for (const Parameter& p : params) {
    if (p.grad.shape() != p.value.shape()) {
      throw DimensionError("gradient of " + p.name + " has shape " +
                           shape_str(p.grad.shape()) + ", parameter is " +
                           shape_str(p.value.shape()));
    }
    if (!p.grad.all_finite()) {
      throw NumericError("non-finite gradient in parameter " + p.name);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* w = params[i].value.data().data();
    const double* g = params[i].grad.data().data();
    double* m = state.m[i].data().data();
    double* v = state.v[i].data().data();
    const std::size_t n = params[i].value.size();
    for (std::size_t j = 0; j < n; ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      w[j] -= lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not a number: " + text);
  }
  return v;
}

std::string format_metrics_row(const MetricsRow& r, bool timing) {
  return std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," +
         format_double(r.train_acc) + "," + format_double(r.val_acc) + "," +
         format_double(r.lr) + "," +
         format_double(timing ? r.images_per_second : 0.0);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                     std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng{tag(Stream::kShuffle), seed, epoch};
  rng.shuffle(std::span<std::size_t>(order));
  return order;
}

Tensor stack_images(std::span<const Tensor> images) {
  if (images.empty()) throw DimensionError("cannot stack zero images");
  const Shape& s = images.front().shape();
  Shape out_shape{images.size()};
  out_shape.insert(out_shape.end(), s.begin(), s.end());
  Tensor out(out_shape);
  const std::size_t n = images.front().size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].shape() != s) {
      throw DimensionError("image " + std::to_string(i) + " has shape " +
                           shape_str(images[i].shape()) + ", expected " +
                           shape_str(s));
    }
    std::copy_n(images[i].data().data(), n, out.data().data() + i * n);
  }
  return out;
}

std::size_t count_correct(const Tensor& logits,
                          std::span<const std::size_t> labels) {
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double* row = logits.data().data() + b * k;
    const auto best = static_cast<std::size_t>(std::max_element(row, row + k) - row);
    if (best == labels[b]) ++correct;
  }
  return correct;
}

EvalResult evaluate_top1(const Predictor& predict,
                         std::span<const LabeledImage> samples,
                         std::size_t batch_size) {
  if (samples.empty()) throw std::invalid_argument("cannot evaluate an empty dataset");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  EvalResult r;
  const auto start = Clock::now();
  for (std::size_t lo = 0; lo < samples.size(); lo += batch_size) {
    const std::size_t hi = std::min(samples.size(), lo + batch_size);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (std::size_t i = lo; i < hi; ++i) {
      images.push_back(samples[i].image);
      labels.push_back(samples[i].label);
    }
    const Tensor logits = predict(stack_images(images));
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
      throw DimensionError("predictor returned " + shape_str(logits.shape()) +
                           " for " + std::to_string(labels.size()) + " images");
    }
    r.correct += count_correct(logits, labels);
  }
  const double elapsed = seconds_since(start);
  r.total = samples.size();
  r.accuracy = static_cast<double>(r.correct) / static_cast<double>(r.total);
  r.images_per_second = elapsed > 0 ? static_cast<double>(r.total) / elapsed : 0.0;
  return r;
}

EvalResult evaluate_top1(SwinModel& model, std::span<const LabeledImage> samples,
                         std::size_t batch_size) {
  return evaluate_top1([&model](const Tensor& x) { return model.predict(x); },
                       samples, batch_size);
}

MetricsRow train_epoch(SwinModel& model, AdamState& adam,
                       std::span<const LabeledImage> train,
                       std::span<const LabeledImage> val, const TrainPlan& plan,
                       std::size_t epoch) {
  if (train.empty()) throw std::invalid_argument("training set is empty");
  plan.validate();
  MetricsRow row;
  row.epoch = epoch;
  row.lr = lr_at_epoch(plan, epoch);
  const auto order = epoch_order(train.size(), plan.seed, epoch);
  double loss_sum = 0.0;
  std::size_t correct = 0;
  const auto start = Clock::now();
  for (std::size_t lo = 0; lo < order.size(); lo += plan.batch_size) {
    const std::size_t hi = std::min(order.size(), lo + plan.batch_size);
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    for (std::size_t k = lo; k < hi; ++k) {
      const std::size_t i = order[k];
      Rng rng{tag(Stream::kAugment), plan.seed, epoch, i};
      images.push_back(augment(train[i].image, plan, rng));
      labels.push_back(train[i].label);
    }
    model.zero_grad();
    Tape tape;
    const auto bound = model.bind(tape, true);
    Var logits = model.forward(bound, tape.constant(stack_images(images)));
    Var loss = cross_entropy(logits, labels);
    loss_sum += loss.value()[0] * static_cast<double>(labels.size());
    correct += count_correct(logits.value(), labels);
    tape.backward(loss);
    optimizer_step(model.parameters(), row.lr, adam);
  }
  const double elapsed = seconds_since(start);
  row.train_loss = loss_sum / static_cast<double>(train.size());
  row.train_acc = static_cast<double>(correct) / static_cast<double>(train.size());
  row.images_per_second =
      elapsed > 0 ? static_cast<double>(train.size()) / elapsed : 0.0;
  if (!val.empty()) row.val_acc = evaluate_top1(model, val).accuracy;
  return row;
}

CheckpointExtras training_extras(const TrainingState& s, const SwinModel& model) {
  CheckpointExtras e;
  const TrainPlan& p = s.plan;
  e.config = {
      {"train.next_epoch", std::to_string(s.next_epoch)},
      {"train.batch_size", std::to_string(p.batch_size)},
      {"train.lr0", format_double(p.lr0)},
      {"train.decay_factor", format_double(p.decay_factor)},
      {"train.decay_every", std::to_string(p.decay_every)},
      {"train.seed", std::to_string(p.seed)},
      {"train.flip", p.flip ? "1" : "0"},
      {"train.crop", p.crop ? "1" : "0"},
      {"train.crop_pad", std::to_string(p.crop_pad)},
      {"train.val_fraction", format_double(s.val_fraction)},
      {"adam.step", std::to_string(s.adam.step)},
  };
  const auto& params = model.parameters();
  if (s.adam.m.size() == params.size()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      e.tensors.push_back({"adam.m/" + params[i].name, DType::kFloat64, s.adam.m[i]});
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      e.tensors.push_back({"adam.v/" + params[i].name, DType::kFloat64, s.adam.v[i]});
    }
  }
  return e;
}

TrainingState training_state_from(const CheckpointExtras& e,
                                  const SwinModel& model) {
  auto u = [&e](const char* key) -> std::size_t {
    const std::string& v = config_value(e.config, key);
    try {
      std::size_t pos = 0;
      const auto n = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw CheckpointError(CheckpointErrorKind::kBadConfig,
                            std::string("config key ") + key + ": bad integer " + v);
    }
  };
  auto d = [&e](const char* key) {
    try {
      return parse_double(config_value(e.config, key));
    } catch (const std::invalid_argument& ex) {
      throw CheckpointError(CheckpointErrorKind::kBadConfig,
                            std::string("config key ") + key + ": " + ex.what());
    }
  };
  TrainingState s;
  s.next_epoch = u("train.next_epoch");
  s.plan.batch_size = u("train.batch_size");
  s.plan.lr0 = d("train.lr0");
  s.plan.decay_factor = d("train.decay_factor");
  s.plan.decay_every = u("train.decay_every");
  s.plan.seed = u("train.seed");
  s.plan.flip = u("train.flip") != 0;
  s.plan.crop = u("train.crop") != 0;
  s.plan.crop_pad = u("train.crop_pad");
  s.val_fraction = d("train.val_fraction");
  s.adam.step = u("adam.step");
  const auto& params = model.parameters();
  if (s.adam.step == 0) return s;
  if (e.tensors.size() != 2 * params.size()) {
    throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                          "optimizer state does not cover every parameter");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const TensorRecord& m = e.tensors[i];
    const TensorRecord& v = e.tensors[params.size() + i];
    if (m.name != "adam.m/" + params[i].name ||
        v.name != "adam.v/" + params[i].name ||
        m.value.shape() != params[i].value.shape() ||
        v.value.shape() != params[i].value.shape()) {
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                            "optimizer state mismatch at " + params[i].name);
    }
    s.adam.m.push_back(m.value);
    s.adam.v.push_back(v.value);
  }
  return s;
}

void train(SwinModel& model, TrainingState& state,
           std::span<const LabeledImage> train_set,
           std::span<const LabeledImage> val_set,
           const std::function<void(const MetricsRow&)>& on_epoch) {
  while (state.next_epoch < state.plan.epochs) {
    const MetricsRow row =
        train_epoch(model, state.adam, train_set, val_set, state.plan,
                    state.next_epoch);
    ++state.next_epoch;
    if (on_epoch) on_epoch(row);
  }
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "depth3") return SweepAxis::kDepth3;
  if (name == "heads") return SweepAxis::kHeads;
  if (name == "window") return SweepAxis::kWindow;
  if (name == "embed") return SweepAxis::kEmbed;
  throw std::invalid_argument("unknown sweep axis '" + name +
                              "' (expected depth3, heads, window or embed)");
}

const char* sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kDepth3:
      return "depth3";
    case SweepAxis::kHeads:
      return "heads";
    case SweepAxis::kWindow:
      return "window";
    case SweepAxis::kEmbed:
      return "embed";
  }
  return "?";
}

std::optional<SwinConfig> apply_sweep_value(const SwinConfig& base,
                                            SweepAxis axis, std::size_t value,
                                            std::string* reason) {
  SwinConfig c = base;
  switch (axis) {
    case SweepAxis::kDepth3:
      c.depths[2] = value;
      break;
    case SweepAxis::kHeads:
      c.heads = {value, 2 * value, 4 * value, 8 * value};
      break;
    case SweepAxis::kWindow:
      c.window_size = value;
      break;
    case SweepAxis::kEmbed:
      c.embed_dim = value;
      break;
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& ex) {
    if (reason) *reason = ex.what();
    return std::nullopt;
  }
  // The model tolerates uneven heads, but a sweep point should compare
  // full-width attention only.
  for (std::size_t s = 0; s < kNumStages; ++s) {
    if (c.stage_channels(s) % c.heads[s] != 0) {
      if (reason) {
        *reason = "stage " + std::to_string(s + 1) + " heads " +
                  std::to_string(c.heads[s]) + " do not divide " +
                  std::to_string(c.stage_channels(s)) + " channels";
      }
      return std::nullopt;
    }
  }
  return c;
}

std::vector<SweepRow> sweep(SweepAxis axis, std::span<const std::size_t> values,
                            const SwinConfig& base, const TrainPlan& plan,
                            std::span<const LabeledImage> train_set,
                            std::span<const LabeledImage> val_set) {
  std::vector<SweepRow> rows;
  for (std::size_t value : values) {
    SweepRow row;
    row.axis = axis;
    row.value = value;
    std::string reason;
    const auto config = apply_sweep_value(base, axis, value, &reason);
    if (!config) {
      row.note = "skipped: " + reason;
      rows.push_back(row);
      continue;
    }
    SwinModel model(*config);
    TrainingState state;
    state.plan = plan;
    train(model, state, train_set, val_set);
    row.ran = true;
    row.params = model.parameter_count();
    row.train_acc = evaluate_top1(model, train_set).accuracy;
    row.val_acc = val_set.empty() ? 0.0 : evaluate_top1(model, val_set).accuracy;
    const bool global = config->stage_window(0) == config->stage_grid(0);
    row.note = global ? "ok (window covers stage-1 grid: global attention)" : "ok";
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os << kSweepHeader << '\n';
  for (const SweepRow& r : rows) {
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << sweep_axis_name(r.axis) << ',' << r.value << ',' << r.params << ','
       << (r.ran ? format_double(r.train_acc) : "") << ','
       << (r.ran ? format_double(r.val_acc) : "") << ',' << note << '\n';
  }
  return os.str();
}

}  // namespace swinlite
