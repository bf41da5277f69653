#include "swinlite/cli.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "swinlite/checkpoint.hpp"
#include "swinlite/training.hpp"

namespace swinlite {

namespace fs = std::filesystem;

namespace {

// Raised for flag values that parse but make no sense; exits with kExitUsage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr const char* kSynopsis =
    "usage: swinlite <verb> [flags]\n"
    "  gen-data --out DIR [--classes 10] [--per-class 120] [--size 64] [--seed 0]\n"
    "           [--val-fraction 0.2]\n"
    "  train    --data DIR --out CKPT [--config swin-micro] [--epochs 60] [--seed 0]\n"
    "           [--batch-size 32] [--lr 1e-4] [--decay-factor 5] [--decay-every 40]\n"
    "           [--no-flip] [--no-crop] [--crop-pad 4] [--val-fraction 0.2]\n"
    "           [--metrics CSV] [--resume CKPT] [--no-timing] [--quiet]\n"
    "  eval     --data DIR --ckpt CKPT [--split val|train|all] [--batch-size 32]\n"
    "  bench    [--config swin-micro] [--batch 8] [--repetitions 5] [--warmup 1]\n"
    "  sweep    --data DIR --axis depth3|heads|window|embed --values V[,V...]\n"
    "           --out CSV [--config swin-micro] [--epochs 60] [--seed 0] ...\n"
    "  inspect  CKPT\n";

SwinConfig config_by_name(const std::string& name) {
  try {
    return named_config(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

struct PlanFlags {
  std::size_t epochs = 60;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  double decay_factor = 5.0;
  std::size_t decay_every = 40;
  bool no_flip = false;
  bool no_crop = false;
  std::size_t crop_pad = 4;
  double val_fraction = 0.2;

  void add_to(CLI::App* app) {
    app->add_option("--epochs", epochs, "Total epochs");
    app->add_option("--seed", seed, "Seed for init, shuffling, augmentation and split");
    app->add_option("--batch-size", batch_size, "Mini-batch size");
    app->add_option("--lr", lr, "Initial learning rate");
    app->add_option("--decay-factor", decay_factor, "Learning rate divisor per decay step");
    app->add_option("--decay-every", decay_every, "Epochs between decay steps");
    app->add_flag("--no-flip", no_flip, "Disable random horizontal flip");
    app->add_flag("--no-crop", no_crop, "Disable random pad-and-crop");
    app->add_option("--crop-pad", crop_pad, "Zero padding before cropping");
    app->add_option("--val-fraction", val_fraction,
                    "Validation fraction when the dataset has no manifest");
  }

  TrainPlan plan() const {
    TrainPlan p;
    p.epochs = epochs;
    p.seed = seed;
    p.batch_size = batch_size;
    p.lr0 = lr;
    p.decay_factor = decay_factor;
    p.decay_every = decay_every;
    p.flip = !no_flip;
    p.crop = !no_crop;
    p.crop_pad = crop_pad;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return p;
  }
};

void save_atomically(const SwinModel& model, const fs::path& path,
                     const CheckpointExtras& extras) {
  fs::path tmp = path;
  tmp += ".tmp";
  save_checkpoint(model, tmp, extras);
  fs::rename(tmp, path);
}

void apply_thread_limit() {
  const char* env = std::getenv("SWINLITE_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw UsageError(std::string("SWINLITE_THREADS must be a positive integer, got '") +
                     env + "'");
  }
  Eigen::setNbThreads(static_cast<int>(n));
}

int gen_data(const fs::path& out_dir, const SyntheticOptions& opts,
             std::ostream& out) {
  if (opts.classes < 2 || opts.per_class < 2 || opts.size < 32) {
    throw UsageError("gen-data needs --classes >= 2, --per-class >= 2, --size >= 32");
  }
  const DatasetManifest m = generate_synthetic(out_dir, opts);
  out << "wrote " << m.entries.size() << " images in " << m.class_names.size()
      << " classes to " << out_dir.string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  fs::path data;
  fs::path out;
  fs::path metrics;
  fs::path resume;
  std::string config = "swin-micro";
  bool no_timing = false;
  bool quiet = false;
  PlanFlags plan;
};

int train_verb(const TrainArgs& a, std::ostream& out) {
  TrainingState state;
  std::optional<SwinModel> model;
  if (!a.resume.empty()) {
    LoadedCheckpoint loaded = load_checkpoint(a.resume);
    state = training_state_from(loaded.extras, loaded.model);
    state.plan.epochs = a.plan.epochs;
    model.emplace(std::move(loaded.model));
  } else {
    state.plan = a.plan.plan();
    state.val_fraction = a.plan.val_fraction;
  }
  const ScanResult scan = load_dataset(a.data, state.val_fraction, state.plan.seed);
  for (const std::string& s : scan.skipped) out << "skipped " << s << "\n";
  if (!model) {
    SwinConfig config = config_by_name(a.config);
    config.seed = a.plan.seed;
    config.num_classes = scan.manifest.class_names.size();
    model.emplace(config);
  }
  if (scan.manifest.class_names.size() != model->config().num_classes) {
    throw UsageError("dataset has " + std::to_string(scan.manifest.class_names.size()) +
                     " classes but the model expects " +
                     std::to_string(model->config().num_classes));
  }
  const auto train_set = select_split(scan, Split::kTrain);
  const auto val_set = select_split(scan, Split::kVal);

  fs::path metrics = a.metrics;
  if (metrics.empty()) {
    metrics = a.out;
    metrics.replace_extension(".metrics.csv");
  }
  const bool append = !a.resume.empty() && fs::exists(metrics);
  std::ofstream csv(metrics, append ? std::ios::binary | std::ios::app
                                    : std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + metrics.string());
  if (!append) csv << kMetricsHeader << '\n';

  if (!a.quiet) {
    out << "training " << train_set.size() << " images, validating on "
        << val_set.size() << ", " << model->parameter_count() << " parameters, epochs "
        << state.next_epoch << ".." << state.plan.epochs << "\n";
  }
  train(*model, state, train_set, val_set, [&](const MetricsRow& row) {
    csv << format_metrics_row(row, !a.no_timing) << '\n';
    csv.flush();
    save_atomically(*model, a.out, training_extras(state, *model));
    if (!a.quiet) {
      out << "epoch " << row.epoch << " loss " << format_double(row.train_loss)
          << " train_acc " << format_double(row.train_acc) << " val_acc "
          << format_double(row.val_acc) << " lr " << format_double(row.lr) << "\n";
      if (!a.no_timing) {
        out << "epoch " << row.epoch << " images_per_sec " << std::fixed
            << std::setprecision(1) << row.images_per_second << std::defaultfloat
            << " (timing)\n";
      }
    }
  });
  // Also covers runs with no epochs left to do.
  save_atomically(*model, a.out, training_extras(state, *model));
  out << "saved " << a.out.string() << "\n";
  return kExitOk;
}

int eval_verb(const fs::path& data, const fs::path& ckpt, const std::string& which,
              std::size_t batch, std::ostream& out) {
  if (which != "val" && which != "train" && which != "all") {
    throw UsageError("--split must be val, train or all");
  }
  LoadedCheckpoint loaded = load_checkpoint(ckpt);
  double val_fraction = 0.2;
  std::uint64_t seed = 0;
  try {
    const TrainingState s = training_state_from(loaded.extras, loaded.model);
    val_fraction = s.val_fraction;
    seed = s.plan.seed;
  } catch (const CheckpointError&) {
    // Model-only checkpoint: fall back to the default split.
  }
  const ScanResult scan = load_dataset(data, val_fraction, seed);
  std::vector<LabeledImage> samples;
  if (which == "all") {
    samples = scan.samples;
  } else {
    samples = select_split(scan, which == "val" ? Split::kVal : Split::kTrain);
  }
  const EvalResult r = evaluate_top1(loaded.model, samples, batch);
  out << "top1 " << format_double(r.accuracy) << " (" << r.correct << "/" << r.total
      << ") split " << which << "\n";
  out << "images_per_sec " << std::fixed << std::setprecision(1)
      << r.images_per_second << std::defaultfloat << " (timing)\n";
  return kExitOk;
}

int bench_verb(const std::string& name, std::size_t batch, std::size_t reps,
               std::size_t warmup, std::ostream& out) {
  if (batch == 0 || reps == 0) throw UsageError("--batch and --repetitions must be >= 1");
  SwinConfig config = config_by_name(name);
  out << "config " << name << "\n";
  out << std::left << std::setw(6) << "stage" << std::right << std::setw(5) << "h"
      << std::setw(5) << "w" << std::setw(6) << "C" << std::setw(4) << "M"
      << std::setw(16) << "omega_msa" << std::setw(16) << "omega_wmsa"
      << std::setw(9) << "ratio" << "\n";
  for (std::size_t s = 0; s < kNumStages; ++s) {
    const std::size_t g = config.stage_grid(s);
    const FlopsReport f = flops(g, g, config.stage_channels(s), config.stage_window(s));
    out << std::left << std::setw(6) << s + 1 << std::right << std::setw(5) << f.h
        << std::setw(5) << f.w << std::setw(6) << f.channels << std::setw(4)
        << f.window << std::setw(16) << f.omega_msa << std::setw(16) << f.omega_wmsa
        << std::setw(9) << std::fixed << std::setprecision(3) << f.ratio()
        << std::defaultfloat << "\n";
  }

  SwinModel model(config);
  Tensor images({batch, config.image_size, config.image_size, 3});
  Rng rng{tag(Stream::kGradCheck), config.seed, batch};
  for (double& v : images.data()) v = rng.uniform();
  for (std::size_t i = 0; i < warmup; ++i) model.predict(images);
  std::vector<double> rates;
  for (std::size_t i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    model.predict(images);
    const double dt =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rates.push_back(static_cast<double>(batch) / std::max(dt, 1e-12));
  }
  std::sort(rates.begin(), rates.end());
  const std::size_t n = rates.size();
  const double median = n % 2 ? rates[n / 2] : 0.5 * (rates[n / 2 - 1] + rates[n / 2]);
  out << "forward batch " << batch << " repetitions " << reps << " warmup " << warmup
      << "\n";
  out << "images_per_sec_median " << std::fixed << std::setprecision(1) << median
      << std::defaultfloat << " (timing)\n";
  return kExitOk;
}

struct SweepArgs {
  fs::path data;
  fs::path out;
  std::string axis;
  std::vector<std::size_t> values;
  std::string config = "swin-micro";
  PlanFlags plan;
};

int sweep_verb(const SweepArgs& a, std::ostream& out) {
  SweepAxis axis;
  try {
    axis = parse_sweep_axis(a.axis);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  TrainPlan plan = a.plan.plan();
  SwinConfig base = config_by_name(a.config);
  base.seed = plan.seed;
  const ScanResult scan = load_dataset(a.data, a.plan.val_fraction, plan.seed);
  base.num_classes = scan.manifest.class_names.size();
  const auto train_set = select_split(scan, Split::kTrain);
  const auto val_set = select_split(scan, Split::kVal);
  const auto rows = sweep(axis, a.values, base, plan, train_set, val_set);
  const std::string csv = sweep_csv(rows);
  std::ofstream f(a.out, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + a.out.string());
  f << csv;
  out << csv;
  return kExitOk;
}

const char* dtype_name(DType d) { return d == DType::kFloat32 ? "f32" : "f64"; }

int inspect_verb(const fs::path& path, std::ostream& out) {
  const auto bytes = read_bytes(path);
  const CheckpointFile file = decode_checkpoint(bytes);
  out << "checkpoint " << path.string() << " format SWL1 version "
      << kCheckpointVersion << " bytes " << bytes.size() << "\n";
  out << "config\n";
  for (const auto& [k, v] : file.config) out << "  " << k << " = " << v << "\n";
  const SwinConfig config = config_from_entries(file.config);
  const SwinModel reference(config);
  const auto& params = reference.parameters();
  out << "tensors " << file.tensors.size() << "\n";
  std::size_t width = 0;
  for (const TensorRecord& t : file.tensors) width = std::max(width, t.name.size());
  std::size_t model_scalars = 0;
  for (std::size_t i = 0; i < file.tensors.size(); ++i) {
    const TensorRecord& t = file.tensors[i];
    out << "  " << std::left << std::setw(static_cast<int>(width)) << t.name
        << std::right << "  " << dtype_name(t.dtype) << "  "
        << shape_str(t.value.shape()) << "  " << t.value.size() << "\n";
    if (i < params.size()) model_scalars += t.value.size();
  }
  out << "model parameters " << model_scalars << " (closed form "
      << param_count(config) << ")\n";
  return kExitOk;
}

}  // namespace

ScanResult load_dataset(const fs::path& root, double val_fraction,
                        std::uint64_t seed) {
  ScanResult scan = scan_dataset(root);
  const fs::path manifest = root / "manifest.txt";
  if (fs::exists(manifest)) {
    apply_manifest(manifest, scan.manifest);
  } else {
    split(scan.manifest, val_fraction, seed);
  }
  return scan;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Shifted-window transformer classifier", "swinlite"};
  app.require_subcommand(1);
  app.fallthrough(false);

  SyntheticOptions gen_opts;
  fs::path gen_out;
  auto* gen = app.add_subcommand("gen-data", "Write a synthetic emblem dataset");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--classes", gen_opts.classes, "Number of classes");
  gen->add_option("--per-class", gen_opts.per_class, "Images per class");
  gen->add_option("--size", gen_opts.size, "Image side in pixels");
  gen->add_option("--seed", gen_opts.seed, "Generator seed");
  gen->add_option("--val-fraction", gen_opts.val_fraction, "Validation fraction");

  TrainArgs targs;
  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  tr->add_option("--data", targs.data, "Dataset directory")->required();
  tr->add_option("--out", targs.out, "Checkpoint path")->required();
  tr->add_option("--config", targs.config, "swin-micro or swin-paper");
  tr->add_option("--metrics", targs.metrics, "Metrics CSV path");
  tr->add_option("--resume", targs.resume, "Continue from this checkpoint");
  tr->add_flag("--no-timing", targs.no_timing, "Write 0 in the throughput column");
  tr->add_flag("--quiet", targs.quiet, "Only report the saved checkpoint");
  targs.plan.add_to(tr);

  fs::path eval_data;
  fs::path eval_ckpt;
  std::string eval_split = "val";
  std::size_t eval_batch = 32;
  auto* ev = app.add_subcommand("eval", "Top-1 accuracy of a checkpoint");
  ev->add_option("--data", eval_data, "Dataset directory")->required();
  ev->add_option("--ckpt", eval_ckpt, "Checkpoint path")->required();
  ev->add_option("--split", eval_split, "val, train or all");
  ev->add_option("--batch-size", eval_batch, "Evaluation batch size");

  std::string bench_config = "swin-micro";
  std::size_t bench_batch = 8;
  std::size_t bench_reps = 5;
  std::size_t bench_warmup = 1;
  auto* be = app.add_subcommand("bench", "Analytic attention cost and measured throughput");
  be->add_option("--config", bench_config, "swin-micro or swin-paper");
  be->add_option("--batch", bench_batch, "Images per forward pass");
  be->add_option("--repetitions", bench_reps, "Timed forward passes");
  be->add_option("--warmup", bench_warmup, "Untimed forward passes");

  SweepArgs sargs;
  auto* sw = app.add_subcommand("sweep", "Train one model per value of an axis");
  sw->add_option("--data", sargs.data, "Dataset directory")->required();
  sw->add_option("--out", sargs.out, "Output CSV")->required();
  sw->add_option("--axis", sargs.axis, "depth3, heads, window or embed")->required();
  sw->add_option("--values", sargs.values, "Comma-separated values")
      ->required()
      ->delimiter(',');
  sw->add_option("--config", sargs.config, "Base configuration");
  sargs.plan.add_to(sw);

  fs::path inspect_path;
  auto* in = app.add_subcommand("inspect", "List checkpoint contents");
  in->add_option("checkpoint", inspect_path, "Checkpoint path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    out << sub->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << kSynopsis;
    return kExitUsage;
  }

  try {
    apply_thread_limit();
    if (gen->parsed()) return gen_data(gen_out, gen_opts, out);
    if (tr->parsed()) return train_verb(targs, out);
    if (ev->parsed()) return eval_verb(eval_data, eval_ckpt, eval_split, eval_batch, out);
    if (be->parsed()) return bench_verb(bench_config, bench_batch, bench_reps, bench_warmup, out);
    if (sw->parsed()) return sweep_verb(sargs, out);
    if (in->parsed()) return inspect_verb(inspect_path, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n" << kSynopsis;
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << kSynopsis;
  return kExitUsage;
}

}  // namespace swinlite
