#include "swinlite/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace swinlite {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'W', 'L', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class T>
  void put(T v) {
    bytes(&v, sizeof v);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void bytes(void* p, std::size_t n, const char* what) {
    if (in_.size() - pos_ < n) {
      throw CheckpointError(CheckpointErrorKind::kTruncated,
                            std::string("checkpoint truncated while reading ") +
                                what);
    }
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  template <class T>
  T get(const char* what) {
    T v{};
    bytes(&v, sizeof v, what);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::string join(const std::array<std::size_t, kNumStages>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw CheckpointError(CheckpointErrorKind::kBadConfig,
                          "config key " + key + ": not an integer: " + text);
  }
  return v;
}

std::array<std::size_t, kNumStages> parse_stages(const std::string& key,
                                                 const std::string& text) {
  std::array<std::size_t, kNumStages> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i == kNumStages) break;
    out[i++] = parse_u64(key, item);
  }
  if (i != kNumStages || ss.rdbuf()->in_avail() > 0) {
    throw CheckpointError(CheckpointErrorKind::kBadConfig,
                          "config key " + key + " needs 4 stage values: " + text);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file) {
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  std::string text;
  for (const auto& [k, v] : file.config) text += k + "=" + v + "\n";
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.bytes(text.data(), text.size());
  w.put<std::uint32_t>(static_cast<std::uint32_t>(file.tensors.size()));
  for (const TensorRecord& rec : file.tensors) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(rec.name.size()));
    w.bytes(rec.name.data(), rec.name.size());
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.dtype));
    w.put<std::uint8_t>(static_cast<std::uint8_t>(rec.value.rank()));
    for (auto e : rec.value.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(e));
    if (rec.dtype == DType::kFloat64) {
      w.bytes(rec.value.data().data(), rec.value.size() * sizeof(double));
    } else {
      for (double v : rec.value.data()) w.put<float>(static_cast<float>(v));
    }
  }
  return w.take();
}

CheckpointFile decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  if (bytes.size() < 4) {
    throw CheckpointError(CheckpointErrorKind::kBadMagic,
                          "not a checkpoint: file shorter than the magic");
  }
  r.bytes(magic, 4, "magic");
  if (!std::equal(magic, magic + 4, kMagic)) {
    throw CheckpointError(CheckpointErrorKind::kBadMagic,
                          "not a checkpoint: bad magic bytes");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointErrorKind::kBadVersion,
                          "unsupported checkpoint version " +
                              std::to_string(version));
  }
  CheckpointFile file;
  const auto text_len = r.get<std::uint32_t>("config length");
  std::string text(text_len, '\0');
  r.bytes(text.data(), text_len, "config block");
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CheckpointError(CheckpointErrorKind::kBadConfig,
                            "config line without '=': " + line);
    }
    file.config.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  const auto count = r.get<std::uint32_t>("tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    TensorRecord rec;
    const auto name_len = r.get<std::uint16_t>("tensor name length");
    rec.name.resize(name_len);
    r.bytes(rec.name.data(), name_len, "tensor name");
    const auto dtype = r.get<std::uint8_t>("dtype");
    if (dtype > 1) {
      throw CheckpointError(CheckpointErrorKind::kBadConfig,
                            "tensor " + rec.name + ": unknown dtype " +
                                std::to_string(dtype));
    }
    rec.dtype = static_cast<DType>(dtype);
    const auto rank = r.get<std::uint8_t>("rank");
    Shape shape(rank);
    for (auto& e : shape) e = r.get<std::uint32_t>("extent");
    if (rank == 0 || std::find(shape.begin(), shape.end(), 0u) != shape.end()) {
      throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                            "tensor " + rec.name + " has an empty shape");
    }
    std::vector<double> data(shape_size(shape));
    if (rec.dtype == DType::kFloat64) {
      r.bytes(data.data(), data.size() * sizeof(double), rec.name.c_str());
    } else {
      for (double& v : data) v = r.get<float>(rec.name.c_str());
    }
    rec.value = Tensor(std::move(shape), std::move(data));
    file.tensors.push_back(std::move(rec));
  }
  if (!r.done()) {
    throw CheckpointError(CheckpointErrorKind::kBadConfig,
                          "trailing bytes after the last tensor");
  }
  return file;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError(CheckpointErrorKind::kIo,
                          "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path,
                 std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CheckpointError(CheckpointErrorKind::kIo,
                          "cannot write " + path.string());
  }
}

ConfigEntries config_entries(const SwinConfig& c) {
  return {
      {"image_size", std::to_string(c.image_size)},
      {"patch_size", std::to_string(c.patch_size)},
      {"embed_dim", std::to_string(c.embed_dim)},
      {"depths", join(c.depths)},
      {"heads", join(c.heads)},
      {"window_size", std::to_string(c.window_size)},
      {"mlp_ratio", std::to_string(c.mlp_ratio)},
      {"num_classes", std::to_string(c.num_classes)},
      {"seed", std::to_string(c.seed)},
  };
}

const std::string& config_value(const ConfigEntries& entries,
                                const std::string& key) {
  for (const auto& [k, v] : entries) {
    if (k == key) return v;
  }
  throw CheckpointError(CheckpointErrorKind::kBadConfig,
                        "config key missing: " + key);
}

SwinConfig config_from_entries(const ConfigEntries& e) {
  SwinConfig c;
  auto u = [&e](const char* key) { return parse_u64(key, config_value(e, key)); };
  c.image_size = u("image_size");
  c.patch_size = u("patch_size");
  c.embed_dim = u("embed_dim");
  c.depths = parse_stages("depths", config_value(e, "depths"));
  c.heads = parse_stages("heads", config_value(e, "heads"));
  c.window_size = u("window_size");
  c.mlp_ratio = u("mlp_ratio");
  c.num_classes = u("num_classes");
  c.seed = u("seed");
  try {
    c.validate();
  } catch (const std::invalid_argument& ex) {
    throw CheckpointError(CheckpointErrorKind::kBadConfig,
                          std::string("invalid config: ") + ex.what());
  }
  return c;
}

void save_checkpoint(const SwinModel& model, const std::filesystem::path& path,
                     const CheckpointExtras& extras) {
  CheckpointFile file;
  file.config = config_entries(model.config());
  file.config.insert(file.config.end(), extras.config.begin(),
                     extras.config.end());
  for (const Parameter& p : model.parameters()) {
    file.tensors.push_back({p.name, DType::kFloat64, p.value});
  }
  file.tensors.insert(file.tensors.end(), extras.tensors.begin(),
                      extras.tensors.end());
  write_bytes(path, encode_checkpoint(file));
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  CheckpointFile file = decode_checkpoint(read_bytes(path));
  const SwinConfig config = config_from_entries(file.config);
  LoadedCheckpoint out{SwinModel(config), {}};
  auto& params = out.model.parameters();
  if (file.tensors.size() < params.size()) {
    throw CheckpointError(CheckpointErrorKind::kShapeMismatch,
                          "checkpoint holds " +
                              std::to_string(file.tensors.size()) +
                              " tensors, config needs " +
                              std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorRecord& rec = file.tensors[i];
    if (rec.name != params[i].name ||
        rec.value.shape() != params[i].value.shape()) {
      throw CheckpointError(
          CheckpointErrorKind::kShapeMismatch,
          "tensor " + std::to_string(i) + " is " + rec.name + " " +
              shape_str(rec.value.shape()) + ", config expects " +
              params[i].name + " " + shape_str(params[i].value.shape()));
    }
    params[i].value = std::move(rec.value);
  }
  const std::size_t arch_keys = config_entries(config).size();
  out.extras.config.assign(
      file.config.begin() + static_cast<std::ptrdiff_t>(
                                std::min(arch_keys, file.config.size())),
      file.config.end());
  out.extras.tensors.assign(
      std::make_move_iterator(file.tensors.begin() +
                              static_cast<std::ptrdiff_t>(params.size())),
      std::make_move_iterator(file.tensors.end()));
  return out;
}

}  // namespace swinlite
