#include "swinlite/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

#include "swinlite/rng.hpp"

namespace swinlite {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- PPM

namespace {

class HeaderCursor {
 public:
  explicit HeaderCursor(std::span<const std::uint8_t> b) : b_(b) {}

  std::string token(const char* what) {
    skip_space_and_comments();
    std::string t;
    while (pos_ < b_.size() && !std::isspace(b_[pos_]) && b_[pos_] != '#') {
      t.push_back(static_cast<char>(b_[pos_++]));
    }
    if (t.empty()) {
      throw PpmError(PpmErrorKind::kTruncated,
                     std::string("PPM header ends before ") + what);
    }
    return t;
  }

  std::size_t number(const char* what) {
    const std::string t = token(what);
    if (!std::all_of(t.begin(), t.end(),
                     [](char c) { return c >= '0' && c <= '9'; }) ||
        t.size() > 9) {
      throw PpmError(PpmErrorKind::kBadHeader,
                     std::string("PPM ") + what + " is not a number: " + t);
    }
    return static_cast<std::size_t>(std::stoul(t));
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void end_of_header() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw PpmError(PpmErrorKind::kTruncated, "PPM header not terminated");
    }
    ++pos_;
  }

  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (std::isspace(b_[pos_])) {
        ++pos_;
      } else if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n' && b_[pos_] != '\r') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

}  // namespace

Tensor decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw PpmError(PpmErrorKind::kBadMagic, "not a binary PPM (expected P6)");
  }
  HeaderCursor cur(bytes);
  cur.token("magic");
  const std::size_t width = cur.number("width");
  const std::size_t height = cur.number("height");
  const std::size_t maxval = cur.number("maxval");
  if (maxval != 255) {
    throw PpmError(PpmErrorKind::kBadMaxval,
                   "PPM maxval " + std::to_string(maxval) + " unsupported");
  }
  if (width == 0 || height == 0) {
    throw PpmError(PpmErrorKind::kBadHeader, "PPM with zero extent");
  }
  cur.end_of_header();
  const std::size_t n = width * height * 3;
  if (bytes.size() - cur.pos() < n) {
    throw PpmError(PpmErrorKind::kTruncated,
                   "PPM raster truncated: need " + std::to_string(n) +
                       " bytes, have " + std::to_string(bytes.size() - cur.pos()));
  }
  Tensor img({height, width, 3});
  for (std::size_t i = 0; i < n; ++i) img[i] = bytes[cur.pos() + i] / 255.0;
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != 3) {
    throw DimensionError("encode_ppm expects [H, W, 3], got " +
                         shape_str(image.shape()));
  }
  const std::string header = "P6\n" + std::to_string(image.dim(1)) + " " +
                             std::to_string(image.dim(0)) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.size());
  for (double v : image.data()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

Tensor read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                  std::istreambuf_iterator<char>()};
  return decode_ppm(bytes);
}

void write_ppm(const fs::path& path, const Tensor& image) {
  const auto bytes = encode_ppm(image);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DatasetError("cannot write " + path.string());
}

// ---------------------------------------------------------------- datasets

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "val"; }

ScanResult scan_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw DatasetError("dataset root " + root.string() + " is not a directory");
  }
  std::vector<std::string> classes;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) classes.push_back(e.path().filename().string());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.empty()) {
    throw DatasetError("dataset root " + root.string() +
                       " has no class directories");
  }
  ScanResult result;
  result.manifest.class_names = classes;
  for (std::size_t label = 0; label < classes.size(); ++label) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(root / classes[label])) {
      if (e.is_regular_file()) files.push_back(e.path().filename().string());
    }
    std::sort(files.begin(), files.end());
    std::size_t count = 0;
    for (const std::string& f : files) {
      const std::string rel = classes[label] + "/" + f;
      if (fs::path(f).extension() != ".ppm") {
        result.skipped.push_back(rel + ": not a .ppm file");
        continue;
      }
      try {
        Tensor img = read_ppm(root / classes[label] / f);
        result.samples.push_back({std::move(img), label, rel});
        result.manifest.entries.push_back({rel, label, Split::kTrain});
        ++count;
      } catch (const PpmError& ex) {
        result.skipped.push_back(rel + ": " + ex.what());
      }
    }
    if (count == 0) {
      throw DatasetError("class " + classes[label] + " has no images");
    }
    result.manifest.class_counts.push_back(count);
  }
  return result;
}

void split(DatasetManifest& manifest, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in (0, 1)");
  }
  manifest.seed = seed;
  for (std::size_t label = 0; label < manifest.class_names.size(); ++label) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
      if (manifest.entries[i].label == label) members.push_back(i);
    }
    const std::size_t n = members.size();
    const auto floor_count = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * val_fraction + 1e-9));
    const std::size_t val = std::max<std::size_t>(1, floor_count);
    if (val >= n) {
      throw DatasetError("class " + manifest.class_names[label] + " has " +
                         std::to_string(n) +
                         " samples, too few to split off " +
                         std::to_string(val) + " for validation");
    }
    Rng rng{tag(Stream::kSplit), seed, label};
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < n; ++k) {
      manifest.entries[members[k]].split = k < val ? Split::kVal : Split::kTrain;
    }
  }
}

void write_manifest(const fs::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  for (const ManifestEntry& e : manifest.entries) {
    out << e.path << '\t' << e.label << '\t' << split_name(e.split) << '\n';
  }
  if (!out) throw DatasetError("cannot write " + path.string());
}

void apply_manifest(const fs::path& path, DatasetManifest& manifest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::map<std::string, std::pair<std::size_t, Split>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string rel;
    std::string label;
    std::string which;
    if (!std::getline(ss, rel, '\t') || !std::getline(ss, label, '\t') ||
        !std::getline(ss, which)) {
      throw DatasetError("malformed manifest line: " + line);
    }
    if (which != "train" && which != "val") {
      throw DatasetError("unknown split '" + which + "' in manifest");
    }
    rows[rel] = {std::stoul(label), which == "val" ? Split::kVal : Split::kTrain};
  }
  if (rows.size() != manifest.entries.size()) {
    throw DatasetError("manifest lists " + std::to_string(rows.size()) +
                       " samples, dataset has " +
                       std::to_string(manifest.entries.size()));
  }
  for (ManifestEntry& e : manifest.entries) {
    auto it = rows.find(e.path);
    if (it == rows.end() || it->second.first != e.label) {
      throw DatasetError("manifest disagrees with dataset at " + e.path);
    }
    e.split = it->second.second;
  }
}

std::vector<LabeledImage> select_split(const ScanResult& scan, Split which) {
  std::vector<LabeledImage> out;
  for (std::size_t i = 0; i < scan.samples.size(); ++i) {
    if (scan.manifest.entries[i].split == which) out.push_back(scan.samples[i]);
  }
  return out;
}

// ---------------------------------------------------------------- synthetic

namespace {

enum class Primitive { kDisk, kRing, kBar, kChevron, kTriangle };

struct Shape2D {
  Primitive kind;
  double cx, cy, radius, angle;
  double rgb[3];
};

// (x, y) are in the primitive's own frame, scaled so its radius is 1.
bool inside(Primitive kind, double x, double y) {
  switch (kind) {
    case Primitive::kDisk:
      return x * x + y * y <= 1.0;
    case Primitive::kRing: {
      const double r2 = x * x + y * y;
      return r2 <= 1.0 && r2 >= 0.16;
    }
    case Primitive::kBar:
      return std::abs(x) <= 1.0 && std::abs(y) <= 0.5;
    case Primitive::kChevron:
      return std::abs(x) <= 0.9 && std::abs(y + 0.3 - 0.8 * std::abs(x)) <= 0.35;
    case Primitive::kTriangle: {
      const double s3 = std::numbers::sqrt3;
      return y >= -0.5 && s3 * x + y <= 1.0 && -s3 * x + y <= 1.0;
    }
  }
  return false;
}

}  // namespace

Tensor render_emblem(std::size_t class_index, std::size_t size,
                     std::uint64_t seed) {
  Rng rng{tag(Stream::kEmblem), seed, class_index};
  // A near-black field keeps the zero-filled corners of rotated samples
  // close to the template; compact, central primitives limit how far
  // rotation moves their edges.
  double background[3];
  for (double& c : background) c = rng.uniform(0.0, 0.05);
  const std::size_t count = 2 + rng.below(3);
  std::vector<Shape2D> shapes;
  const double s = static_cast<double>(size);
  for (std::size_t i = 0; i < count; ++i) {
    Shape2D sh{};
    sh.kind = static_cast<Primitive>(rng.below(5));
    sh.cx = rng.uniform(0.4, 0.6) * s;
    sh.cy = rng.uniform(0.4, 0.6) * s;
    sh.radius = rng.uniform(0.2, 0.4) * s;
    sh.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (double& c : sh.rgb) c = rng.uniform(0.0, 1.0);
    shapes.push_back(sh);
  }

  // 2x2 supersampling; later primitives paint over earlier ones.
  Tensor img({size, size, 3});
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      double acc[3] = {0, 0, 0};
      for (int sy = 0; sy < 2; ++sy) {
        for (int sx = 0; sx < 2; ++sx) {
          const double px = static_cast<double>(x) + 0.25 + 0.5 * sx;
          const double py = static_cast<double>(y) + 0.25 + 0.5 * sy;
          const double* colour = background;
          for (const Shape2D& sh : shapes) {
            const double dx = (px - sh.cx) / sh.radius;
            const double dy = (py - sh.cy) / sh.radius;
            const double c = std::cos(sh.angle);
            const double sn = std::sin(sh.angle);
            if (inside(sh.kind, c * dx + sn * dy, -sn * dx + c * dy)) {
              colour = sh.rgb;
            }
          }
          for (int ch = 0; ch < 3; ++ch) acc[ch] += colour[ch];
        }
      }
      for (std::size_t ch = 0; ch < 3; ++ch) {
        img[(y * size + x) * 3 + ch] = acc[ch] / 4.0;
      }
    }
  }
  return img;
}

Tensor rotate_image(const Tensor& image, double degrees) {
  const std::size_t h = image.dim(0);
  const std::size_t w = image.dim(1);
  const double theta = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const long hh = static_cast<long>(h);
  const long ww = static_cast<long>(w);
  auto pixel = [&](long y, long x, std::size_t ch) {
    if (y < 0 || x < 0 || y >= hh || x >= ww) return 0.0;
    return image[(static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)) * 3 + ch];
  };
  Tensor out({h, w, 3});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Inverse map: output pixel samples the source rotated by -theta.
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      const double sx = c * dx + s * dy + cx;
      const double sy = -s * dx + c * dy + cy;
      const double fx = std::floor(sx);
      const double fy = std::floor(sy);
      const long x0 = static_cast<long>(fx);
      const long y0 = static_cast<long>(fy);
      const double ax = sx - fx;
      const double ay = sy - fy;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        out[(y * w + x) * 3 + ch] =
            (1 - ay) * ((1 - ax) * pixel(y0, x0, ch) + ax * pixel(y0, x0 + 1, ch)) +
            ay * ((1 - ax) * pixel(y0 + 1, x0, ch) + ax * pixel(y0 + 1, x0 + 1, ch));
      }
    }
  }
  return out;
}

Tensor distort(const Tensor& emblem, std::uint64_t seed, std::size_t class_index,
               std::size_t sample_index) {
  Rng rng{tag(Stream::kDistort), seed, class_index, sample_index};
  const double brightness = rng.uniform(0.7, 1.3);
  const double degrees = rng.uniform(-15.0, 15.0);
  Tensor out = rotate_image(emblem, degrees);
  for (double& v : out.data()) {
    v = std::clamp(v * brightness + 0.02 * rng.normal(), 0.0, 1.0);
  }
  return out;
}

DatasetManifest generate_synthetic(const fs::path& out_dir,
                                   const SyntheticOptions& o) {
  if (o.classes < 2 || o.per_class < 2 || o.size < 32) {
    throw std::invalid_argument(
        "synthetic dataset needs >= 2 classes, >= 2 per class, size >= 32");
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DatasetError("cannot create " + out_dir.string() + ": " + ec.message());

  auto digits = [](std::size_t n) {
    std::size_t d = 1;
    while (n >= 10) {
      n /= 10;
      ++d;
    }
    return d;
  };
  auto padded = [](std::size_t v, std::size_t width) {
    std::string s = std::to_string(v);
    return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
  };
  const std::size_t class_width = std::max<std::size_t>(2, digits(o.classes - 1));
  const std::size_t file_width = std::max<std::size_t>(4, digits(o.per_class - 1));

  DatasetManifest manifest;
  for (std::size_t k = 0; k < o.classes; ++k) {
    const std::string name = "class_" + padded(k, class_width);
    manifest.class_names.push_back(name);
    manifest.class_counts.push_back(o.per_class);
    fs::create_directories(out_dir / name, ec);
    if (ec) throw DatasetError("cannot create " + (out_dir / name).string());
    const Tensor emblem = render_emblem(k, o.size, o.seed);
    for (std::size_t i = 0; i < o.per_class; ++i) {
      const std::string file = padded(i, file_width) + ".ppm";
      write_ppm(out_dir / name / file, distort(emblem, o.seed, k, i));
      manifest.entries.push_back({name + "/" + file, k, Split::kTrain});
    }
  }
  split(manifest, o.val_fraction, o.seed);
  write_manifest(out_dir / "manifest.txt", manifest);
  return manifest;
}

}  // namespace swinlite
