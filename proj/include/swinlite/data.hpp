#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "swinlite/tensor.hpp"

namespace swinlite {

enum class PpmErrorKind { kBadMagic, kBadMaxval, kBadHeader, kTruncated };

class PpmError : public std::runtime_error {
 public:
  PpmError(PpmErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  PpmErrorKind kind() const { return kind_; }

 private:
  PpmErrorKind kind_;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary P6 with maxval 255 → [H, W, 3] in [0, 1]. Header tokens may be
/// separated by any whitespace and interleaved with '#' comments.
Tensor decode_ppm(std::span<const std::uint8_t> bytes);
/// [H, W, 3] in [0, 1] → canonical "P6\n<W> <H>\n255\n" + bytes. Values are
/// rounded to the nearest of the 256 levels.
std::vector<std::uint8_t> encode_ppm(const Tensor& image);

Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& image);

struct LabeledImage {
  Tensor image;
  std::size_t label = 0;
  std::string source;
};

enum class Split { kTrain, kVal };

const char* split_name(Split s);

struct ManifestEntry {
  std::string path;  // relative to the dataset root, '/' separated
  std::size_t label = 0;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  /// Sorted; position defines the label.
  std::vector<std::string> class_names;
  std::vector<std::size_t> class_counts;
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;
};

struct ScanResult {
  DatasetManifest manifest;
  /// Parallel to manifest.entries.
  std::vector<LabeledImage> samples;
  /// Files that were not decodable PPMs, with the reason.
  std::vector<std::string> skipped;
};

/// Reads root/<class>/*.ppm. Classes are the sorted subdirectory names and
/// files within a class are taken in sorted order. Everything starts in the
/// training split.
ScanResult scan_dataset(const std::filesystem::path& root);

/// Stratified split: per class, floor(n * val_fraction) samples (at least
/// one) go to validation, chosen by a seeded shuffle.
void split(DatasetManifest& manifest, double val_fraction, std::uint64_t seed);

/// manifest.txt: one "path\tlabel\tsplit" line per sample.
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);
/// Reads split assignments from manifest.txt into a scanned manifest.
/// Throws DatasetError if the file does not describe the same samples.
void apply_manifest(const std::filesystem::path& path, DatasetManifest& manifest);

/// The samples of one split, in manifest order.
std::vector<LabeledImage> select_split(const ScanResult& scan, Split which);

struct SyntheticOptions {
  std::size_t classes = 10;
  std::size_t per_class = 120;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  double val_fraction = 0.2;
};

/// Undistorted emblem of one class: a fixed composition of 2-4 primitives
/// (disk, ring, bar, chevron, triangle) drawn from the class seed.
Tensor render_emblem(std::size_t class_index, std::size_t size,
                     std::uint64_t seed);

/// Per-sample distortion: brightness scale U[0.7, 1.3], rotation U[-15°, 15°]
/// about the centre (bilinear, zero fill), Gaussian noise σ = 0.02, clamp to
/// [0, 1]. Deterministic in (seed, class, index).
Tensor distort(const Tensor& emblem, std::uint64_t seed,
               std::size_t class_index, std::size_t sample_index);

/// Writes out_dir/class_XX/NNNN.ppm for every sample and a manifest.txt with
/// a stratified split. Returns the manifest.
DatasetManifest generate_synthetic(const std::filesystem::path& out_dir,
                                   const SyntheticOptions& options);

/// Rotates an [H, W, 3] image by degrees about its centre with bilinear
/// sampling; pixels that fall outside the source become 0.
Tensor rotate_image(const Tensor& image, double degrees);

}  // namespace swinlite
