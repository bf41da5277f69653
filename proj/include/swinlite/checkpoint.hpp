#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "swinlite/model.hpp"

namespace swinlite {

// Checkpoint layout (all integers little-endian):
//   "SWL1" | u32 version (1) | u32 config length | config text
//   | u32 tensor count | per tensor: u16 name length, name, u8 dtype
//   (0 = binary32, 1 = binary64), u8 rank, u32 extents, raw row-major data
// The config text is key=value lines in a fixed key order.

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class CheckpointErrorKind {
  kBadMagic,
  kBadVersion,
  kTruncated,
  kShapeMismatch,
  kBadConfig,
  kIo,
};

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  CheckpointErrorKind kind() const { return kind_; }

 private:
  CheckpointErrorKind kind_;
};

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1 };

struct TensorRecord {
  std::string name;
  DType dtype = DType::kFloat64;
  Tensor value;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

struct CheckpointFile {
  ConfigEntries config;
  std::vector<TensorRecord> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointFile& file);
CheckpointFile decode_checkpoint(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path,
                 std::span<const std::uint8_t> bytes);

ConfigEntries config_entries(const SwinConfig& config);
/// Reads the architecture keys; other keys are ignored.
SwinConfig config_from_entries(const ConfigEntries& entries);
/// Value of key, or throws CheckpointError(kBadConfig).
const std::string& config_value(const ConfigEntries& entries,
                                const std::string& key);

/// Extra state stored alongside the model (training progress, optimizer
/// moments). Extra keys follow the architecture keys; extra tensors follow the
/// model parameters.
struct CheckpointExtras {
  ConfigEntries config;
  std::vector<TensorRecord> tensors;
};

void save_checkpoint(const SwinModel& model, const std::filesystem::path& path,
                     const CheckpointExtras& extras = {});

struct LoadedCheckpoint {
  SwinModel model;
  CheckpointExtras extras;
};

/// Rebuilds the model from the config block and restores every parameter.
/// The leading tensor records must be the model parameters in canonical
/// order with matching shapes.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace swinlite
