#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "swinlite/data.hpp"

namespace swinlite {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Dispatches one verb. args excludes the program name, e.g.
/// {"train", "--data", "d", ...}. Lines that depend on wall-clock time are
/// suffixed with "(timing)".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Scans root and assigns splits from root/manifest.txt when present,
/// otherwise by a fresh stratified split.
ScanResult load_dataset(const std::filesystem::path& root, double val_fraction,
                        std::uint64_t seed);

}  // namespace swinlite
