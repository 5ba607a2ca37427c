#pragma once

#include <stdexcept>
#include <string>

namespace spectral_forge {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& w) : std::runtime_error(w) {}
};

/// Writes via a sibling temp file and rename, so a failed or interrupted
/// write never leaves a truncated file at the target path.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace spectral_forge
