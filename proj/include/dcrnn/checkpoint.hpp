#pragma once

#include <filesystem>
#include <vector>

#include "dcrnn/autodiff.hpp"

namespace dcrnn {

/// Checkpoint file: versioned binary header, then per parameter the name,
/// shape, step count, and raw little-endian 64-bit values for the value and
/// both Adam moments.
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<const ParamTensor*>& params);

struct CheckpointEntry {
  std::string name;
  DenseMatrix value, m, v;
  std::uint64_t step_count = 0;
};

std::vector<CheckpointEntry> load_checkpoint(const std::filesystem::path& path);

/// Restores entries into matching parameters (by name, in order). Throws with
/// a shape diff if names or shapes disagree.
void restore_checkpoint(const std::vector<CheckpointEntry>& entries,
                        const std::vector<ParamTensor*>& params);

}  // namespace dcrnn
