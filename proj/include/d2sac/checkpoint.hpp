#pragma once

#include <filesystem>
#include <vector>

#include "d2sac/nn.hpp"

namespace d2sac::nn {

// Flat binary network snapshot, little-endian throughout:
//   "AGOD" | u32 version | u32 layer count
//   per layer: u32 in_dim | u32 out_dim | u32 activation tag
//              f64 weights (row-major, out x in) | f64 biases (out)
// Round-trips bit-exactly.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const std::vector<const DenseLayer*>& layers);
std::vector<DenseLayer> load_checkpoint(const std::filesystem::path& path);

}  // namespace d2sac::nn
