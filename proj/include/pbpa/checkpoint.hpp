#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pbpa/tensor.hpp"

namespace pbpa {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Bit-exact checkpoint container: magic "PBPA", u32 LE version, u32 LE tensor
// count, then per tensor u16 LE name length + UTF-8 name, u8 rank, u32 LE
// dims, float64 LE payload.
void save_checkpoint(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

}  // namespace pbpa
