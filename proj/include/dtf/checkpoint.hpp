#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtf/tensor.hpp"

namespace dtf {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using ParameterList = std::vector<NamedTensor>;

// Binary checkpoint layout (all integers little-endian):
//
//   bytes 0..3   magic "DTFK"
//   byte  4      format version (currently 1)
//   u32          record count
//   per record:
//     u32        name length in bytes, followed by the UTF-8 name
//     u32        rank, followed by rank u64 extents
//     f64 x n    values in row-major order, n = product of extents
inline constexpr std::uint8_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const ParameterList& params);
ParameterList decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterList& params);

// Copies checkpoint values into existing parameters. Names, order and shapes
// must match exactly.
void load_checkpoint_into(const std::filesystem::path& path, const ParameterList& params);
void assign_values(const ParameterList& source, const ParameterList& target);

// Stable within a build; used for bit-identity checks of parameter sets.
std::size_t checkpoint_hash(const ParameterList& params);

std::size_t total_scalars(const ParameterList& params);

}  // namespace dtf
