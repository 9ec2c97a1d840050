#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pjx/nn.hpp"

namespace pjx {

// Binary parameter file:
//   "PJXT" | version:u32 | records...
//   record = name_len:u32 | name bytes | rank:u32 | dims:u64[rank] | values:f64[prod(dims)]
// All integers and doubles little-endian. Records run to end of file, in
// ParameterSet order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

std::vector<char> encode_checkpoint(const ParameterSet& params);
std::vector<NamedTensor> decode_checkpoint(const std::vector<char>& bytes);

void save_checkpoint(const std::filesystem::path& path, const ParameterSet& params);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

// Copies checkpoint values into `params`. Throws CheckpointError on version
// mismatch, missing or extra names, or shape mismatch.
void load_checkpoint(const std::filesystem::path& path, ParameterSet& params);
void assign_parameters(const std::vector<NamedTensor>& tensors, ParameterSet& params);

}  // namespace pjx
