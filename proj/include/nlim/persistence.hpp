#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nlim/models.hpp"

namespace nlim {

inline constexpr std::uint32_t kModelFormatVersion = 1;

// Layout (all integers little-endian):
//   "NLIM" | u32 version | header | payload | u32 CRC-32(header + payload)
// The header is compact JSON terminated by a single '\n'; the payload holds
// every tensor as float32, concatenated in the order of the header's index.
// See docs/model-format.md.
std::vector<std::uint8_t> serialize_model(const ParamStore& params, const ArchSpec& arch);

struct LoadedModel {
  ParamStore params;
  ArchSpec arch;
};

LoadedModel deserialize_model(std::span<const std::uint8_t> bytes);

// Returns the number of bytes written.
std::size_t save_model(const ParamStore& params, const ArchSpec& arch, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Parameters as they will be after a save/load round trip.
ParamStore round_to_float(const ParamStore& params);

}  // namespace nlim
