#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "graphleaf/params.hpp"

namespace graphleaf {

/// Parameter checkpoint, little-endian:
///
///   "GLWT" | u16 version=1
///   u32 metadata length + UTF-8 JSON (model config, class names, ...)
///   u32 parameter count, then per parameter:
///     u32 name length + name | u32 rank | rank * u32 dims
///     f32 values | f32 Adam first moment | f32 Adam second moment
///     u64 Adam step (identical for every record)
inline constexpr char kCheckpointMagic[4] = {'G', 'L', 'W', 'T'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ParamSet<float> params;
  std::string metadata_json;
};

std::vector<std::uint8_t> encode_checkpoint(const ParamSet<float>& params, const std::string& metadata_json);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint(const std::filesystem::path& path, const ParamSet<float>& params,
                      const std::string& metadata_json);
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace graphleaf
