#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "phemonet/network.hpp"

namespace phemonet::network {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Serializes a model to the "PHEM" checkpoint layout:
///
///   magic "PHEM", u16 version
///   config: f64 dropout, f64 bn momentum, f64 bn eps, u8 block order, u32 fusion n,
///           u32 fusion layers, u32 classes, u8 scheme length + scheme bytes
///   u8 modality count; per modality: u8 id, u32 n, u32 channels, u32 samples, u32 hidden
///   u32 layer count; per layer: u8 layer id, u32 n, u32 d_in, u32 d_out  (classifier: n = 0)
///   f64 payload in parameter_groups() order
///
/// All integers and floats little-endian.
std::vector<std::uint8_t> encode_checkpoint(const ModelParams& model);

/// Inverse of encode_checkpoint. Throws FormatError with the failing byte offset on bad magic,
/// unsupported version, inconsistent shape table, truncation or trailing bytes.
ModelParams decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const ModelParams& model, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace phemonet::network
