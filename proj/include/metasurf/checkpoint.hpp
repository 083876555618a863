#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "metasurf/neural.hpp"

namespace metasurf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Network network;
  AdamState adam;
  std::uint64_t seed = 0;  // master seed the network was trained under
};

/// Binary layout, all integers and doubles little-endian:
///   "MCNN" | u32 version | u64 seed | u32 layer count
///   per layer: u8 kind (0 dense, 1 dropout) | u32 in | u32 out | u8 activation | f64 dropout rate
///   per dense layer: weights (row-major, out*in f64) | biases (out f64)
///   adam: f64 lr, beta1, beta2, epsilon | u64 step | per dense layer m_w, v_w, m_b, v_b
///   u32 CRC-32 of everything before it
std::string save_checkpoint(const Network& net, const AdamState& adam, std::uint64_t seed);

/// Throws FormatError (with the failing byte offset) on bad magic, unknown
/// version, truncation, inconsistent topology or checksum mismatch.
Checkpoint load_checkpoint(std::span<const char> bytes);
Checkpoint load_checkpoint(const std::string& bytes);

void write_checkpoint_file(const std::filesystem::path& path, const Network& net,
                           const AdamState& adam, std::uint64_t seed);
Checkpoint read_checkpoint_file(const std::filesystem::path& path);

}  // namespace metasurf
