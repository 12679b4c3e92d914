#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "network.hpp"

namespace slc::io {

/// SLCW layout, all integers little-endian:
///   "SLCW" u32 version=1 u32 count
///   per tensor: u16 name_len, name bytes, u8 ndim, u64 dims[ndim], f32 data
inline constexpr std::uint32_t kWeightsVersion = 1;

void write_weights(const nn::Weights& weights, std::ostream& out);
/// `size` is the number of bytes available in `in`; it bounds allocations so
/// a corrupt header cannot request more memory than the file holds. Throws
/// Format on bad magic, version or truncation and never returns a partial
/// result.
nn::Weights read_weights(std::istream& in, std::uint64_t size);

std::string encode_weights(const nn::Weights& weights);
nn::Weights decode_weights(const std::string& bytes);

void save_weights(const nn::Weights& weights, const std::filesystem::path& path);
nn::Weights load_weights(const std::filesystem::path& path);

}  // namespace slc::io
