#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mu {

/// Vector file layout (all integers little-endian):
///   "MUCK" | u32 format version | u32 slice | u32 batch | u64 length |
///   length x f32 | u32 CRC32 of every preceding byte
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointBatch = 0xFFFFFFFFu;

struct VectorFile {
  std::uint32_t slice = 0;
  std::uint32_t batch = 0;
  std::vector<float> values;
  std::uint32_t crc32 = 0;
};

/// Serialized bytes of a vector file.
std::vector<unsigned char> encode_vector_file(std::uint32_t slice, std::uint32_t batch, std::span<const float> values);

/// Parses and validates bytes produced by encode_vector_file. `name` labels
/// the error messages.
VectorFile decode_vector_file(std::span<const unsigned char> bytes, const std::string& name);

/// Writes to a sibling temp file, then renames over `path`. Returns the CRC32
/// trailer that was written.
std::uint32_t write_vector_file(const std::filesystem::path& path, std::uint32_t slice, std::uint32_t batch,
                                std::span<const float> values);

VectorFile read_vector_file(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const unsigned char> bytes);

/// Atomically replaces `path` with `text`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace mu
