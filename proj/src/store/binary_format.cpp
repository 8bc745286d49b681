#include "mu/store/binary_format.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mu/error.hpp"

namespace mu {

namespace {

constexpr unsigned char kMagic[4] = {'M', 'U', 'C', 'K'};
constexpr std::size_t kHeaderSize = 4 + 4 + 4 + 4 + 8;

template <typename T>
std::size_t put_le(std::vector<unsigned char>& out, std::size_t offset, T value) {
  for (std::size_t k = 0; k < sizeof(T); ++k) out[offset + k] = static_cast<unsigned char>((value >> (8 * k)) & 0xFF);
  return offset + sizeof(T);
}

template <typename T>
T get_le(std::span<const unsigned char> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) value |= static_cast<T>(bytes[offset + k]) << (8 * k);
  return value;
}

}  // namespace

std::uint32_t crc32_of(std::span<const unsigned char> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in pieces.
  constexpr std::size_t kPiece = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kPiece) {
    const std::size_t len = std::min(kPiece, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(len));
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<unsigned char> encode_vector_file(std::uint32_t slice, std::uint32_t batch, std::span<const float> values) {
  std::vector<unsigned char> out(kHeaderSize + values.size() * 4 + 4);
  std::memcpy(out.data(), kMagic, sizeof(kMagic));
  std::size_t at = put_le<std::uint32_t>(out, 4, kFormatVersion);
  at = put_le<std::uint32_t>(out, at, slice);
  at = put_le<std::uint32_t>(out, at, batch);
  at = put_le<std::uint64_t>(out, at, values.size());
  for (float v : values) at = put_le<std::uint32_t>(out, at, std::bit_cast<std::uint32_t>(v));
  put_le<std::uint32_t>(out, at, crc32_of(std::span(out).first(at)));
  return out;
}

VectorFile decode_vector_file(std::span<const unsigned char> bytes, const std::string& name) {
  if (bytes.size() < kHeaderSize + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorKind::Corruption, name + ": bad magic or truncated header");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kFormatVersion)
    throw Error(ErrorKind::Version, name + ": unsupported format version " + std::to_string(version));
  const auto length = get_le<std::uint64_t>(bytes, 16);
  if (length > (bytes.size() - kHeaderSize - 4) / 4 || bytes.size() != kHeaderSize + length * 4 + 4)
    throw Error(ErrorKind::Corruption, name + ": length field disagrees with file size");
  const auto stored_crc = get_le<std::uint32_t>(bytes, bytes.size() - 4);
  if (crc32_of(bytes.first(bytes.size() - 4)) != stored_crc)
    throw Error(ErrorKind::Corruption, name + ": CRC32 mismatch");

  VectorFile file;
  file.slice = get_le<std::uint32_t>(bytes, 8);
  file.batch = get_le<std::uint32_t>(bytes, 12);
  file.crc32 = stored_crc;
  file.values.resize(length);
  for (std::size_t k = 0; k < length; ++k)
    file.values[k] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, kHeaderSize + 4 * k));
  return file;
}

namespace {

void write_bytes_atomic(const std::filesystem::path& path, const char* data, std::size_t size) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace

std::uint32_t write_vector_file(const std::filesystem::path& path, std::uint32_t slice, std::uint32_t batch,
                                std::span<const float> values) {
  const auto bytes = encode_vector_file(slice, batch, values);
  write_bytes_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
  return get_le<std::uint32_t>(bytes, bytes.size() - 4);
}

VectorFile read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_vector_file(bytes, path.filename().string());
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_bytes_atomic(path, text.data(), text.size());
}

}  // namespace mu
