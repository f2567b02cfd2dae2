#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace autoplace::binary {

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
bool read_le(std::istream& in, T& value) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) return false;
  if constexpr (std::endian::native == std::endian::big)
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  std::memcpy(&value, bytes, sizeof(T));
  return true;
}

/// Magic, u32 length, then the header text.
inline void write_header(std::ostream& out, const char (&magic)[5], const std::string& header) {
  out.write(magic, 4);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
}

inline bool read_header(std::istream& in, const char (&magic)[5], std::string& header) {
  char got[4];
  if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0) return false;
  std::uint32_t len = 0;
  if (!read_le(in, len)) return false;
  header.resize(len);
  return static_cast<bool>(in.read(header.data(), len));
}

}  // namespace autoplace::binary
