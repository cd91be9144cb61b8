#pragma once

// Little-endian primitives shared by the dataset and index snapshot formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mtsq/core.hpp"

namespace mtsq::io {

template <typename UInt>
void write_uint(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt read_uint(std::istream& in, const char* field) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError(std::string("truncated input while reading ") + field);
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void write_u8(std::ostream& out, std::uint8_t v) { write_uint<std::uint8_t>(out, v); }
inline void write_u16(std::ostream& out, std::uint16_t v) { write_uint<std::uint16_t>(out, v); }
inline void write_u32(std::ostream& out, std::uint32_t v) { write_uint<std::uint32_t>(out, v); }
inline void write_u64(std::ostream& out, std::uint64_t v) { write_uint<std::uint64_t>(out, v); }
inline void write_f64(std::ostream& out, double v) {
  write_uint<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint8_t read_u8(std::istream& in, const char* f) { return read_uint<std::uint8_t>(in, f); }
inline std::uint16_t read_u16(std::istream& in, const char* f) { return read_uint<std::uint16_t>(in, f); }
inline std::uint32_t read_u32(std::istream& in, const char* f) { return read_uint<std::uint32_t>(in, f); }
inline std::uint64_t read_u64(std::istream& in, const char* f) { return read_uint<std::uint64_t>(in, f); }
inline double read_f64(std::istream& in, const char* f) {
  return std::bit_cast<double>(read_uint<std::uint64_t>(in, f));
}

inline void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
  char buf[4] = {};
  in.read(buf, 4);
  if (!in || std::memcmp(buf, magic, 4) != 0) {
    throw FormatError(std::string(what) + ": bad magic (expected '" + magic + "')");
  }
}

// Guards length prefixes read from untrusted files.
inline std::uint64_t read_count(std::istream& in, const char* field, std::uint64_t limit) {
  const std::uint64_t v = read_u64(in, field);
  if (v > limit) throw FormatError(std::string("implausible value for ") + field);
  return v;
}

}  // namespace mtsq::io
