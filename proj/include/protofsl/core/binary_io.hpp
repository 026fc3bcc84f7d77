#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "protofsl/core/error.hpp"

namespace protofsl::bin {

// Little-endian scalar encoding independent of host byte order.
template <typename U>
void put_le(std::ostream& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& in) {
  static_assert(std::is_unsigned_v<U>);
  std::array<unsigned char, sizeof(U)> buf{};
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) throw RuntimeFailure("unexpected end of binary stream");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
  return v;
}

inline void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }
inline std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
inline void put_u16(std::ostream& out, std::uint16_t v) { put_le(out, v); }
inline std::uint16_t get_u16(std::istream& in) { return get_le<std::uint16_t>(in); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
inline std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }

inline void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_le<std::uint32_t>(in)); }

inline void put_magic(std::ostream& out, const std::string& magic) { out.write(magic.data(), magic.size()); }

inline void expect_magic(std::istream& in, const std::string& magic, const std::string& what) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), got.size()) || got != magic) throw RuntimeFailure(what + ": bad magic, expected " + magic);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), s.size());
}

inline std::string get_string(std::istream& in) {
  const auto n = get_u32(in);
  std::string s(n, '\0');
  if (!in.read(s.data(), n)) throw RuntimeFailure("unexpected end of binary stream");
  return s;
}

}  // namespace protofsl::bin
