#pragma once

// Little-endian primitive readers/writers shared by the binary file formats.

#include "eventnet/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string_view>
#include <type_traits>

namespace eventnet::io {

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = char((bits >> (8 * i)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T read_le(std::istream& in) {
  static_assert(std::is_arithmetic_v<T>);
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("unexpected end of file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= U(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

void write_magic(std::ostream& out, std::string_view magic);
/// Throws FormatError when the next four bytes differ from `magic`.
void expect_magic(std::istream& in, std::string_view magic);

/// FNV-1a over a byte range, chained through `seed`.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace eventnet::io
