#include "eventnet/binary_io.hpp"

#include <string>

namespace eventnet::io {

void write_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), std::streamsize(magic.size())); }

void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), std::streamsize(got.size()));
  if (!in || got != magic) throw FormatError("bad magic: expected '" + std::string(magic) + "'");
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace eventnet::io
