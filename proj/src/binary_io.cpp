#include "scenefuse/binary_io.hpp"

#include <array>
#include <bit>

#include "scenefuse/error.hpp"

namespace scenefuse::binary {
namespace {

template <typename UInt>
void write_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt read_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorKind::Truncated, "truncated while reading " + std::string(what));
  }
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(bytes[i]) << (8 * i);
  }
  return value;
}

}  // namespace

void write_u8(std::ostream& out, std::uint8_t value) { write_le(out, value); }
void write_u32(std::ostream& out, std::uint32_t value) { write_le(out, value); }
void write_u64(std::ostream& out, std::uint64_t value) { write_le(out, value); }
void write_f32(std::ostream& out, float value) { write_le(out, std::bit_cast<std::uint32_t>(value)); }
void write_f64(std::ostream& out, double value) { write_le(out, std::bit_cast<std::uint64_t>(value)); }

void write_string(std::ostream& out, std::string_view value) {
  write_u32(out, static_cast<std::uint32_t>(value.size()));
  out.write(value.data(), static_cast<std::streamsize>(value.size()));
}

std::uint8_t read_u8(std::istream& in, std::string_view what) { return read_le<std::uint8_t>(in, what); }
std::uint32_t read_u32(std::istream& in, std::string_view what) { return read_le<std::uint32_t>(in, what); }
std::uint64_t read_u64(std::istream& in, std::string_view what) { return read_le<std::uint64_t>(in, what); }

float read_f32(std::istream& in, std::string_view what) {
  return std::bit_cast<float>(read_le<std::uint32_t>(in, what));
}

double read_f64(std::istream& in, std::string_view what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(in, what));
}

std::string read_string(std::istream& in, std::string_view what, std::uint32_t max_length) {
  const std::uint32_t length = read_u32(in, what);
  if (length > max_length) {
    throw Error(ErrorKind::Format, std::string(what) + " length " + std::to_string(length) + " exceeds limit");
  }
  std::string value(length, '\0');
  in.read(value.data(), length);
  if (in.gcount() != static_cast<std::streamsize>(length)) {
    throw Error(ErrorKind::Truncated, "truncated while reading " + std::string(what));
  }
  return value;
}

}  // namespace scenefuse::binary
