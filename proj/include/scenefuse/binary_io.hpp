#pragma once

// Little-endian primitives shared by the on-disk formats (feature stores and
// trained models). Values are assembled byte by byte so files are identical
// regardless of host endianness.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace scenefuse::binary {

void write_u8(std::ostream& out, std::uint8_t value);
void write_u32(std::ostream& out, std::uint32_t value);
void write_u64(std::ostream& out, std::uint64_t value);
void write_f32(std::ostream& out, float value);
void write_f64(std::ostream& out, double value);
// u32 length prefix followed by raw bytes.
void write_string(std::ostream& out, std::string_view value);

// Readers throw Error{Truncated} when the stream ends early; `what` names the
// field being read.
std::uint8_t read_u8(std::istream& in, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);
float read_f32(std::istream& in, std::string_view what);
double read_f64(std::istream& in, std::string_view what);
std::string read_string(std::istream& in, std::string_view what, std::uint32_t max_length = 1u << 20);

}  // namespace scenefuse::binary
