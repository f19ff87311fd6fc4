#pragma once

// Little-endian binary helpers shared by the file formats (.flo, FDF1, CPV1, THT1).

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "sflow/error.hpp"

namespace sflow {

class BinaryReader {
 public:
  BinaryReader(std::istream& in, std::string path) : in_(in), path_(std::move(path)) {}

  std::uint32_t u32() {
    unsigned char b[4];
    in_.read(reinterpret_cast<char*>(b), 4);
    if (in_.gcount() != 4) throw DataError(path_ + ": truncated payload");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() { return std::bit_cast<float>(u32()); }

  std::string magic4() {
    char b[4];
    in_.read(b, 4);
    if (in_.gcount() != 4) throw DataError(path_ + ": truncated header");
    return std::string(b, 4);
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::string path_;
};

class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}

  void u32(std::uint32_t x) {
    const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                                static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    out_.write(reinterpret_cast<const char*>(b), 4);
  }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void f32(float x) { u32(std::bit_cast<std::uint32_t>(x)); }
  void magic4(const char* m) { out_.write(m, 4); }

 private:
  std::ostream& out_;
};

}  // namespace sflow
