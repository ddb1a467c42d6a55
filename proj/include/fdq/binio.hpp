#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "fdq/error.hpp"

namespace fdq {

// Little-endian binary writer. Byte order is encoded explicitly so the
// containers are portable regardless of host endianness.
class BinWriter {
 public:
  explicit BinWriter(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw FormatError("cannot open '" + path + "' for writing", 0);
  }

  void u8(std::uint8_t v) { put(&v, 1); }
  void u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    put(b, 4);
  }
  void u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    put(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void magic(const char tag[5]) { put(reinterpret_cast<const std::uint8_t*>(tag), 4); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    put(reinterpret_cast<const std::uint8_t*>(s.data()), s.size());
  }

  std::size_t offset() const { return offset_; }

  void close() {
    out_.close();
    if (!out_) throw FormatError("write to '" + path_ + "' failed", offset_);
  }

 private:
  void put(const std::uint8_t* p, std::size_t len) {
    out_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(len));
    if (!out_) throw FormatError("write to '" + path_ + "' failed", offset_);
    offset_ += len;
  }

  std::string path_;
  std::ofstream out_;
  std::size_t offset_ = 0;
};

// Little-endian binary reader. Truncation and tag mismatches raise a
// FormatError carrying the offending byte offset.
class BinReader {
 public:
  explicit BinReader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open '" + path + "' for reading", 0);
  }

  std::uint8_t u8() {
    std::uint8_t b;
    get(&b, 1);
    return b;
  }
  std::uint32_t u32() {
    std::uint8_t b[4];
    get(b, 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint8_t b[8];
    get(b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }

  void expect_magic(const char tag[5]) {
    const std::size_t at = offset_;
    std::uint8_t b[4];
    get(b, 4);
    for (int i = 0; i < 4; ++i) {
      if (b[i] != static_cast<std::uint8_t>(tag[i])) {
        throw FormatError("bad magic in '" + path_ + "', expected \"" + tag + "\"", at);
      }
    }
  }

  std::string str() {
    const std::uint32_t len = u32();
    std::string s(len, '\0');
    if (len > 0) get(reinterpret_cast<std::uint8_t*>(s.data()), len);
    return s;
  }

  std::size_t offset() const { return offset_; }

 private:
  void get(std::uint8_t* p, std::size_t len) {
    in_.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in_.gcount()) != len) {
      throw FormatError("unexpected end of '" + path_ + "'", offset_);
    }
    offset_ += len;
  }

  std::string path_;
  std::ifstream in_;
  std::size_t offset_ = 0;
};

}  // namespace fdq
