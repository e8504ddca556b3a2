#pragma once

#include "stss/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace stss::num {

// Little-endian writer/reader over a byte buffer.
class ByteWriter {
public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  template <typename T>
  void le(T v) {
    static_assert(std::is_arithmetic_v<T>);
    if constexpr (std::endian::native == std::endian::big) v = swap(v);
    bytes(&v, sizeof v);
  }
  void floats(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      bytes(values.data(), values.size() * sizeof(float));
    } else {
      for (float v : values) le(v);
    }
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }

  template <typename T>
  static T swap(T v) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof v);
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof v);
    return v;
  }

private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
  ByteReader(std::span<const std::uint8_t> data, std::string what) : data_(data), what_(std::move(what)) {}

  void bytes(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) throw IoError(what_ + ": truncated data");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  template <typename T>
  T le() {
    T v{};
    bytes(&v, sizeof v);
    if constexpr (std::endian::native == std::endian::big) v = ByteWriter::swap(v);
    return v;
  }
  void floats(std::span<float> out) {
    bytes(out.data(), out.size() * sizeof(float));
    if constexpr (std::endian::native == std::endian::big)
      for (auto& v : out) v = ByteWriter::swap(v);
  }
  bool at_end() const { return pos_ == data_.size(); }

private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

} // namespace stss::num
