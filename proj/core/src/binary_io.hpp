#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "flim/errors.hpp"

namespace flim::detail {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

class BinaryWriter {
 public:
  void magic(std::string_view tag) {
    char buf[8] = {};
    std::memcpy(buf, tag.data(), std::min<std::size_t>(tag.size(), 8));
    bytes_.insert(bytes_.end(), buf, buf + 8);
  }
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f32(float v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void f32s(std::span<const float> v) { raw(v.data(), v.size_bytes()); }
  void f64s(std::span<const double> v) { raw(v.data(), v.size_bytes()); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void blob(std::span<const std::uint8_t> b) {
    u64(b.size());
    raw(b.data(), b.size());
  }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes_;
};

class BinaryReader {
 public:
  BinaryReader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}

  void expect_magic(std::string_view tag) {
    char buf[8] = {};
    std::memcpy(buf, tag.data(), std::min<std::size_t>(tag.size(), 8));
    need(8);
    if (std::memcmp(buf, bytes_.data() + pos_, 8) != 0) throw FormatError(what_ + ": bad magic, expected " + std::string(tag));
    pos_ += 8;
  }
  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  float f32() { return scalar<float>(); }
  double f64() { return scalar<double>(); }
  std::vector<float> f32s(std::size_t n) { return array<float>(n); }
  std::vector<double> f64s(std::size_t n) { return array<double>(n); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::span<const std::uint8_t> blob() {
    const auto n = u64();
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(what_ + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(what_ + ": truncated");
  }
  template <typename T>
  T scalar() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  template <typename T>
  std::vector<T> array(std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(T)) throw FormatError(what_ + ": truncated");
    std::vector<T> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace flim::detail
