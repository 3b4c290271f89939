#pragma once

// Little-endian primitives shared by the checkpoint and video sidecar formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "vgnmn/tensor.hpp"

namespace vgnmn::binio {

class Writer {
 public:
  void bytes(std::string_view b) { out_.append(b); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  /// rank, dims, float32 values
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) u32(static_cast<std::uint32_t>(d));
    for (double v : t.data()) f32(static_cast<float>(v));
  }
  const std::string& data() const { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto b = data_.substr(pos_, n);
    pos_ += n;
    return b;
  }
  std::uint32_t u32() {
    auto b = bytes(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    auto n = u32();
    return std::string(bytes(n));
  }
  Tensor tensor(std::size_t max_rank = 8) {
    const auto rank = u32();
    if (rank == 0 || rank > max_rank) fail("tensor rank " + std::to_string(rank) + " out of range");
    Shape shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = u32();
      n *= d;
    }
    if (n > (data_.size() - pos_) / 4) fail("truncated tensor block");
    std::vector<double> values(n);
    for (auto& v : values) v = f32();
    return Tensor(std::move(shape), std::move(values));
  }
  bool at_end() const { return pos_ == data_.size(); }
  std::size_t position() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(what_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of data");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
  std::string what_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view data);

}  // namespace vgnmn::binio
