#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "ftsim/errors.hpp"

namespace ftsim {

/// Little helpers for bit-exact blob (de)serialization.
class ByteWriter {
 public:
  void put_u64(std::uint64_t v) { put_raw(&v, sizeof v); }
  void put_i64(std::int64_t v) { put_raw(&v, sizeof v); }
  void put_f64(double v) { put_raw(&v, sizeof v); }
  void put_f64s(std::span<const double> vs) {
    put_u64(vs.size());
    put_raw(vs.data(), vs.size() * sizeof(double));
  }
  std::vector<std::uint8_t> take() { return std::move(buf_); }

 private:
  void put_raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<std::uint8_t> buf_;
};

/// Owns the bytes it decodes, so readers over freshly received payloads
/// cannot dangle.
class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}
  explicit ByteReader(std::span<const std::uint8_t> bytes)
      : bytes_(bytes.begin(), bytes.end()) {}

  std::uint64_t get_u64() { std::uint64_t v; get_raw(&v, sizeof v); return v; }
  std::int64_t get_i64() { std::int64_t v; get_raw(&v, sizeof v); return v; }
  double get_f64() { double v; get_raw(&v, sizeof v); return v; }
  std::vector<double> get_f64s() {
    const std::uint64_t n = get_u64();
    std::vector<double> out(n);
    get_raw(out.data(), n * sizeof(double));
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void get_raw(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) throw UsageError("blob truncated");
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace ftsim
