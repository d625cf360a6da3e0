#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "urm/common/digest.hpp"

namespace urm::ledger {

/// Length-prefixed field writer behind every canonical encoding.
class Encoder {
 public:
  Encoder& bytes(std::string_view data) {
    put_be(data.size(), 4);
    out_.append(data);
    return *this;
  }
  Encoder& u64(std::uint64_t v) {
    put_be(8, 4);
    put_be(v, 8);
    return *this;
  }
  Encoder& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  Encoder& boolean(bool v) {
    put_be(1, 4);
    out_.push_back(v ? '\x01' : '\x00');
    return *this;
  }
  Encoder& digest(const Digest& d) {
    const auto b = d.bytes();
    return bytes(std::string_view(reinterpret_cast<const char*>(b.data()), b.size()));
  }

  const std::string& str() const { return out_; }

 private:
  void put_be(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  std::string out_;
};

}  // namespace urm::ledger
