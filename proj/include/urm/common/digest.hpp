#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace urm {

/// A 32-byte SHA-256 digest.
class Digest {
 public:
  static constexpr std::size_t kSize = 32;

  constexpr Digest() = default;
  explicit constexpr Digest(const std::array<std::uint8_t, kSize>& bytes) : bytes_(bytes) {}

  /// All-zero digest, used as the predecessor of genesis blocks.
  static constexpr Digest zero() { return Digest{}; }

  /// Parses exactly 64 lowercase hex characters. Throws std::invalid_argument otherwise.
  static Digest from_hex(std::string_view hex);

  std::string hex() const;
  std::span<const std::uint8_t, kSize> bytes() const { return bytes_; }
  std::array<std::uint8_t, kSize>& mutable_bytes() { return bytes_; }

  bool is_zero() const;

  friend auto operator<=>(const Digest&, const Digest&) = default;

 private:
  std::array<std::uint8_t, kSize> bytes_{};
};

/// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> data);
  Sha256& update(std::string_view data);
  Sha256& update(const Digest& d) { return update(d.bytes()); }
  Digest finish();

 private:
  void* ctx_;
};

Digest sha256(std::string_view data);
Digest sha256(std::span<const std::uint8_t> data);

/// SHA-256 over the concatenation `left || right`.
Digest sha256_pair(const Digest& left, const Digest& right);

std::string to_hex(std::span<const std::uint8_t> data);

}  // namespace urm

template <>
struct std::hash<urm::Digest> {
  std::size_t operator()(const urm::Digest& d) const noexcept {
    std::size_t h = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) h = (h << 8) | d.bytes()[i];
    return h;
  }
};
