#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace nwp {

/// 64-bit FNV-1a, used for content fingerprints (not for security).
class Fnv1a64 {
public:
    void update(std::span<const std::byte> bytes) noexcept {
        for (auto b : bytes) {
            state_ ^= static_cast<std::uint8_t>(b);
            state_ *= 0x100000001b3ULL;
        }
    }
    void update(std::string_view s) noexcept { update(std::as_bytes(std::span(s.data(), s.size()))); }
    std::uint64_t digest() const noexcept { return state_; }
    std::string hex() const;

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string Fnv1a64::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int k = 15; k >= 0; --k) out[static_cast<std::size_t>(15 - k)] = digits[(state_ >> (4 * k)) & 0xF];
    return out;
}

}  // namespace nwp
