#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diqkd/rng.hpp"

namespace diqkd {

// Ordered sequence of {0,1} used for raw, sifted, corrected and final keys.
class BitString {
  public:
    BitString() = default;
    explicit BitString(std::size_t n) : bits_(n, 0) {}
    explicit BitString(std::vector<std::uint8_t> bits);

    static BitString from_string(std::string_view s);
    static BitString random(std::size_t n, Rng& rng);

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    int bit(std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, int v) { bits_[i] = static_cast<std::uint8_t>(v & 1); }
    void flip(std::size_t i) { bits_[i] ^= 1; }
    void push_back(int v) { bits_.push_back(static_cast<std::uint8_t>(v & 1)); }

    int parity() const;
    int parity_over(std::span<const std::uint32_t> positions) const;

    std::string to_string() const;
    const std::vector<std::uint8_t>& data() const { return bits_; }

    bool operator==(const BitString&) const = default;

  private:
    std::vector<std::uint8_t> bits_;
};

std::size_t hamming_distance(const BitString& a, const BitString& b);

// Positions where the two strings differ.
std::vector<std::uint32_t> diff_positions(const BitString& a, const BitString& b);

}  // namespace diqkd
