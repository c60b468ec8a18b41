#include "diqkd/bitstring.hpp"

#include <stdexcept>

namespace diqkd {

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto& b : bits_) {
        if (b > 1) {
            throw std::invalid_argument("BitString: values must be 0 or 1");
        }
    }
}

BitString BitString::from_string(std::string_view s) {
    BitString out;
    out.bits_.reserve(s.size());
    for (char c : s) {
        if (c == '0' || c == '1') {
            out.bits_.push_back(static_cast<std::uint8_t>(c - '0'));
        } else {
            throw std::invalid_argument("BitString::from_string: expected only '0'/'1'");
        }
    }
    return out;
}

BitString BitString::random(std::size_t n, Rng& rng) {
    BitString out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.bits_[i] = static_cast<std::uint8_t>(rng.next_u64() & 1);
    }
    return out;
}

int BitString::parity() const {
    std::uint8_t p = 0;
    for (std::uint8_t b : bits_) p ^= b;
    return p;
}

int BitString::parity_over(std::span<const std::uint32_t> positions) const {
    std::uint8_t p = 0;
    for (std::uint32_t i : positions) p ^= bits_[i];
    return p;
}

std::string BitString::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        s[i] = static_cast<char>('0' + bits_[i]);
    }
    return s;
}

std::size_t hamming_distance(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("hamming_distance: length mismatch");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += static_cast<std::size_t>(a.bit(i) != b.bit(i));
    }
    return d;
}

std::vector<std::uint32_t> diff_positions(const BitString& a, const BitString& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("diff_positions: length mismatch");
    }
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.bit(i) != b.bit(i)) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

}  // namespace diqkd
