#pragma once

#include <cstdint>
#include <cstddef>

#include "diqkd/bitstring.hpp"

namespace diqkd {

enum class HashFamily { ToeplitzLike };

// Seeded linear two-universal hash. The seed defines a Toeplitz matrix
// T[i][j] = seed[input_len - 1 + i - j], so seed length must equal
// input_len + output_len - 1.
struct HashSpec {
    HashFamily family = HashFamily::ToeplitzLike;
    BitString seed;
    std::size_t output_len = 0;

    static HashSpec random(std::size_t input_len, std::size_t output_len, Rng& rng);
    void validate(std::size_t input_len) const;
};

// output[i] = XOR_j T[i][j] * key[j]. Deterministic in (key, seed); the
// all-zero key maps to the all-zero output. Requires output_len <= key size.
BitString universal_hash(const BitString& key, const HashSpec& spec);

enum class VerifyResult { Match, Mismatch };

// Compares tag_len-bit digests of both keys under a seed-derived Toeplitz
// hash. False-match probability over seeds is at most 2^-tag_len.
VerifyResult verify_keys(const BitString& key_a, const BitString& key_b,
                         std::size_t tag_len, std::uint64_t seed);

struct KeyRateOptions {
    std::size_t verify_tag_bits = 64;   // t, from eps_cor = 2^-64
    std::size_t security_margin_bits = 100;
    bool use_leakage_accounting = true;
};

struct KeyRateReport {
    double s_value = 0.0;
    double qber = 0.0;
    std::size_t leaked_bits = 0;
    std::size_t sifted_len = 0;
    double rate_per_bit = 0.0;
    std::size_t final_len = 0;
};

// Asymptotic Devetak-Winter style rate r = 1 - h(q) - h((1+sqrt(s^2/4-1))/2).
// final_len charges the actual Cascade leakage (plus verification tag and
// security margin) in place of the asymptotic h(q) term when leakage
// accounting is on. Throws AbortSignal for s <= 2 and a parameter error for
// s beyond the quantum bound 2*sqrt(2).
KeyRateReport key_rate(double s, double q, std::size_t leaked_bits,
                       std::size_t sifted_len, const KeyRateOptions& options = {});

// Rate formula alone, same domain checks as key_rate.
double key_rate_per_bit(double s, double q);

}  // namespace diqkd
