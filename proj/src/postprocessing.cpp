#include "diqkd/postprocessing.hpp"

#include <cmath>
#include <stdexcept>

#include "diqkd/cascade.hpp"
#include "diqkd/errors.hpp"

namespace diqkd {

namespace {

// Core Toeplitz evaluation without the HashSpec shape constraints, shared by
// privacy amplification and digest verification.
BitString toeplitz_apply(const BitString& key, const BitString& seed,
                         std::size_t output_len) {
    const std::size_t in = key.size();
    BitString out(output_len);
    for (std::size_t i = 0; i < output_len; ++i) {
        int acc = 0;
        for (std::size_t j = 0; j < in; ++j) {
            if (key.bit(j)) acc ^= seed.bit(in - 1 + i - j);
        }
        out.set(i, acc);
    }
    return out;
}

}  // namespace

HashSpec HashSpec::random(std::size_t input_len, std::size_t output_len, Rng& rng) {
    HashSpec spec;
    spec.output_len = output_len;
    const std::size_t seed_len =
        input_len + output_len == 0 ? 0 : input_len + output_len - 1;
    spec.seed = BitString::random(seed_len, rng);
    return spec;
}

void HashSpec::validate(std::size_t input_len) const {
    if (output_len > input_len) {
        throw std::invalid_argument("HashSpec: output_len must not exceed input length");
    }
    const std::size_t expected =
        input_len + output_len == 0 ? 0 : input_len + output_len - 1;
    if (seed.size() != expected) {
        throw std::invalid_argument("HashSpec: seed length must equal input_len + output_len - 1");
    }
}

BitString universal_hash(const BitString& key, const HashSpec& spec) {
    spec.validate(key.size());
    return toeplitz_apply(key, spec.seed, spec.output_len);
}

VerifyResult verify_keys(const BitString& key_a, const BitString& key_b,
                         std::size_t tag_len, std::uint64_t seed) {
    if (key_a.size() != key_b.size()) {
        throw std::invalid_argument("verify_keys: key lengths differ");
    }
    if (tag_len < 1) {
        throw std::invalid_argument("verify_keys: tag_len must be >= 1");
    }
    Rng rng(derive_seed(seed, {stream::kVerifySeed}));
    const std::size_t n = key_a.size();
    const std::size_t seed_len = n + tag_len == 0 ? 0 : n + tag_len - 1;
    const BitString hash_seed = BitString::random(seed_len, rng);
    const BitString digest_a = toeplitz_apply(key_a, hash_seed, tag_len);
    const BitString digest_b = toeplitz_apply(key_b, hash_seed, tag_len);
    return digest_a == digest_b ? VerifyResult::Match : VerifyResult::Mismatch;
}

double key_rate_per_bit(double s, double q) {
    constexpr double kTsirelson = 2.8284271247461903;  // 2*sqrt(2)
    if (s <= 2.0) {
        throw AbortSignal("key_rate: S <= 2, no Bell violation, no key");
    }
    if (s > kTsirelson + 1e-12) {
        throw std::invalid_argument("key_rate: S exceeds the quantum bound 2*sqrt(2)");
    }
    if (!(q >= 0.0 && q < 0.5)) {
        throw std::invalid_argument("key_rate: q must lie in [0, 0.5)");
    }
    const double clamped = std::min(s, kTsirelson);
    const double eve_arg = (1.0 + std::sqrt(clamped * clamped / 4.0 - 1.0)) / 2.0;
    return 1.0 - binary_entropy(q) - binary_entropy(eve_arg);
}

KeyRateReport key_rate(double s, double q, std::size_t leaked_bits,
                       std::size_t sifted_len, const KeyRateOptions& options) {
    KeyRateReport report;
    report.s_value = s;
    report.qber = q;
    report.leaked_bits = leaked_bits;
    report.sifted_len = sifted_len;
    report.rate_per_bit = key_rate_per_bit(s, q);

    const double n = static_cast<double>(sifted_len);
    const double eve_term =
        binary_entropy((1.0 + std::sqrt(std::min(s * s / 4.0, 2.0) - 1.0)) / 2.0);
    double usable;
    if (options.use_leakage_accounting) {
        usable = n * (1.0 - eve_term) - static_cast<double>(leaked_bits);
    } else {
        usable = n * report.rate_per_bit;
    }
    usable -= static_cast<double>(options.verify_tag_bits);
    usable -= static_cast<double>(options.security_margin_bits);
    report.final_len =
        usable <= 0.0 ? 0 : static_cast<std::size_t>(std::floor(usable));
    if (report.rate_per_bit <= 0.0) {
        report.final_len = 0;
    }
    return report;
}

}  // namespace diqkd
