#include "diqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "diqkd/errors.hpp"

namespace diqkd {

ProtocolConfig ProtocolConfig::baseline() {
    ProtocolConfig cfg;
    cfg.alice_angles_deg = {-22.5, 22.5, -45.0, 0.0};
    cfg.bob_angles_deg = {-22.5, 22.5};
    cfg.test_pairs = {{3, 0}, {3, 1}, {2, 0}, {2, 1}};
    cfg.key_pairs = {{0, 0}, {1, 1}};
    cfg.chsh_pairs = {InputPair{3, 0}, InputPair{3, 1}, InputPair{2, 0}, InputPair{2, 1}};
    cfg.test_fraction = 0.5;
    cfg.noise.visibility = 0.9115;
    cfg.noise.bitflip_prob = 0.0;
    cfg.noise.key_readout_error = 0.0189;
    return cfg;
}

void ProtocolConfig::validate() const {
    noise.validate();
    if (alice_angles_deg.empty() || bob_angles_deg.empty()) {
        throw ConfigError("ProtocolConfig: input alphabets must be non-empty");
    }
    for (double a : alice_angles_deg) {
        if (!(a >= -90.0 && a < 90.0)) {
            throw ConfigError("ProtocolConfig: angles must lie in [-90, +90)");
        }
    }
    for (double a : bob_angles_deg) {
        if (!(a >= -90.0 && a < 90.0)) {
            throw ConfigError("ProtocolConfig: angles must lie in [-90, +90)");
        }
    }
    if (test_pairs.empty() && key_pairs.empty()) {
        throw ConfigError("ProtocolConfig: no input pairs configured");
    }
    auto check_pair = [&](InputPair p) {
        if (p.x < 0 || static_cast<std::size_t>(p.x) >= alice_angles_deg.size() ||
            p.y < 0 || static_cast<std::size_t>(p.y) >= bob_angles_deg.size()) {
            std::ostringstream msg;
            msg << "ProtocolConfig: pair (" << p.x << "," << p.y
                << ") outside the configured alphabets";
            throw ConfigError(msg.str());
        }
    };
    std::set<InputPair> seen;
    for (InputPair p : test_pairs) {
        check_pair(p);
        if (!seen.insert(p).second) {
            throw ConfigError("ProtocolConfig: duplicate input pair");
        }
    }
    for (InputPair p : key_pairs) {
        check_pair(p);
        if (!seen.insert(p).second) {
            throw ConfigError("ProtocolConfig: pair appears in both test and key sets");
        }
    }
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
        throw ConfigError("ProtocolConfig: test_fraction must be in [0,1]");
    }
    if (!input_probs.empty()) {
        if (input_probs.size() != test_pairs.size() + key_pairs.size()) {
            throw ConfigError("ProtocolConfig: input_probs size mismatch");
        }
        double sum = 0.0;
        for (double p : input_probs) {
            if (p < 0.0) throw ConfigError("ProtocolConfig: negative input probability");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ConfigError("ProtocolConfig: input probabilities must sum to 1");
        }
    } else {
        if (test_pairs.empty() && test_fraction > 0.0) {
            throw ConfigError("ProtocolConfig: test_fraction > 0 but no test pairs");
        }
        if (key_pairs.empty() && test_fraction < 1.0) {
            throw ConfigError("ProtocolConfig: key fraction > 0 but no key pairs");
        }
    }
}

bool ProtocolConfig::is_test_pair(InputPair p) const {
    return std::find(test_pairs.begin(), test_pairs.end(), p) != test_pairs.end();
}

bool ProtocolConfig::is_key_pair(InputPair p) const {
    return std::find(key_pairs.begin(), key_pairs.end(), p) != key_pairs.end();
}

std::vector<ProtocolConfig::WeightedPair> ProtocolConfig::input_distribution() const {
    std::vector<WeightedPair> dist;
    dist.reserve(test_pairs.size() + key_pairs.size());
    if (!input_probs.empty()) {
        std::size_t i = 0;
        for (InputPair p : test_pairs) dist.push_back({p, input_probs[i++], false});
        for (InputPair p : key_pairs) dist.push_back({p, input_probs[i++], true});
    } else {
        for (InputPair p : test_pairs) {
            dist.push_back({p, test_fraction / static_cast<double>(test_pairs.size()), false});
        }
        for (InputPair p : key_pairs) {
            dist.push_back({p, (1.0 - test_fraction) / static_cast<double>(key_pairs.size()), true});
        }
    }
    return dist;
}

MeasurementSetting ProtocolConfig::alice_setting(int x) const {
    return {Party::Alice, x, alice_angles_deg.at(static_cast<std::size_t>(x))};
}

MeasurementSetting ProtocolConfig::bob_setting(int y) const {
    return {Party::Bob, y, bob_angles_deg.at(static_cast<std::size_t>(y))};
}

std::vector<RoundRecord> run_rounds(std::size_t n_rounds,
                                    const ProtocolConfig& config,
                                    std::uint64_t run_seed) {
    if (n_rounds < 1) {
        throw std::invalid_argument("run_rounds: n_rounds must be >= 1");
    }
    config.validate();
    const auto dist = config.input_distribution();
    std::vector<double> cdf(dist.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        acc += dist[i].prob;
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    std::vector<RoundRecord> records(n_rounds);
    for (std::size_t i = 0; i < n_rounds; ++i) {
        Rng rng(derive_seed(run_seed, {stream::kRound, i + 1}));
        const double u = rng.next_double();
        std::size_t k = static_cast<std::size_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (k >= dist.size()) k = dist.size() - 1;
        const auto& choice = dist[k];

        RoundRecord& rec = records[i];
        rec.index = static_cast<std::uint32_t>(i + 1);
        rec.type = choice.is_key ? RoundType::Key : RoundType::Test;
        rec.x = choice.pair.x;
        rec.y = choice.pair.y;
        const OutcomePair out = sample_outcome_pair(
            config.alice_setting(rec.x), config.bob_setting(rec.y),
            config.noise, choice.is_key, rng);
        rec.a = out.a;
        rec.b = out.b;
    }
    return records;
}

RoundPartition classify_rounds(std::span<const RoundRecord> records,
                               const ProtocolConfig& config) {
    RoundPartition part;
    for (const RoundRecord& rec : records) {
        const InputPair p{rec.x, rec.y};
        if (config.is_test_pair(p)) {
            part.test_indices.push_back(rec.index);
        } else if (config.is_key_pair(p)) {
            part.key_indices.push_back(rec.index);
        } else {
            std::ostringstream msg;
            msg << "classify_rounds: pair (" << p.x << "," << p.y
                << ") is in neither the test nor the key set";
            throw ConfigError(msg.str());
        }
    }
    return part;
}

ChshEstimate estimate_chsh(std::span<const RoundRecord> test_records,
                           const std::array<InputPair, 4>& chsh_pairs) {
    ChshEstimate est;
    std::map<InputPair, std::int64_t> product_sums;
    for (const RoundRecord& rec : test_records) {
        const InputPair p{rec.x, rec.y};
        product_sums[p] += rec.a * rec.b;
        est.counts[p] += 1;
    }
    for (const auto& [pair, sum] : product_sums) {
        est.correlator_values[pair] =
            static_cast<double>(sum) / static_cast<double>(est.counts[pair]);
    }
    static constexpr std::array<double, 4> kSigns = {+1.0, +1.0, +1.0, -1.0};
    double s = 0.0;
    for (std::size_t slot = 0; slot < 4; ++slot) {
        const InputPair p = chsh_pairs[slot];
        auto it = est.correlator_values.find(p);
        if (it == est.correlator_values.end()) {
            std::ostringstream msg;
            msg << "estimate_chsh: no test rounds observed for pair (" << p.x
                << "," << p.y << "); S is undefined";
            throw IncompleteStatisticsError(msg.str());
        }
        s += kSigns[slot] * it->second;
    }
    est.s_value = s;
    return est;
}

int outcome_to_bit(int outcome) { return outcome > 0 ? 1 : 0; }

SiftedKeys sift_keys(std::span<const RoundRecord> key_records) {
    SiftedKeys keys;
    for (const RoundRecord& rec : key_records) {
        if (rec.type != RoundType::Key) continue;
        keys.alice_bits.push_back(outcome_to_bit(rec.a));
        keys.bob_bits.push_back(outcome_to_bit(rec.b));
        keys.source_round_indices.push_back(rec.index);
    }
    return keys;
}

double estimate_qber(const SiftedKeys& keys) {
    if (keys.alice_bits.size() != keys.bob_bits.size()) {
        throw std::invalid_argument("estimate_qber: length mismatch");
    }
    if (keys.alice_bits.empty()) {
        throw std::invalid_argument("estimate_qber: QBER undefined on empty keys");
    }
    const std::size_t mismatches = hamming_distance(keys.alice_bits, keys.bob_bits);
    return static_cast<double>(mismatches) / static_cast<double>(keys.alice_bits.size());
}

std::vector<std::uint32_t> mismatch_rounds(const SiftedKeys& keys) {
    std::vector<std::uint32_t> rounds;
    for (std::size_t i = 0; i < keys.alice_bits.size(); ++i) {
        if (keys.alice_bits.bit(i) != keys.bob_bits.bit(i)) {
            rounds.push_back(keys.source_round_indices[i]);
        }
    }
    return rounds;
}

AbortDecision abort_check(const ChshEstimate& estimate, double s_threshold) {
    return estimate.s_value <= s_threshold ? AbortDecision::Abort
                                           : AbortDecision::Proceed;
}

}  // namespace diqkd
