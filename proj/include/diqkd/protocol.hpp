#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "diqkd/bitstring.hpp"
#include "diqkd/statistics_model.hpp"

namespace diqkd {

struct InputPair {
    int x = 0;
    int y = 0;
    auto operator<=>(const InputPair&) const = default;
};

enum class RoundType { Test, Key };

// One protocol round. Indices are 1-based and contiguous.
struct RoundRecord {
    std::uint32_t index = 0;
    RoundType type = RoundType::Test;
    int x = 0;
    int y = 0;
    int a = +1;
    int b = +1;
};

// Input alphabets, angle maps, round designation and noise for one run.
//
// The default (baseline()) uses Alice inputs {0,1,2,3} at angles
// {-22.5, +22.5, -45, 0} degrees and Bob inputs {0,1} at {-22.5, +22.5}.
// Key rounds are the aligned pairs (0,0) and (1,1); test rounds combine
// Alice's {2,3} with both Bob inputs. Bob's index order is chosen so that
// the matching-inputs sifting rule (x == y) selects angle-aligned pairs.
struct ProtocolConfig {
    std::vector<double> alice_angles_deg;
    std::vector<double> bob_angles_deg;
    std::vector<InputPair> test_pairs;
    std::vector<InputPair> key_pairs;
    // CHSH slots (A0B0, A0B1, A1B0, A1B1); signs are +,+,+,-.
    std::array<InputPair, 4> chsh_pairs{};

    // Probability that a round is a test round; inputs are uniform within
    // each class unless input_probs overrides the whole distribution.
    double test_fraction = 0.5;
    // Optional explicit distribution, aligned with test_pairs followed by
    // key_pairs. Must sum to 1 within 1e-9 when non-empty.
    std::vector<double> input_probs;

    NoiseModel noise;

    double abort_s_threshold = 2.0;
    bool qber_abort_enabled = false;
    double qber_abort_threshold = 0.082;

    // Calibrated defaults: visibility 0.9115 and key readout error 0.0189,
    // which give S ~ 2.578 and key-round QBER ~ 0.078.
    static ProtocolConfig baseline();

    void validate() const;

    bool is_test_pair(InputPair p) const;
    bool is_key_pair(InputPair p) const;

    struct WeightedPair {
        InputPair pair;
        double prob = 0.0;
        bool is_key = false;
    };
    // Resolved categorical distribution over input pairs.
    std::vector<WeightedPair> input_distribution() const;

    MeasurementSetting alice_setting(int x) const;
    MeasurementSetting bob_setting(int y) const;
};

struct RoundPartition {
    std::vector<std::uint32_t> test_indices;
    std::vector<std::uint32_t> key_indices;
};

struct ChshEstimate {
    double s_value = 0.0;
    std::map<InputPair, double> correlator_values;
    std::map<InputPair, std::int64_t> counts;
};

struct SiftedKeys {
    BitString alice_bits;
    BitString bob_bits;
    std::vector<std::uint32_t> source_round_indices;
};

enum class AbortDecision { Proceed, Abort };

// Runs the round loop: inputs drawn i.i.d. from the configured distribution,
// outcomes via the statistics model. Round i uses the substream
// derive_seed(run_seed, {stream::kRound, i}), so rounds are order-independent.
std::vector<RoundRecord> run_rounds(std::size_t n_rounds,
                                    const ProtocolConfig& config,
                                    std::uint64_t run_seed);

// Partitions record indices into test and key rounds by input-pair
// membership. A record whose pair is in neither set is a config mismatch.
RoundPartition classify_rounds(std::span<const RoundRecord> records,
                               const ProtocolConfig& config);

// Sample-mean correlators per observed input pair, combined into S over the
// four designated slots. Throws IncompleteStatisticsError if any designated
// pair has zero count.
ChshEstimate estimate_chsh(std::span<const RoundRecord> test_records,
                           const std::array<InputPair, 4>& chsh_pairs);

// Outcome-to-bit convention: +1 -> 1, -1 -> 0, both parties.
int outcome_to_bit(int outcome);

// Extracts one bit per key round for each party, preserving round order.
SiftedKeys sift_keys(std::span<const RoundRecord> key_records);

// Fraction of positions where the sifted bits differ.
double estimate_qber(const SiftedKeys& keys);

// Source round indices at which the sifted bits differ.
std::vector<std::uint32_t> mismatch_rounds(const SiftedKeys& keys);

AbortDecision abort_check(const ChshEstimate& estimate, double s_threshold = 2.0);

}  // namespace diqkd
