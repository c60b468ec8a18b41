#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "diqkd/bitstring.hpp"

namespace diqkd {

// One reconciliation pass: a block size and a permutation of positions.
// Position l lands in slot shuffle[l]; blocks are consecutive slot ranges
// of block_size, so every block has size <= block_size and the blocks
// partition all positions.
struct PassPlan {
    int pass_index = 1;
    std::size_t block_size = 1;
    std::vector<std::uint32_t> shuffle;

    void validate(std::size_t n) const;
};

enum class Direction { AliceToBob, BobToAlice };

struct ParityMessage {
    int pass = 0;
    std::uint32_t block = 0;
    int parity = 0;
    Direction direction = Direction::AliceToBob;
};

struct CorrectionEvent {
    std::uint32_t position = 0;
    int pass_discovered = 0;
};

// Ordered message log of one reconciliation session. leaked_bits counts
// exactly the parity bits Alice disclosed (every AliceToBob message:
// top-level block parities plus each BINARY-round parity).
struct CascadeTranscript {
    std::vector<ParityMessage> parity_messages;
    std::vector<CorrectionEvent> corrections;
    std::size_t leaked_bits = 0;
};

// Classic first-pass sizing: k1 = ceil(0.73 / qber) clamped to [2, ceil(n/2)],
// doubled each pass and capped at n. qber == 0 uses the clamp ceiling.
std::vector<std::size_t> block_schedule(double qber_estimate, std::size_t n, int passes);

// Pass 1 is the identity permutation; later passes use seeded uniform
// shuffles from derive_seed(seed, {stream::kCascadeShuffle, pass}).
std::vector<PassPlan> make_pass_plans(std::size_t n,
                                      const std::vector<std::size_t>& block_sizes,
                                      std::uint64_t seed);

// Bob-side view of Alice: each call discloses the parity of Alice's bits at
// the queried positions and counts one leaked bit.
using AliceParityOracle = std::function<int(std::span<const std::uint32_t>)>;

struct BinarySearchResult {
    std::uint32_t position = 0;
    std::size_t parities_disclosed = 0;
};

// Bisection search for one differing position inside a block whose parities
// mismatch. alice_block_parity is the already-exchanged parity of the whole
// block; the oracle is queried once per halving (ceil(log2 |block|) times
// when the block size is a power of two, never more). Throws
// ContractViolationError when the block's parities actually agree.
BinarySearchResult binary_locate(std::span<const std::uint32_t> block_positions,
                                 int alice_block_parity,
                                 const AliceParityOracle& alice_parity,
                                 const BitString& bob_bits);

// Interactive multi-pass reconciliation of Bob's string toward Alice's.
// Alice's bits are the fixed reference; only Bob's copy changes. After pass
// i completes, every already-exchanged block of every pass m <= i has
// matching parities; a correction found in a later pass re-checks the
// blocks of earlier passes that contain it (the cascade effect), picking
// the smallest mismatching block first.
class CascadeSession {
  public:
    CascadeSession(BitString alice, BitString bob, std::vector<PassPlan> plans);

    // Passes must be run in order 1..plans.size().
    void run_pass(int pass_index);
    void run_all();

    const BitString& alice() const { return alice_; }
    const BitString& corrected_bob() const { return bob_; }
    const CascadeTranscript& transcript() const { return transcript_; }
    int passes_completed() const { return passes_done_; }
    std::size_t length() const { return alice_.size(); }

    // Simulation-side audit: recomputes every exchanged block parity of
    // passes 1..upto_pass from scratch.
    bool parities_consistent(int upto_pass) const;

    std::size_t residual_errors() const { return hamming_distance(alice_, bob_); }

  private:
    BitString alice_;
    BitString bob_;
    std::vector<PassPlan> plans_;
    // blocks_[p][j]: positions of block j in pass p+1, in slot order.
    std::vector<std::vector<std::vector<std::uint32_t>>> blocks_;
    std::vector<std::vector<std::uint32_t>> block_of_;
    std::vector<std::vector<std::uint8_t>> alice_parity_;
    std::vector<std::vector<std::uint8_t>> bob_parity_;
    std::vector<std::vector<std::uint8_t>> exchanged_;
    CascadeTranscript transcript_;
    int passes_done_ = 0;
    int current_pass_ = 0;

    void flip_bob(std::uint32_t position);
    void resolve_mismatch(int pass, std::uint32_t block);
    int disclose_alice_parity(int pass, std::uint32_t block,
                              std::span<const std::uint32_t> positions);
};

// Convenience wrapper: runs all passes and returns Bob's corrected string
// with the transcript.
std::pair<BitString, CascadeTranscript> run_cascade(const BitString& alice,
                                                    const BitString& bob,
                                                    const std::vector<PassPlan>& plans);

// Hamming distance to Alice after some passes, relative to the initial
// error count e (Fig-style r/e ratio). e must be >= 1.
double remaining_error_ratio(const BitString& alice,
                             const BitString& bob_after_pass,
                             std::size_t initial_error_count);

// Actual reconciliation efficiency f = leaked_bits / (n * h(q)), where h is
// the binary entropy. q must lie strictly inside (0, 0.5).
double leakage_efficiency(const CascadeTranscript& transcript, std::size_t n, double q);

// Binary entropy in bits; h(0) = h(1) = 0.
double binary_entropy(double q);

}  // namespace diqkd
