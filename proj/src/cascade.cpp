#include "diqkd/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <tuple>

#include "diqkd/errors.hpp"

namespace diqkd {

void PassPlan::validate(std::size_t n) const {
    if (pass_index < 1) {
        throw std::invalid_argument("PassPlan: pass_index must be >= 1");
    }
    if (block_size < 1) {
        throw std::invalid_argument("PassPlan: block_size must be >= 1");
    }
    if (shuffle.size() != n) {
        throw std::invalid_argument("PassPlan: shuffle length does not match string length");
    }
    std::vector<std::uint8_t> seen(n, 0);
    for (std::uint32_t slot : shuffle) {
        if (slot >= n || seen[slot]) {
            throw std::invalid_argument("PassPlan: shuffle is not a permutation");
        }
        seen[slot] = 1;
    }
}

std::vector<std::size_t> block_schedule(double qber_estimate, std::size_t n, int passes) {
    if (passes < 1) {
        throw std::invalid_argument("block_schedule: passes must be >= 1");
    }
    if (n < 1) {
        throw std::invalid_argument("block_schedule: n must be >= 1");
    }
    if (qber_estimate < 0.0 || qber_estimate > 0.5) {
        throw std::invalid_argument("block_schedule: qber_estimate must be in [0, 0.5]");
    }
    const std::size_t ceiling = std::max<std::size_t>(2, (n + 1) / 2);
    std::size_t k1;
    if (qber_estimate == 0.0) {
        k1 = ceiling;
    } else {
        const double raw = std::ceil(0.73 / qber_estimate);
        k1 = raw >= static_cast<double>(ceiling)
                 ? ceiling
                 : std::max<std::size_t>(2, static_cast<std::size_t>(raw));
    }
    std::vector<std::size_t> sizes(static_cast<std::size_t>(passes));
    sizes[0] = k1;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        sizes[i] = std::min(2 * sizes[i - 1], n);
    }
    return sizes;
}

std::vector<PassPlan> make_pass_plans(std::size_t n,
                                      const std::vector<std::size_t>& block_sizes,
                                      std::uint64_t seed) {
    std::vector<PassPlan> plans;
    plans.reserve(block_sizes.size());
    for (std::size_t i = 0; i < block_sizes.size(); ++i) {
        PassPlan plan;
        plan.pass_index = static_cast<int>(i + 1);
        plan.block_size = block_sizes[i];
        plan.shuffle.resize(n);
        std::iota(plan.shuffle.begin(), plan.shuffle.end(), 0u);
        if (i > 0) {
            Rng rng(derive_seed(seed, {stream::kCascadeShuffle, i + 1}));
            rng.shuffle(plan.shuffle);
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

BinarySearchResult binary_locate(std::span<const std::uint32_t> block_positions,
                                 int alice_block_parity,
                                 const AliceParityOracle& alice_parity,
                                 const BitString& bob_bits) {
    if (block_positions.empty()) {
        throw std::invalid_argument("binary_locate: empty block");
    }
    if (bob_bits.parity_over(block_positions) == alice_block_parity) {
        throw ContractViolationError(
            "binary_locate: block parities agree; nothing to locate");
    }
    std::size_t lo = 0;
    std::size_t hi = block_positions.size();
    int segment_alice_parity = alice_block_parity;
    std::size_t disclosed = 0;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo + 1) / 2;
        const auto left = block_positions.subspan(lo, mid - lo);
        const int left_alice = alice_parity(left);
        ++disclosed;
        const int left_bob = bob_bits.parity_over(left);
        if (left_alice != left_bob) {
            hi = mid;
            segment_alice_parity = left_alice;
        } else {
            segment_alice_parity ^= left_alice;
            lo = mid;
        }
    }
    return {block_positions[lo], disclosed};
}

CascadeSession::CascadeSession(BitString alice, BitString bob,
                               std::vector<PassPlan> plans)
    : alice_(std::move(alice)), bob_(std::move(bob)), plans_(std::move(plans)) {
    if (alice_.size() != bob_.size()) {
        throw std::invalid_argument("CascadeSession: string lengths differ");
    }
    const std::size_t n = alice_.size();
    for (std::size_t p = 0; p < plans_.size(); ++p) {
        plans_[p].validate(n);
        if (plans_[p].pass_index != static_cast<int>(p + 1)) {
            throw std::invalid_argument("CascadeSession: pass indices must be 1..M in order");
        }
    }
    blocks_.resize(plans_.size());
    block_of_.resize(plans_.size());
    alice_parity_.resize(plans_.size());
    bob_parity_.resize(plans_.size());
    exchanged_.resize(plans_.size());
    for (std::size_t p = 0; p < plans_.size(); ++p) {
        const std::size_t k = plans_[p].block_size;
        const std::size_t n_blocks = n == 0 ? 0 : (n + k - 1) / k;
        blocks_[p].assign(n_blocks, {});
        block_of_[p].assign(n, 0);
        // Invert the permutation so block contents come out in slot order.
        std::vector<std::uint32_t> position_at_slot(n);
        for (std::size_t pos = 0; pos < n; ++pos) {
            position_at_slot[plans_[p].shuffle[pos]] = static_cast<std::uint32_t>(pos);
        }
        for (std::size_t slot = 0; slot < n; ++slot) {
            const std::uint32_t pos = position_at_slot[slot];
            const std::uint32_t j = static_cast<std::uint32_t>(slot / k);
            blocks_[p][j].push_back(pos);
            block_of_[p][pos] = j;
        }
        alice_parity_[p].assign(n_blocks, 0);
        bob_parity_[p].assign(n_blocks, 0);
        exchanged_[p].assign(n_blocks, 0);
        for (std::size_t j = 0; j < n_blocks; ++j) {
            alice_parity_[p][j] = static_cast<std::uint8_t>(alice_.parity_over(blocks_[p][j]));
            bob_parity_[p][j] = static_cast<std::uint8_t>(bob_.parity_over(blocks_[p][j]));
        }
    }
}

void CascadeSession::flip_bob(std::uint32_t position) {
    bob_.flip(position);
    for (std::size_t p = 0; p < plans_.size(); ++p) {
        bob_parity_[p][block_of_[p][position]] ^= 1;
    }
    transcript_.corrections.push_back({position, current_pass_});
}

int CascadeSession::disclose_alice_parity(int pass, std::uint32_t block,
                                          std::span<const std::uint32_t> positions) {
    const int parity = alice_.parity_over(positions);
    transcript_.parity_messages.push_back({pass, block, parity, Direction::AliceToBob});
    ++transcript_.leaked_bits;
    return parity;
}

void CascadeSession::resolve_mismatch(int pass, std::uint32_t block) {
    // Work set ordered by (block size, pass, block): argmin |K| with
    // deterministic tie-breaking.
    std::set<std::tuple<std::size_t, int, std::uint32_t>> work;
    work.insert({blocks_[static_cast<std::size_t>(pass - 1)][block].size(), pass, block});
    while (!work.empty()) {
        const auto [size, m, n_blk] = *work.begin();
        work.erase(work.begin());
        const std::size_t mp = static_cast<std::size_t>(m - 1);
        if (alice_parity_[mp][n_blk] == bob_parity_[mp][n_blk]) {
            continue;  // fixed as a side effect of an earlier correction
        }
        const auto& positions = blocks_[mp][n_blk];
        const auto result = binary_locate(
            positions, alice_parity_[mp][n_blk],
            [&](std::span<const std::uint32_t> query) {
                return disclose_alice_parity(m, n_blk, query);
            },
            bob_);
        flip_bob(result.position);
        // The flip toggles the parity of every block containing this
        // position; any already-exchanged block may now mismatch.
        for (std::size_t p = 0; p < plans_.size(); ++p) {
            const std::uint32_t j = block_of_[p][result.position];
            if (exchanged_[p][j] && !(static_cast<int>(p + 1) == m && j == n_blk)) {
                work.insert({blocks_[p][j].size(), static_cast<int>(p + 1), j});
            }
        }
    }
}

void CascadeSession::run_pass(int pass_index) {
    if (pass_index != passes_done_ + 1 ||
        static_cast<std::size_t>(pass_index) > plans_.size()) {
        throw std::invalid_argument("CascadeSession: passes must run in order 1..M");
    }
    current_pass_ = pass_index;
    const std::size_t p = static_cast<std::size_t>(pass_index - 1);
    for (std::uint32_t j = 0; j < blocks_[p].size(); ++j) {
        const int a_par = disclose_alice_parity(pass_index, j, blocks_[p][j]);
        transcript_.parity_messages.push_back(
            {pass_index, j, bob_parity_[p][j], Direction::BobToAlice});
        exchanged_[p][j] = 1;
        if (a_par != bob_parity_[p][j]) {
            resolve_mismatch(pass_index, j);
        }
    }
    passes_done_ = pass_index;
}

void CascadeSession::run_all() {
    while (passes_done_ < static_cast<int>(plans_.size())) {
        run_pass(passes_done_ + 1);
    }
}

bool CascadeSession::parities_consistent(int upto_pass) const {
    for (int m = 1; m <= upto_pass && m <= static_cast<int>(plans_.size()); ++m) {
        const std::size_t p = static_cast<std::size_t>(m - 1);
        for (std::size_t j = 0; j < blocks_[p].size(); ++j) {
            if (!exchanged_[p][j]) continue;
            if (alice_.parity_over(blocks_[p][j]) != bob_.parity_over(blocks_[p][j])) {
                return false;
            }
        }
    }
    return true;
}

std::pair<BitString, CascadeTranscript> run_cascade(const BitString& alice,
                                                    const BitString& bob,
                                                    const std::vector<PassPlan>& plans) {
    CascadeSession session(alice, bob, plans);
    session.run_all();
    return {session.corrected_bob(), session.transcript()};
}

double remaining_error_ratio(const BitString& alice,
                             const BitString& bob_after_pass,
                             std::size_t initial_error_count) {
    if (initial_error_count == 0) {
        throw std::invalid_argument("remaining_error_ratio: undefined for e = 0");
    }
    return static_cast<double>(hamming_distance(alice, bob_after_pass)) /
           static_cast<double>(initial_error_count);
}

double binary_entropy(double q) {
    if (q < 0.0 || q > 1.0) {
        throw std::invalid_argument("binary_entropy: q must be in [0,1]");
    }
    if (q == 0.0 || q == 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

double leakage_efficiency(const CascadeTranscript& transcript, std::size_t n, double q) {
    if (n < 1) {
        throw std::invalid_argument("leakage_efficiency: n must be >= 1");
    }
    if (!(q > 0.0 && q < 0.5)) {
        throw std::invalid_argument("leakage_efficiency: q must lie in (0, 0.5)");
    }
    return static_cast<double>(transcript.leaked_bits) /
           (static_cast<double>(n) * binary_entropy(q));
}

}  // namespace diqkd
