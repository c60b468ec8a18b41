#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diqkd/errors.hpp"
#include "diqkd/protocol.hpp"
#include "test_support.hpp"

using namespace diqkd;
using namespace diqkd::testing;

namespace {

std::vector<RoundRecord> filter_type(const std::vector<RoundRecord>& records, RoundType t) {
    std::vector<RoundRecord> out;
    for (const auto& rec : records) {
        if (rec.type == t) out.push_back(rec);
    }
    return out;
}

}  // namespace

TEST_CASE("worked example splits into 11 test and 9 key rounds") {
    const auto records = example_records();
    const auto part = classify_rounds(records, example_config());
    CHECK(part.test_indices.size() == 11);
    CHECK(part.key_indices.size() == 9);
    CHECK(part.test_indices.front() == 1);
    CHECK(part.key_indices.front() == 3);
}

TEST_CASE("classification rejects pairs outside both sets") {
    auto records = example_records();
    records[0].x = 5;
    records[0].y = 5;
    CHECK_THROWS_AS(classify_rounds(records, example_config()), ConfigError);
}

TEST_CASE("classification of empty input yields two empty sets") {
    const auto part = classify_rounds(std::vector<RoundRecord>{}, example_config());
    CHECK(part.test_indices.empty());
    CHECK(part.key_indices.empty());
}

TEST_CASE("all-key configuration puts everything in the key set") {
    ProtocolConfig cfg = example_config();
    cfg.test_pairs.clear();
    cfg.test_fraction = 0.0;
    std::vector<RoundRecord> records;
    for (std::uint32_t i = 1; i <= 5; ++i) {
        records.push_back({i, RoundType::Key, 0, 2, +1, +1});
    }
    const auto part = classify_rounds(records, cfg);
    CHECK(part.test_indices.empty());
    CHECK(part.key_indices.size() == 5);
}

TEST_CASE("worked-example correlators and the undefined S") {
    const auto test_records = filter_type(example_records(), RoundType::Test);
    REQUIRE(test_records.size() == 11);
    const auto cfg = example_config();
    CHECK_THROWS_AS(estimate_chsh(test_records, cfg.chsh_pairs),
                    IncompleteStatisticsError);

    // The two observable correlators are still well defined.
    std::map<InputPair, std::int64_t> sums;
    std::map<InputPair, std::int64_t> counts;
    for (const auto& rec : test_records) {
        sums[{rec.x, rec.y}] += rec.a * rec.b;
        counts[{rec.x, rec.y}] += 1;
    }
    CHECK(counts[{1, 0}] == 4);
    CHECK(counts[{1, 1}] == 7);
    CHECK(static_cast<double>(sums[{1, 0}]) / 4.0 == doctest::Approx(-0.5));
    CHECK(static_cast<double>(sums[{1, 1}]) / 7.0 == doctest::Approx(-1.0 / 7.0));
    CHECK(counts.count({0, 0}) == 0);
    CHECK(counts.count({0, 1}) == 0);
}

TEST_CASE("four unit correlators give S = 2") {
    std::vector<RoundRecord> records;
    std::uint32_t idx = 1;
    for (const auto pair : {InputPair{0, 0}, InputPair{0, 1}, InputPair{1, 0}, InputPair{1, 1}}) {
        records.push_back({idx++, RoundType::Test, pair.x, pair.y, +1, +1});
    }
    const auto est = estimate_chsh(records, example_config().chsh_pairs);
    CHECK(est.s_value == doctest::Approx(2.0));
}

TEST_CASE("ideal configuration reaches the quantum bound") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    cfg.noise = NoiseModel{};
    cfg.test_fraction = 1.0;
    cfg.key_pairs.clear();
    const auto records = run_rounds(1000000, cfg, 424242);
    const auto est = estimate_chsh(records, cfg.chsh_pairs);
    CHECK(std::abs(est.s_value - 2.0 * std::sqrt(2.0)) < 0.01);
    CHECK(std::abs(est.s_value) <= 4.0);
    CHECK(abort_check(est) == AbortDecision::Proceed);
}

TEST_CASE("estimated S converges to the analytic value") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    const auto records = run_rounds(20000, cfg, 99);
    const auto test_records = filter_type(records, RoundType::Test);
    const auto est = estimate_chsh(test_records, cfg.chsh_pairs);

    double analytic = 0.0;
    const double signs[4] = {1.0, 1.0, 1.0, -1.0};
    double sigma_sq = 0.0;
    for (int slot = 0; slot < 4; ++slot) {
        const InputPair p = cfg.chsh_pairs[static_cast<std::size_t>(slot)];
        const double e = correlator(cfg.alice_setting(p.x), cfg.bob_setting(p.y),
                                    cfg.noise, false);
        analytic += signs[slot] * e;
        sigma_sq += (1.0 - e * e) /
                    static_cast<double>(est.counts.at(p));
    }
    CHECK(std::abs(est.s_value - analytic) < 5.0 * std::sqrt(sigma_sq));
}

TEST_CASE("run_rounds is deterministic and shaped like the worked example") {
    ProtocolConfig cfg = example_config();
    const auto r1 = run_rounds(20, cfg, 7);
    const auto r2 = run_rounds(20, cfg, 7);
    REQUIRE(r1.size() == 20);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(r1[i].index == i + 1);
        CHECK(r1[i].x == r2[i].x);
        CHECK(r1[i].y == r2[i].y);
        CHECK(r1[i].a == r2[i].a);
        CHECK(r1[i].b == r2[i].b);
        CHECK((r1[i].a == 1 || r1[i].a == -1));
        CHECK((r1[i].b == 1 || r1[i].b == -1));
        const bool is_key = cfg.is_key_pair({r1[i].x, r1[i].y});
        CHECK(r1[i].type == (is_key ? RoundType::Key : RoundType::Test));
    }
}

TEST_CASE("single deterministic key round gives equal outcomes") {
    ProtocolConfig cfg;
    cfg.alice_angles_deg = {0.0};
    cfg.bob_angles_deg = {0.0};
    cfg.test_pairs.clear();
    cfg.key_pairs = {{0, 0}};
    cfg.test_fraction = 0.0;
    const auto records = run_rounds(1, cfg, 5);
    REQUIRE(records.size() == 1);
    CHECK(records[0].type == RoundType::Key);
    CHECK(records[0].a == records[0].b);
}

TEST_CASE("invalid configurations are rejected") {
    ProtocolConfig cfg = example_config();
    cfg.input_probs = {0.3, 0.3, 0.3, 0.3, 0.3};  // five pairs, sums to 1.5
    CHECK_THROWS_AS(run_rounds(10, cfg, 1), ConfigError);

    cfg = example_config();
    cfg.alice_angles_deg.clear();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    cfg = example_config();
    cfg.test_pairs.push_back({0, 2});  // already a key pair
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK_THROWS_AS(run_rounds(0, example_config(), 1), std::invalid_argument);
}

TEST_CASE("sifting the worked example follows the fixed bit convention") {
    const auto key_records = filter_type(example_records(), RoundType::Key);
    const auto keys = sift_keys(key_records);
    REQUIRE(keys.alice_bits.size() == 9);
    CHECK(keys.alice_bits.to_string() == "110111001");
    // +1 -> 1 and -1 -> 0 applied globally; the printed example applies a
    // different map in its final row, so the last bit differs there.
    CHECK(keys.bob_bits.to_string() == "010001000");
    CHECK(keys.source_round_indices ==
          std::vector<std::uint32_t>{3, 4, 5, 6, 11, 13, 16, 17, 18});
}

TEST_CASE("sifting zero key rounds yields empty keys") {
    const auto keys = sift_keys(std::vector<RoundRecord>{});
    CHECK(keys.alice_bits.empty());
    CHECK(keys.bob_bits.empty());
    CHECK_THROWS_AS(estimate_qber(keys), std::invalid_argument);
}

TEST_CASE("noiseless aligned key rounds agree everywhere") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    cfg.noise = NoiseModel{};
    const auto records = run_rounds(5000, cfg, 13);
    const auto keys = sift_keys(filter_type(records, RoundType::Key));
    REQUIRE(!keys.alice_bits.empty());
    CHECK(keys.alice_bits == keys.bob_bits);
    CHECK(estimate_qber(keys) == 0.0);
}

TEST_CASE("QBER on identical and complementary strings") {
    SiftedKeys keys;
    keys.alice_bits = BitString::from_string("10110");
    keys.bob_bits = BitString::from_string("10110");
    keys.source_round_indices = {1, 2, 3, 4, 5};
    CHECK(estimate_qber(keys) == 0.0);
    keys.bob_bits = BitString::from_string("01001");
    CHECK(estimate_qber(keys) == 1.0);
}

TEST_CASE("QBER equals (1 - mean product)/2 under the bit convention") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    const auto records = run_rounds(20000, cfg, 321);
    const auto key_records = filter_type(records, RoundType::Key);
    const auto keys = sift_keys(key_records);
    long long product_sum = 0;
    for (const auto& rec : key_records) product_sum += rec.a * rec.b;
    const auto n = static_cast<double>(key_records.size());
    const double via_products = (n - static_cast<double>(product_sum)) / (2.0 * n);
    CHECK(estimate_qber(keys) == via_products);
}

TEST_CASE("sifting preserves round order") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    const auto records = run_rounds(3000, cfg, 17);
    const auto keys = sift_keys(filter_type(records, RoundType::Key));
    for (std::size_t i = 1; i < keys.source_round_indices.size(); ++i) {
        REQUIRE(keys.source_round_indices[i - 1] < keys.source_round_indices[i]);
    }
}

TEST_CASE("abort rule") {
    ChshEstimate est;
    est.s_value = 2.578;
    CHECK(abort_check(est) == AbortDecision::Proceed);
    est.s_value = 2.0;
    CHECK(abort_check(est) == AbortDecision::Abort);
    est.s_value = 2.0 * std::sqrt(2.0);
    CHECK(abort_check(est) == AbortDecision::Proceed);
    est.s_value = 2.3;
    CHECK(abort_check(est, 2.4) == AbortDecision::Abort);
}

TEST_CASE("partition covers all indices disjointly") {
    ProtocolConfig cfg = ProtocolConfig::baseline();
    const auto records = run_rounds(2500, cfg, 55);
    const auto part = classify_rounds(records, cfg);
    CHECK(part.test_indices.size() + part.key_indices.size() == records.size());
    std::vector<bool> seen(records.size() + 1, false);
    for (auto i : part.test_indices) {
        REQUIRE(!seen[i]);
        seen[i] = true;
    }
    for (auto i : part.key_indices) {
        REQUIRE(!seen[i]);
        seen[i] = true;
    }
}
