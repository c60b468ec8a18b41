#pragma once

#include <vector>

#include "diqkd/protocol.hpp"

namespace diqkd::testing {

// Worked 20-round example: (index, type, x, a, y, b). Key rounds use the
// (x=0, y=2) input pair; test rounds combine x in {0,1} with y in {0,1}.
struct ExampleRow {
    std::uint32_t index;
    RoundType type;
    int x;
    int a;
    int y;
    int b;
};

inline const std::vector<ExampleRow>& example_rows() {
    static const std::vector<ExampleRow> rows = {
        {1, RoundType::Test, 1, +1, 0, -1},
        {2, RoundType::Test, 1, +1, 0, -1},
        {3, RoundType::Key, 0, +1, 2, -1},
        {4, RoundType::Key, 0, +1, 2, +1},
        {5, RoundType::Key, 0, -1, 2, -1},
        {6, RoundType::Key, 0, +1, 2, -1},
        {7, RoundType::Test, 1, -1, 1, -1},
        {8, RoundType::Test, 1, -1, 1, +1},
        {9, RoundType::Test, 1, -1, 0, +1},
        {10, RoundType::Test, 1, +1, 1, -1},
        {11, RoundType::Key, 0, +1, 2, -1},
        {12, RoundType::Test, 1, -1, 0, -1},
        {13, RoundType::Key, 0, +1, 2, +1},
        {14, RoundType::Test, 1, -1, 1, -1},
        {15, RoundType::Test, 1, +1, 1, -1},
        {16, RoundType::Key, 0, -1, 2, -1},
        {17, RoundType::Key, 0, -1, 2, -1},
        {18, RoundType::Key, 0, +1, 2, -1},
        {19, RoundType::Test, 1, -1, 1, +1},
        {20, RoundType::Test, 1, +1, 1, +1},
    };
    return rows;
}

inline std::vector<RoundRecord> example_records() {
    std::vector<RoundRecord> records;
    for (const auto& row : example_rows()) {
        RoundRecord rec;
        rec.index = row.index;
        rec.type = row.type;
        rec.x = row.x;
        rec.y = row.y;
        rec.a = row.a;
        rec.b = row.b;
        records.push_back(rec);
    }
    return records;
}

// Protocol configuration matching the worked example's alphabets: Alice
// x in {0,1}, Bob y in {0,1,2}; key rounds at (0,2).
inline ProtocolConfig example_config() {
    ProtocolConfig cfg;
    cfg.alice_angles_deg = {0.0, -45.0};
    cfg.bob_angles_deg = {-22.5, 22.5, 0.0};
    cfg.test_pairs = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    cfg.key_pairs = {{0, 2}};
    cfg.chsh_pairs = {InputPair{0, 0}, InputPair{0, 1}, InputPair{1, 0}, InputPair{1, 1}};
    cfg.noise = NoiseModel{};
    return cfg;
}

}  // namespace diqkd::testing
