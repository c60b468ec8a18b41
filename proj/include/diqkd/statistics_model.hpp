#pragma once

#include "diqkd/rng.hpp"

namespace diqkd {

enum class Party { Alice, Bob };

// One measurement input: which party, which input index, and the analyzer
// angle that the index selects. Angles are degrees in [-90, +90).
struct MeasurementSetting {
    Party party = Party::Alice;
    int input_index = 0;
    double angle_deg = 0.0;
};

// Device imperfections, all classical from the protocol's point of view:
//  - visibility     multiplicative degradation of the ideal correlation,
//  - bitflip_prob   symmetric flip applied independently to each party's
//                   outcome in every round,
//  - key_readout_error  extra per-party flip applied in key rounds only.
struct NoiseModel {
    double visibility = 1.0;
    double bitflip_prob = 0.0;
    double key_readout_error = 0.0;

    void validate() const;
};

// Binary outcomes a, b in {-1, +1}. There is no no-click outcome.
struct OutcomePair {
    int a = +1;
    int b = +1;
};

// Expected product of outcomes for the given settings under the configured
// noise. The underlying joint law is P(a,b) = (1 + a*b*E)/4 with
// E = visibility * cos(2 * (theta_A - theta_B)), degraded by (1-2p)^2 per
// flip channel. Marginals stay unbiased. |result| <= 1.
double correlator(const MeasurementSetting& setting_a,
                  const MeasurementSetting& setting_b,
                  const NoiseModel& noise,
                  bool is_key_round);

// Negates each outcome independently with probability p. Consumes exactly
// two draws regardless of p.
OutcomePair apply_bitflip(OutcomePair pair, double p, Rng& rng);

// Draws one outcome pair. Fuses entanglement generation, measurement and
// readout into a single sampling step; consumes exactly six draws per call
// so round streams stay aligned independently of the round type.
OutcomePair sample_outcome_pair(const MeasurementSetting& setting_a,
                                const MeasurementSetting& setting_b,
                                const NoiseModel& noise,
                                bool is_key_round,
                                Rng& rng);

}  // namespace diqkd
