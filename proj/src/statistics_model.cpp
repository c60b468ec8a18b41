#include "diqkd/statistics_model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diqkd {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double ideal_correlation(const MeasurementSetting& a,
                         const MeasurementSetting& b,
                         double visibility) {
    return visibility * std::cos(2.0 * (a.angle_deg - b.angle_deg) * kDegToRad);
}

}  // namespace

void NoiseModel::validate() const {
    if (!(visibility >= 0.0 && visibility <= 1.0)) {
        throw std::invalid_argument("NoiseModel: visibility must be in [0,1]");
    }
    if (!(bitflip_prob >= 0.0 && bitflip_prob <= 1.0)) {
        throw std::invalid_argument("NoiseModel: bitflip_prob must be in [0,1]");
    }
    if (!(key_readout_error >= 0.0 && key_readout_error <= 0.5)) {
        throw std::invalid_argument("NoiseModel: key_readout_error must be in [0,0.5]");
    }
}

double correlator(const MeasurementSetting& setting_a,
                  const MeasurementSetting& setting_b,
                  const NoiseModel& noise,
                  bool is_key_round) {
    noise.validate();
    double e = ideal_correlation(setting_a, setting_b, noise.visibility);
    const double flip_factor = 1.0 - 2.0 * noise.bitflip_prob;
    e *= flip_factor * flip_factor;
    if (is_key_round) {
        const double readout_factor = 1.0 - 2.0 * noise.key_readout_error;
        e *= readout_factor * readout_factor;
    }
    return e;
}

OutcomePair apply_bitflip(OutcomePair pair, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("apply_bitflip: p must be in [0,1]");
    }
    if (rng.bernoulli(p)) pair.a = -pair.a;
    if (rng.bernoulli(p)) pair.b = -pair.b;
    return pair;
}

OutcomePair sample_outcome_pair(const MeasurementSetting& setting_a,
                                const MeasurementSetting& setting_b,
                                const NoiseModel& noise,
                                bool is_key_round,
                                Rng& rng) {
    noise.validate();
    const double e = ideal_correlation(setting_a, setting_b, noise.visibility);

    OutcomePair pair;
    pair.a = rng.bernoulli(0.5) ? +1 : -1;
    pair.b = rng.bernoulli(0.5 * (1.0 + e)) ? pair.a : -pair.a;

    pair = apply_bitflip(pair, noise.bitflip_prob, rng);
    // Readout draws are consumed in test rounds too (with p = 0).
    pair = apply_bitflip(pair, is_key_round ? noise.key_readout_error : 0.0, rng);
    return pair;
}

}  // namespace diqkd
