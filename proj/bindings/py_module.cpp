#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "diqkd/cascade.hpp"
#include "diqkd/errors.hpp"
#include "diqkd/harness.hpp"
#include "diqkd/postprocessing.hpp"
#include "diqkd/protocol.hpp"
#include "diqkd/statistics_model.hpp"

namespace py = pybind11;
using namespace diqkd;

namespace {

BitString to_bitstring(const std::vector<int>& bits) {
    BitString out;
    for (int b : bits) {
        if (b != 0 && b != 1) {
            throw std::invalid_argument("bits must be 0 or 1");
        }
        out.push_back(b);
    }
    return out;
}

std::vector<int> from_bitstring(const BitString& bits) {
    std::vector<int> out(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) out[i] = bits.bit(i);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Device-independent QKD simulator core";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<IncompleteStatisticsError>(m, "IncompleteStatisticsError");
    py::register_exception<ContractViolationError>(m, "ContractViolationError");
    py::register_exception<AbortSignal>(m, "AbortSignal");

    py::class_<NoiseModel>(m, "NoiseModel")
        .def(py::init<>())
        .def(py::init([](double visibility, double bitflip_prob, double key_readout_error) {
                 NoiseModel noise{visibility, bitflip_prob, key_readout_error};
                 noise.validate();
                 return noise;
             }),
             py::arg("visibility") = 1.0, py::arg("bitflip_prob") = 0.0,
             py::arg("key_readout_error") = 0.0)
        .def_readwrite("visibility", &NoiseModel::visibility)
        .def_readwrite("bitflip_prob", &NoiseModel::bitflip_prob)
        .def_readwrite("key_readout_error", &NoiseModel::key_readout_error);

    py::class_<InputPair>(m, "InputPair")
        .def(py::init([](int x, int y) { return InputPair{x, y}; }), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &InputPair::x)
        .def_readwrite("y", &InputPair::y);

    py::enum_<RoundType>(m, "RoundType")
        .value("Test", RoundType::Test)
        .value("Key", RoundType::Key);

    py::class_<RoundRecord>(m, "RoundRecord")
        .def_readonly("index", &RoundRecord::index)
        .def_readonly("type", &RoundRecord::type)
        .def_readonly("x", &RoundRecord::x)
        .def_readonly("y", &RoundRecord::y)
        .def_readonly("a", &RoundRecord::a)
        .def_readonly("b", &RoundRecord::b);

    py::class_<ProtocolConfig>(m, "ProtocolConfig")
        .def(py::init<>())
        .def_static("baseline", &ProtocolConfig::baseline)
        .def_readwrite("alice_angles_deg", &ProtocolConfig::alice_angles_deg)
        .def_readwrite("bob_angles_deg", &ProtocolConfig::bob_angles_deg)
        .def_readwrite("test_pairs", &ProtocolConfig::test_pairs)
        .def_readwrite("key_pairs", &ProtocolConfig::key_pairs)
        .def_readwrite("test_fraction", &ProtocolConfig::test_fraction)
        .def_readwrite("noise", &ProtocolConfig::noise)
        .def_readwrite("abort_s_threshold", &ProtocolConfig::abort_s_threshold);

    py::class_<ChshEstimate>(m, "ChshEstimate")
        .def_readonly("s_value", &ChshEstimate::s_value)
        .def("correlator", [](const ChshEstimate& est, int x, int y) {
            return est.correlator_values.at(InputPair{x, y});
        })
        .def("count", [](const ChshEstimate& est, int x, int y) {
            return est.counts.at(InputPair{x, y});
        });

    py::class_<SiftedKeys>(m, "SiftedKeys")
        .def_property_readonly("alice_bits", [](const SiftedKeys& keys) {
            return from_bitstring(keys.alice_bits);
        })
        .def_property_readonly("bob_bits", [](const SiftedKeys& keys) {
            return from_bitstring(keys.bob_bits);
        })
        .def_readonly("source_round_indices", &SiftedKeys::source_round_indices);

    m.def("correlator",
          [](double angle_a_deg, double angle_b_deg, const NoiseModel& noise, bool is_key_round) {
              return correlator({Party::Alice, 0, angle_a_deg},
                                {Party::Bob, 0, angle_b_deg}, noise, is_key_round);
          },
          py::arg("angle_a_deg"), py::arg("angle_b_deg"), py::arg("noise"),
          py::arg("is_key_round") = false);

    m.def("sample_products",
          [](double angle_a_deg, double angle_b_deg, const NoiseModel& noise,
             bool is_key_round, std::size_t n, std::uint64_t seed) {
              Rng rng(seed);
              std::vector<int> products(n);
              for (std::size_t i = 0; i < n; ++i) {
                  const OutcomePair pair = sample_outcome_pair(
                      {Party::Alice, 0, angle_a_deg}, {Party::Bob, 0, angle_b_deg},
                      noise, is_key_round, rng);
                  products[i] = pair.a * pair.b;
              }
              return products;
          },
          py::arg("angle_a_deg"), py::arg("angle_b_deg"), py::arg("noise"),
          py::arg("is_key_round"), py::arg("n"), py::arg("seed"));

    m.def("run_rounds", &run_rounds, py::arg("n_rounds"), py::arg("config"),
          py::arg("run_seed"));
    m.def("estimate_chsh",
          [](const std::vector<RoundRecord>& records, const ProtocolConfig& config) {
              return estimate_chsh(records, config.chsh_pairs);
          },
          py::arg("test_records"), py::arg("config"));
    m.def("sift_keys",
          [](const std::vector<RoundRecord>& records) { return sift_keys(records); },
          py::arg("key_records"));
    m.def("estimate_qber", &estimate_qber, py::arg("keys"));
    m.def("abort_check",
          [](const ChshEstimate& est, double threshold) {
              return abort_check(est, threshold) == AbortDecision::Abort;
          },
          py::arg("estimate"), py::arg("threshold") = 2.0);

    m.def("block_schedule", &block_schedule, py::arg("qber_estimate"), py::arg("n"),
          py::arg("passes"));
    m.def("reconcile",
          [](const std::vector<int>& alice, const std::vector<int>& bob, int passes,
             std::uint64_t seed) {
              const BitString a = to_bitstring(alice);
              const BitString b = to_bitstring(bob);
              const std::size_t initial = hamming_distance(a, b);
              const double q = a.empty() ? 0.0
                                         : static_cast<double>(initial) /
                                               static_cast<double>(a.size());
              const auto schedule = block_schedule(std::min(q, 0.5), a.size(), passes);
              const auto [corrected, transcript] =
                  run_cascade(a, b, make_pass_plans(a.size(), schedule, seed));
              py::dict stats;
              stats["initial_errors"] = initial;
              stats["residual_errors"] = hamming_distance(a, corrected);
              stats["corrections"] = transcript.corrections.size();
              stats["leaked_bits"] = transcript.leaked_bits;
              return py::make_tuple(from_bitstring(corrected), stats);
          },
          py::arg("alice"), py::arg("bob"), py::arg("passes") = 4, py::arg("seed") = 7);

    m.def("verify_keys",
          [](const std::vector<int>& a, const std::vector<int>& b, std::size_t tag_len,
             std::uint64_t seed) {
              return verify_keys(to_bitstring(a), to_bitstring(b), tag_len, seed) ==
                     VerifyResult::Match;
          },
          py::arg("key_a"), py::arg("key_b"), py::arg("tag_len") = 64, py::arg("seed") = 7);
    m.def("universal_hash",
          [](const std::vector<int>& key, std::size_t output_len, std::uint64_t seed) {
              Rng rng(seed);
              const BitString bits = to_bitstring(key);
              const HashSpec spec = HashSpec::random(bits.size(), output_len, rng);
              return from_bitstring(universal_hash(bits, spec));
          },
          py::arg("key"), py::arg("output_len"), py::arg("seed"));

    py::class_<KeyRateReport>(m, "KeyRateReport")
        .def_readonly("s_value", &KeyRateReport::s_value)
        .def_readonly("qber", &KeyRateReport::qber)
        .def_readonly("leaked_bits", &KeyRateReport::leaked_bits)
        .def_readonly("sifted_len", &KeyRateReport::sifted_len)
        .def_readonly("rate_per_bit", &KeyRateReport::rate_per_bit)
        .def_readonly("final_len", &KeyRateReport::final_len);

    m.def("key_rate",
          [](double s, double q, std::size_t leaked_bits, std::size_t sifted_len) {
              return key_rate(s, q, leaked_bits, sifted_len);
          },
          py::arg("s"), py::arg("q"), py::arg("leaked_bits") = 0,
          py::arg("sifted_len") = 0);
    m.def("key_rate_per_bit", &key_rate_per_bit, py::arg("s"), py::arg("q"));

    m.def("simulate_summary",
          [](std::size_t rounds, int repetitions, std::uint64_t seed, int threads) {
              ExperimentConfig cfg = ExperimentConfig::baseline();
              cfg.n_rounds = rounds;
              cfg.repetitions = repetitions;
              cfg.root_seed = seed;
              cfg.threads = threads;
              return summary_to_json(baseline_run(cfg));
          },
          py::arg("rounds") = 10000, py::arg("repetitions") = 1, py::arg("seed") = 7,
          py::arg("threads") = 1);
}
