#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "diqkd/cascade.hpp"
#include "diqkd/postprocessing.hpp"
#include "diqkd/protocol.hpp"

namespace diqkd {

// Experiment-level configuration: run sizes, seeding, the noise grid and
// the embedded protocol configuration. Loadable from a flat key=value file.
struct ExperimentConfig {
    std::size_t n_rounds = 10000;
    int repetitions = 50;
    std::uint64_t root_seed = 7;
    std::vector<double> noise_grid;  // sorted, in [0,1]
    int passes = 4;
    int heatmap_passes = 20;
    std::size_t heatmap_length = 10000;
    ProtocolConfig protocol = ProtocolConfig::baseline();
    std::string output_dir = ".";
    int threads = 1;

    static ExperimentConfig baseline();
    void validate() const;
};

ExperimentConfig load_config_file(const std::string& path);

// Parses "a:b:step" (inclusive range) or a comma-separated list.
std::vector<double> parse_grid(const std::string& text);

struct SingleRunResult {
    double s_value = 0.0;
    bool aborted = false;
    double qber_pre = 0.0;
    double qber_post = 0.0;
    std::size_t sifted_len = 0;
    std::size_t leaked_bits = 0;
    std::size_t final_len = 0;
    double efficiency = 0.0;
    double rate_per_bit = 0.0;
    bool verified = false;
};

struct RunOptions {
    bool force_continue_on_abort = false;  // keep reconciling even if S <= 2
    bool do_amplify = true;
    int passes = 4;
};

// One end-to-end protocol execution: rounds, CHSH estimate, abort check,
// sifting, Cascade, verification, privacy amplification.
SingleRunResult single_protocol_run(std::size_t n_rounds,
                                    const ProtocolConfig& protocol,
                                    std::uint64_t run_seed,
                                    const RunOptions& options);

struct RunSummary {
    double s_value = 0.0;
    double std_s = 0.0;
    double qber_pre = 0.0;
    double qber_post = 0.0;
    double sifted_len = 0.0;
    double leaked_bits = 0.0;
    double efficiency = 0.0;
    double final_len = 0.0;
    bool aborted = false;  // true only when every repetition aborted
    int aborted_reps = 0;
    std::uint64_t seed = 0;
    std::size_t n_rounds = 0;
    int repetitions = 0;
    std::vector<SingleRunResult> runs;
};

// Repetition r uses the substream derive_seed(root_seed, {kRepetition, r}).
// Values in the summary are means over repetitions; per-run results are kept
// for inspection. Deterministic for a fixed seed at any thread count.
RunSummary baseline_run(const ExperimentConfig& config);

std::string summary_to_json(const RunSummary& summary);

struct SweepRow {
    double noise = 0.0;
    double mean_s = 0.0;
    double std_s = 0.0;
    double qber_pre = 0.0;
    double qber_post = 0.0;
    int reps = 0;
};

// For each grid value, runs `repetitions` seeded simulations with the
// bit-flip probability set to the grid value (other noise parameters from
// the base model), recording S statistics and pre/post-Cascade QBER.
std::vector<SweepRow> noise_sweep(const ExperimentConfig& config);

std::string sweep_to_csv(std::span<const SweepRow> rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

// Linear-interpolated noise levels where mean S crosses `level`, ascending.
std::vector<double> s_crossings(std::span<const SweepRow> rows, double level = 2.0);

struct HeatmapResult {
    std::vector<double> noise_levels;
    std::vector<double> measured_qber;  // pre-Cascade QBER probed per row
    int passes = 0;
    // ratios[row][pass] for pass 0..passes; NaN marks not-applicable rows
    // (no initial errors at that noise level).
    std::vector<std::vector<double>> ratios;
};

// Rows are noise levels; errors are injected i.i.d. at the probed
// pre-Cascade QBER of each level; cells hold the mean remaining-error ratio
// after each pass.
HeatmapResult cascade_heatmap(const ExperimentConfig& config);

std::string heatmap_to_csv(const HeatmapResult& result);

struct HeatmapCsvRow {
    double noise = 0.0;
    int pass = 0;
    double ratio = 0.0;  // NaN for "na" cells
};
std::vector<HeatmapCsvRow> parse_heatmap_csv(const std::string& text);

std::string rounds_to_csv(std::span<const RoundRecord> records);
std::vector<RoundRecord> parse_rounds_csv(const std::string& text);

// Line-oriented transcript export: "parity,<pass>,<block>,<dir>,<bit>" then
// "correction,<pass>,<position>".
std::string transcript_to_lines(const CascadeTranscript& transcript);

// Shortest representation that round-trips exactly.
std::string format_double(double value);

}  // namespace diqkd
