#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diqkd/errors.hpp"
#include "diqkd/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAbort = 2;

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_path;
    std::optional<std::string> out_path;
    std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--seed", flags.seed, "Root seed");
    cmd->add_option("--config", flags.config_path, "Config file (flat key = value)");
    cmd->add_option("--out", flags.out_path, "Output path ('-' for stdout)");
    cmd->add_option("--threads", flags.threads, "Worker threads for repetitions");
}

diqkd::ExperimentConfig resolve_config(const CommonFlags& flags) {
    diqkd::ExperimentConfig cfg = flags.config_path
                                      ? diqkd::load_config_file(*flags.config_path)
                                      : diqkd::ExperimentConfig::baseline();
    if (flags.seed) cfg.root_seed = *flags.seed;
    if (flags.threads) cfg.threads = *flags.threads;
    if (const char* dir = std::getenv("DIQKD_OUTPUT_DIR"); dir && cfg.output_dir == ".") {
        cfg.output_dir = dir;
    }
    return cfg;
}

void write_output(const CommonFlags& flags, const diqkd::ExperimentConfig& cfg,
                  const std::string& default_name, const std::string& content) {
    if (flags.out_path && *flags.out_path == "-") {
        std::cout << content;
        return;
    }
    std::filesystem::path path;
    if (flags.out_path) {
        path = *flags.out_path;
    } else {
        path = std::filesystem::path(cfg.output_dir) / default_name;
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw diqkd::ConfigError("cannot write " + path.string());
    out << content;
    std::cerr << "wrote " << path.string() << "\n";
}

diqkd::BitString read_bits_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw diqkd::ConfigError("cannot open " + path);
    std::string bits;
    char c;
    while (in.get(c)) {
        if (c == '0' || c == '1') bits.push_back(c);
        else if (!std::isspace(static_cast<unsigned char>(c))) {
            throw diqkd::ConfigError(path + ": expected only '0'/'1' characters");
        }
    }
    return diqkd::BitString::from_string(bits);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Device-independent QKD simulator: CHSH statistics, Cascade "
                 "reconciliation and privacy amplification"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    std::optional<std::size_t> sim_rounds;
    std::optional<int> sim_reps;
    std::optional<std::string> dump_rounds_path;
    auto* simulate = app.add_subcommand("simulate", "Run the full protocol and emit a summary JSON");
    add_common(simulate, sim_flags);
    simulate->add_option("--rounds", sim_rounds, "Rounds per repetition");
    simulate->add_option("--reps", sim_reps, "Number of repetitions");
    simulate->add_option("--dump-rounds", dump_rounds_path, "Also dump round records (CSV) of repetition 1");

    CommonFlags sweep_flags;
    std::optional<std::string> sweep_grid;
    std::optional<std::size_t> sweep_rounds;
    std::optional<int> sweep_reps;
    auto* sweep = app.add_subcommand("sweep", "Noise sweep: S and pre/post-Cascade QBER per grid point (CSV)");
    add_common(sweep, sweep_flags);
    sweep->add_option("--grid", sweep_grid, "Noise grid: start:stop:step or comma list");
    sweep->add_option("--rounds", sweep_rounds, "Rounds per repetition");
    sweep->add_option("--reps", sweep_reps, "Repetitions per grid point");

    CommonFlags heat_flags;
    std::optional<std::string> heat_grid;
    std::optional<int> heat_passes;
    std::optional<std::size_t> heat_length;
    std::optional<int> heat_reps;
    auto* heatmap = app.add_subcommand("heatmap", "Remaining-error ratio per Cascade pass and noise level (CSV)");
    add_common(heatmap, heat_flags);
    heatmap->add_option("--grid", heat_grid, "Noise grid: start:stop:step or comma list");
    heatmap->add_option("--passes", heat_passes, "Cascade passes (columns)");
    heatmap->add_option("--length", heat_length, "Key length per cell");
    heatmap->add_option("--reps", heat_reps, "Repetitions per cell");

    CommonFlags casc_flags;
    std::optional<std::string> casc_alice;
    std::optional<std::string> casc_bob;
    std::optional<std::size_t> casc_length;
    std::optional<double> casc_qber;
    std::optional<int> casc_passes;
    auto* cascade = app.add_subcommand("cascade", "Standalone reconciliation of two bit files or a generated error channel");
    add_common(cascade, casc_flags);
    cascade->add_option("--alice", casc_alice, "Alice bit file ('0'/'1' text)");
    cascade->add_option("--bob", casc_bob, "Bob bit file ('0'/'1' text)");
    cascade->add_option("--length", casc_length, "Generated key length");
    cascade->add_option("--qber", casc_qber, "Generated channel error rate");
    cascade->add_option("--passes", casc_passes, "Cascade passes");

    CommonFlags rate_flags;
    double rate_s = 0.0;
    double rate_q = 0.0;
    std::size_t rate_leaked = 0;
    std::size_t rate_sifted = 0;
    std::size_t rate_tag_bits = 64;
    std::size_t rate_margin = 100;
    auto* rate = app.add_subcommand("rate", "Secret key rate for a given S and QBER");
    add_common(rate, rate_flags);
    rate->add_option("--s", rate_s, "CHSH value")->required();
    rate->add_option("--q", rate_q, "QBER")->required();
    rate->add_option("--leaked", rate_leaked, "Cascade leakage in bits");
    rate->add_option("--sifted", rate_sifted, "Sifted key length");
    rate->add_option("--tag-bits", rate_tag_bits, "Verification tag length");
    rate->add_option("--margin", rate_margin, "Security margin in bits");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            diqkd::ExperimentConfig cfg = resolve_config(sim_flags);
            if (sim_rounds) cfg.n_rounds = *sim_rounds;
            if (sim_reps) cfg.repetitions = *sim_reps;
            else if (!sim_flags.config_path) cfg.repetitions = 1;
            const diqkd::RunSummary summary = diqkd::baseline_run(cfg);
            write_output(sim_flags, cfg, "summary.json", diqkd::summary_to_json(summary));
            if (dump_rounds_path) {
                const auto records = diqkd::run_rounds(
                    cfg.n_rounds, cfg.protocol,
                    diqkd::derive_seed(cfg.root_seed, {diqkd::stream::kRepetition, 1}));
                std::ofstream out(*dump_rounds_path, std::ios::binary);
                if (!out) throw diqkd::ConfigError("cannot write " + *dump_rounds_path);
                out << diqkd::rounds_to_csv(records);
            }
            if (summary.aborted) {
                std::cerr << "protocol aborted: mean S = " << summary.s_value
                          << " does not violate the classical bound\n";
                return kExitAbort;
            }
            return kExitOk;
        }
        if (sweep->parsed()) {
            diqkd::ExperimentConfig cfg = resolve_config(sweep_flags);
            if (sweep_grid) cfg.noise_grid = diqkd::parse_grid(*sweep_grid);
            if (sweep_rounds) cfg.n_rounds = *sweep_rounds;
            if (sweep_reps) cfg.repetitions = *sweep_reps;
            const auto rows = diqkd::noise_sweep(cfg);
            write_output(sweep_flags, cfg, "sweep.csv", diqkd::sweep_to_csv(rows));
            return kExitOk;
        }
        if (heatmap->parsed()) {
            diqkd::ExperimentConfig cfg = resolve_config(heat_flags);
            if (heat_grid) cfg.noise_grid = diqkd::parse_grid(*heat_grid);
            if (heat_passes) cfg.heatmap_passes = *heat_passes;
            if (heat_length) cfg.heatmap_length = *heat_length;
            if (heat_reps) cfg.repetitions = *heat_reps;
            const auto result = diqkd::cascade_heatmap(cfg);
            write_output(heat_flags, cfg, "heatmap.csv", diqkd::heatmap_to_csv(result));
            return kExitOk;
        }
        if (cascade->parsed()) {
            diqkd::ExperimentConfig cfg = resolve_config(casc_flags);
            if (casc_passes) cfg.passes = *casc_passes;
            diqkd::BitString alice;
            diqkd::BitString bob;
            if (casc_alice && casc_bob) {
                alice = read_bits_file(*casc_alice);
                bob = read_bits_file(*casc_bob);
            } else if (casc_length && casc_qber) {
                diqkd::Rng rng(cfg.root_seed);
                alice = diqkd::BitString::random(*casc_length, rng);
                bob = alice;
                for (std::size_t i = 0; i < bob.size(); ++i) {
                    if (rng.bernoulli(*casc_qber)) bob.flip(i);
                }
            } else {
                throw diqkd::ConfigError(
                    "cascade: pass either --alice and --bob files or --length and --qber");
            }
            if (alice.size() != bob.size()) {
                throw diqkd::ConfigError("cascade: input lengths differ");
            }
            const std::size_t initial = diqkd::hamming_distance(alice, bob);
            const double q = initial == 0
                                 ? 0.0
                                 : static_cast<double>(initial) /
                                       static_cast<double>(alice.size());
            const auto schedule =
                diqkd::block_schedule(std::min(q, 0.5), alice.size(), cfg.passes);
            const auto plans =
                diqkd::make_pass_plans(alice.size(), schedule, cfg.root_seed);
            const auto [corrected, transcript] = diqkd::run_cascade(alice, bob, plans);
            write_output(casc_flags, cfg, "transcript.txt",
                         diqkd::transcript_to_lines(transcript));
            nlohmann::ordered_json j;
            j["length"] = alice.size();
            j["initial_errors"] = initial;
            j["residual_errors"] = diqkd::hamming_distance(alice, corrected);
            j["corrections"] = transcript.corrections.size();
            j["leaked_bits"] = transcript.leaked_bits;
            if (initial > 0 && q < 0.5) {
                j["efficiency"] = diqkd::leakage_efficiency(transcript, alice.size(), q);
            }
            std::cout << j.dump(2) << "\n";
            return kExitOk;
        }
        if (rate->parsed()) {
            diqkd::KeyRateOptions options;
            options.verify_tag_bits = rate_tag_bits;
            options.security_margin_bits = rate_margin;
            try {
                const diqkd::KeyRateReport report =
                    diqkd::key_rate(rate_s, rate_q, rate_leaked, rate_sifted, options);
                nlohmann::ordered_json j;
                j["s_value"] = report.s_value;
                j["qber"] = report.qber;
                j["rate_per_bit"] = report.rate_per_bit;
                j["leaked_bits"] = report.leaked_bits;
                j["sifted_len"] = report.sifted_len;
                j["final_len"] = report.final_len;
                std::cout << j.dump(2) << "\n";
            } catch (const diqkd::AbortSignal& e) {
                std::cerr << "abort: " << e.what() << "\n";
                return kExitAbort;
            }
            return kExitOk;
        }
    } catch (const diqkd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
