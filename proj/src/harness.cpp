#include "diqkd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "diqkd/errors.hpp"

namespace diqkd {

namespace {

constexpr double kTsirelson = 2.8284271247461903;

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

double mean_of(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
    if (values.size() < 2) return 0.0;
    const double mu = mean_of(values);
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) parts.push_back(trim(item));
    return parts;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& part : split(text, ',')) {
        if (!part.empty()) out.push_back(std::stod(part));
    }
    return out;
}

std::vector<InputPair> parse_pair_list(const std::string& text) {
    std::vector<InputPair> out;
    for (const auto& part : split(text, ',')) {
        if (part.empty()) continue;
        const auto xy = split(part, ':');
        if (xy.size() != 2) {
            throw ConfigError("expected input pair as x:y, got '" + part + "'");
        }
        out.push_back({std::stoi(xy[0]), std::stoi(xy[1])});
    }
    return out;
}

bool parse_bool(const std::string& text) {
    if (text == "on" || text == "true" || text == "1" || text == "yes") return true;
    if (text == "off" || text == "false" || text == "0" || text == "no") return false;
    throw ConfigError("expected boolean value, got '" + text + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::baseline() {
    ExperimentConfig cfg;
    cfg.noise_grid = parse_grid("0:1:0.01");
    return cfg;
}

void ExperimentConfig::validate() const {
    protocol.validate();
    if (n_rounds < 1) throw ConfigError("ExperimentConfig: rounds must be >= 1");
    if (repetitions < 1) throw ConfigError("ExperimentConfig: repetitions must be >= 1");
    if (passes < 1 || heatmap_passes < 1) {
        throw ConfigError("ExperimentConfig: passes must be >= 1");
    }
    if (heatmap_length < 1) {
        throw ConfigError("ExperimentConfig: heatmap_length must be >= 1");
    }
    if (threads < 1) throw ConfigError("ExperimentConfig: threads must be >= 1");
    double prev = -1.0;
    for (double g : noise_grid) {
        if (!(g >= 0.0 && g <= 1.0)) {
            throw ConfigError("ExperimentConfig: noise grid values must lie in [0,1]");
        }
        if (g < prev) throw ConfigError("ExperimentConfig: noise grid must be sorted");
        prev = g;
    }
}

std::vector<double> parse_grid(const std::string& text) {
    const auto range = split(text, ':');
    if (range.size() == 3) {
        const double start = std::stod(range[0]);
        const double stop = std::stod(range[1]);
        const double step = std::stod(range[2]);
        if (step <= 0.0 || stop < start) {
            throw ConfigError("parse_grid: bad range '" + text + "'");
        }
        const auto count =
            static_cast<std::size_t>(std::llround((stop - start) / step)) + 1;
        std::vector<double> grid(count);
        for (std::size_t i = 0; i < count; ++i) {
            double v = start + static_cast<double>(i) * step;
            if (std::abs(v - stop) < 1e-12) v = stop;
            grid[i] = v;
        }
        return grid;
    }
    return parse_double_list(text);
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    ExperimentConfig cfg = ExperimentConfig::baseline();
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "rounds") cfg.n_rounds = std::stoull(value);
            else if (key == "repetitions") cfg.repetitions = std::stoi(value);
            else if (key == "seed") cfg.root_seed = std::stoull(value);
            else if (key == "passes") cfg.passes = std::stoi(value);
            else if (key == "heatmap_passes") cfg.heatmap_passes = std::stoi(value);
            else if (key == "heatmap_length") cfg.heatmap_length = std::stoull(value);
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "noise_grid") cfg.noise_grid = parse_grid(value);
            else if (key == "output_dir") cfg.output_dir = value;
            else if (key == "visibility") cfg.protocol.noise.visibility = std::stod(value);
            else if (key == "bitflip_prob") cfg.protocol.noise.bitflip_prob = std::stod(value);
            else if (key == "key_readout_error") cfg.protocol.noise.key_readout_error = std::stod(value);
            else if (key == "test_fraction") cfg.protocol.test_fraction = std::stod(value);
            else if (key == "alice_angles") cfg.protocol.alice_angles_deg = parse_double_list(value);
            else if (key == "bob_angles") cfg.protocol.bob_angles_deg = parse_double_list(value);
            else if (key == "test_pairs") cfg.protocol.test_pairs = parse_pair_list(value);
            else if (key == "key_pairs") cfg.protocol.key_pairs = parse_pair_list(value);
            else if (key == "chsh_pairs") {
                const auto pairs = parse_pair_list(value);
                if (pairs.size() != 4) {
                    throw ConfigError("chsh_pairs needs exactly 4 pairs");
                }
                std::copy(pairs.begin(), pairs.end(), cfg.protocol.chsh_pairs.begin());
            }
            else if (key == "input_probs") cfg.protocol.input_probs = parse_double_list(value);
            else if (key == "abort_threshold") cfg.protocol.abort_s_threshold = std::stod(value);
            else if (key == "qber_abort") cfg.protocol.qber_abort_enabled = parse_bool(value);
            else if (key == "qber_abort_threshold") cfg.protocol.qber_abort_threshold = std::stod(value);
            else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError(path + ":" + std::to_string(line_no) +
                              ": bad value for '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

SingleRunResult single_protocol_run(std::size_t n_rounds,
                                    const ProtocolConfig& protocol,
                                    std::uint64_t run_seed,
                                    const RunOptions& options) {
    SingleRunResult result;
    const auto records = run_rounds(n_rounds, protocol, run_seed);

    std::vector<RoundRecord> test_records;
    std::vector<RoundRecord> key_records;
    for (const auto& rec : records) {
        (rec.type == RoundType::Test ? test_records : key_records).push_back(rec);
    }

    const ChshEstimate est = estimate_chsh(test_records, protocol.chsh_pairs);
    result.s_value = est.s_value;
    result.aborted =
        abort_check(est, protocol.abort_s_threshold) == AbortDecision::Abort;

    const SiftedKeys keys = sift_keys(key_records);
    if (keys.alice_bits.empty()) {
        throw ConfigError("single_protocol_run: no key rounds were generated");
    }
    result.sifted_len = keys.alice_bits.size();
    result.qber_pre = estimate_qber(keys);
    if (protocol.qber_abort_enabled &&
        result.qber_pre >= protocol.qber_abort_threshold) {
        result.aborted = true;
    }
    if (result.aborted && !options.force_continue_on_abort) {
        result.qber_post = result.qber_pre;
        return result;
    }

    const auto schedule = block_schedule(std::min(result.qber_pre, 0.5),
                                         keys.alice_bits.size(), options.passes);
    const auto plans = make_pass_plans(keys.alice_bits.size(), schedule, run_seed);
    CascadeSession session(keys.alice_bits, keys.bob_bits, plans);
    session.run_all();
    result.qber_post =
        static_cast<double>(session.residual_errors()) /
        static_cast<double>(keys.alice_bits.size());
    result.leaked_bits = session.transcript().leaked_bits;
    result.verified = verify_keys(session.alice(), session.corrected_bob(), 64,
                                  run_seed) == VerifyResult::Match;
    if (result.qber_pre > 0.0 && result.qber_pre < 0.5) {
        result.efficiency =
            leakage_efficiency(session.transcript(), keys.alice_bits.size(),
                               result.qber_pre);
    }

    if (!result.aborted) {
        const double s_eff = std::min(result.s_value, kTsirelson);
        const double q_eff = std::min(result.qber_pre, 0.499999);
        const KeyRateReport report =
            key_rate(s_eff, q_eff, result.leaked_bits, result.sifted_len);
        result.rate_per_bit = report.rate_per_bit;
        result.final_len = report.final_len;
        if (options.do_amplify && report.final_len > 0) {
            Rng hash_rng(derive_seed(run_seed, {stream::kHashSeed}));
            const HashSpec spec = HashSpec::random(result.sifted_len,
                                                   report.final_len, hash_rng);
            const BitString final_key = universal_hash(session.alice(), spec);
            (void)final_key;  // keys are not persisted by the harness
        }
    }
    return result;
}

RunSummary baseline_run(const ExperimentConfig& config) {
    config.validate();
    RunSummary summary;
    summary.seed = config.root_seed;
    summary.n_rounds = config.n_rounds;
    summary.repetitions = config.repetitions;
    summary.runs.resize(static_cast<std::size_t>(config.repetitions));

    RunOptions options;
    options.passes = config.passes;
    parallel_for(summary.runs.size(), config.threads, [&](std::size_t r) {
        const std::uint64_t run_seed =
            derive_seed(config.root_seed, {stream::kRepetition, r + 1});
        summary.runs[r] =
            single_protocol_run(config.n_rounds, config.protocol, run_seed, options);
    });

    std::vector<double> s_values;
    s_values.reserve(summary.runs.size());
    for (const auto& run : summary.runs) {
        s_values.push_back(run.s_value);
        summary.qber_pre += run.qber_pre;
        summary.qber_post += run.qber_post;
        summary.sifted_len += static_cast<double>(run.sifted_len);
        summary.leaked_bits += static_cast<double>(run.leaked_bits);
        summary.efficiency += run.efficiency;
        summary.final_len += static_cast<double>(run.final_len);
        summary.aborted_reps += run.aborted ? 1 : 0;
    }
    const double n = static_cast<double>(summary.runs.size());
    summary.s_value = mean_of(s_values);
    summary.std_s = sample_std(s_values);
    summary.qber_pre /= n;
    summary.qber_post /= n;
    summary.sifted_len /= n;
    summary.leaked_bits /= n;
    summary.efficiency /= n;
    summary.final_len /= n;
    summary.aborted = summary.aborted_reps == config.repetitions;
    return summary;
}

std::string summary_to_json(const RunSummary& summary) {
    nlohmann::ordered_json j;
    j["s_value"] = summary.s_value;
    j["qber_pre"] = summary.qber_pre;
    j["qber_post"] = summary.qber_post;
    j["sifted_len"] = summary.sifted_len;
    j["leaked_bits"] = summary.leaked_bits;
    j["efficiency"] = summary.efficiency;
    j["final_len"] = summary.final_len;
    j["aborted"] = summary.aborted;
    j["seed"] = summary.seed;
    j["rounds"] = summary.n_rounds;
    j["repetitions"] = summary.repetitions;
    j["aborted_reps"] = summary.aborted_reps;
    j["std_s"] = summary.std_s;
    return j.dump(2) + "\n";
}

std::vector<SweepRow> noise_sweep(const ExperimentConfig& config) {
    config.validate();
    if (config.noise_grid.empty()) {
        throw ConfigError("noise_sweep: empty noise grid");
    }
    const std::size_t n_grid = config.noise_grid.size();
    const std::size_t reps = static_cast<std::size_t>(config.repetitions);
    std::vector<SingleRunResult> cells(n_grid * reps);

    RunOptions options;
    options.passes = config.passes;
    options.force_continue_on_abort = true;  // QBER is recorded on both sides of S=2
    options.do_amplify = false;

    parallel_for(n_grid * reps, config.threads, [&](std::size_t idx) {
        const std::size_t g = idx / reps;
        const std::size_t r = idx % reps;
        ProtocolConfig protocol = config.protocol;
        protocol.noise.bitflip_prob = config.noise_grid[g];
        const std::uint64_t run_seed =
            derive_seed(config.root_seed, {stream::kSweep, g + 1, r + 1});
        cells[idx] = single_protocol_run(config.n_rounds, protocol, run_seed, options);
    });

    std::vector<SweepRow> rows(n_grid);
    for (std::size_t g = 0; g < n_grid; ++g) {
        std::vector<double> s_values(reps);
        double qber_pre = 0.0;
        double qber_post = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto& cell = cells[g * reps + r];
            s_values[r] = cell.s_value;
            qber_pre += cell.qber_pre;
            qber_post += cell.qber_post;
        }
        rows[g].noise = config.noise_grid[g];
        rows[g].mean_s = mean_of(s_values);
        rows[g].std_s = sample_std(s_values);
        rows[g].qber_pre = qber_pre / static_cast<double>(reps);
        rows[g].qber_post = qber_post / static_cast<double>(reps);
        rows[g].reps = config.repetitions;
    }
    return rows;
}

std::string format_double(double value) {
    return nlohmann::json(value).dump();
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
    std::ostringstream out;
    out << "noise,mean_s,std_s,qber_pre,qber_post,reps\n";
    for (const auto& row : rows) {
        out << format_double(row.noise) << ',' << format_double(row.mean_s) << ','
            << format_double(row.std_s) << ',' << format_double(row.qber_pre) << ','
            << format_double(row.qber_post) << ',' << row.reps << '\n';
    }
    return out.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "noise,mean_s,std_s,qber_pre,qber_post,reps") {
        throw ConfigError("parse_sweep_csv: bad header");
    }
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 6) throw ConfigError("parse_sweep_csv: bad row");
        SweepRow row;
        row.noise = std::stod(fields[0]);
        row.mean_s = std::stod(fields[1]);
        row.std_s = std::stod(fields[2]);
        row.qber_pre = std::stod(fields[3]);
        row.qber_post = std::stod(fields[4]);
        row.reps = std::stoi(fields[5]);
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> s_crossings(std::span<const SweepRow> rows, double level) {
    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const double a = rows[i].mean_s - level;
        const double b = rows[i + 1].mean_s - level;
        if (a == 0.0) {
            crossings.push_back(rows[i].noise);
        } else if ((a > 0.0) != (b > 0.0)) {
            const double t = a / (a - b);
            crossings.push_back(rows[i].noise +
                                t * (rows[i + 1].noise - rows[i].noise));
        }
    }
    return crossings;
}

HeatmapResult cascade_heatmap(const ExperimentConfig& config) {
    config.validate();
    if (config.noise_grid.empty()) {
        throw ConfigError("cascade_heatmap: empty noise grid");
    }
    HeatmapResult result;
    result.noise_levels = config.noise_grid;
    result.passes = config.heatmap_passes;
    const std::size_t n_grid = config.noise_grid.size();
    const std::size_t reps = static_cast<std::size_t>(config.repetitions);
    result.measured_qber.assign(n_grid, 0.0);
    result.ratios.assign(
        n_grid,
        std::vector<double>(static_cast<std::size_t>(config.heatmap_passes) + 1, 0.0));

    // Probe the pre-Cascade QBER of each noise level with one protocol run.
    RunOptions probe_options;
    probe_options.force_continue_on_abort = true;
    probe_options.do_amplify = false;
    probe_options.passes = 1;
    std::vector<double> probed(n_grid, 0.0);
    parallel_for(n_grid, config.threads, [&](std::size_t g) {
        ProtocolConfig protocol = config.protocol;
        protocol.noise.bitflip_prob = config.noise_grid[g];
        const auto records =
            run_rounds(config.n_rounds, protocol,
                       derive_seed(config.root_seed, {stream::kQberProbe, g + 1}));
        std::vector<RoundRecord> key_records;
        for (const auto& rec : records) {
            if (rec.type == RoundType::Key) key_records.push_back(rec);
        }
        const SiftedKeys keys = sift_keys(key_records);
        probed[g] = keys.alice_bits.empty() ? 0.0 : estimate_qber(keys);
    });
    result.measured_qber = probed;

    const std::size_t length = config.heatmap_length;
    std::vector<std::vector<std::vector<double>>> per_rep(
        n_grid, std::vector<std::vector<double>>(reps));
    parallel_for(n_grid * reps, config.threads, [&](std::size_t idx) {
        const std::size_t g = idx / reps;
        const std::size_t r = idx % reps;
        const double q = probed[g];
        if (q <= 0.0) return;
        const std::uint64_t seed =
            derive_seed(config.root_seed, {stream::kHeatmap, g + 1, r + 1});
        Rng rng(seed);
        const BitString alice = BitString::random(length, rng);
        BitString bob = alice;
        for (std::size_t i = 0; i < length; ++i) {
            if (rng.bernoulli(q)) bob.flip(i);
        }
        const std::size_t e = hamming_distance(alice, bob);
        if (e == 0) return;
        const auto schedule =
            block_schedule(std::min(q, 0.5), length, config.heatmap_passes);
        CascadeSession session(alice, bob, make_pass_plans(length, schedule, seed));
        auto& ratios = per_rep[g][r];
        ratios.resize(static_cast<std::size_t>(config.heatmap_passes) + 1);
        ratios[0] = 1.0;
        for (int pass = 1; pass <= config.heatmap_passes; ++pass) {
            session.run_pass(pass);
            ratios[static_cast<std::size_t>(pass)] =
                remaining_error_ratio(alice, session.corrected_bob(), e);
        }
    });

    for (std::size_t g = 0; g < n_grid; ++g) {
        std::size_t used = 0;
        auto& row = result.ratios[g];
        for (std::size_t r = 0; r < reps; ++r) {
            if (per_rep[g][r].empty()) continue;
            ++used;
            for (std::size_t c = 0; c < row.size(); ++c) row[c] += per_rep[g][r][c];
        }
        if (used == 0) {
            std::fill(row.begin(), row.end(),
                      std::numeric_limits<double>::quiet_NaN());
        } else {
            for (auto& cell : row) cell /= static_cast<double>(used);
        }
    }
    return result;
}

std::string heatmap_to_csv(const HeatmapResult& result) {
    std::ostringstream out;
    out << "noise,pass,ratio\n";
    for (std::size_t g = 0; g < result.noise_levels.size(); ++g) {
        for (int pass = 0; pass <= result.passes; ++pass) {
            const double ratio = result.ratios[g][static_cast<std::size_t>(pass)];
            out << format_double(result.noise_levels[g]) << ',' << pass << ',';
            if (std::isnan(ratio)) {
                out << "na";
            } else {
                out << format_double(ratio);
            }
            out << '\n';
        }
    }
    return out.str();
}

std::vector<HeatmapCsvRow> parse_heatmap_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "noise,pass,ratio") {
        throw ConfigError("parse_heatmap_csv: bad header");
    }
    std::vector<HeatmapCsvRow> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw ConfigError("parse_heatmap_csv: bad row");
        HeatmapCsvRow row;
        row.noise = std::stod(fields[0]);
        row.pass = std::stoi(fields[1]);
        row.ratio = fields[2] == "na" ? std::numeric_limits<double>::quiet_NaN()
                                      : std::stod(fields[2]);
        rows.push_back(row);
    }
    return rows;
}

std::string rounds_to_csv(std::span<const RoundRecord> records) {
    std::ostringstream out;
    out << "index,type,x,y,a,b\n";
    for (const auto& rec : records) {
        out << rec.index << ',' << (rec.type == RoundType::Test ? "test" : "key")
            << ',' << rec.x << ',' << rec.y << ',' << rec.a << ',' << rec.b << '\n';
    }
    return out.str();
}

std::vector<RoundRecord> parse_rounds_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "index,type,x,y,a,b") {
        throw ConfigError("parse_rounds_csv: bad header");
    }
    std::vector<RoundRecord> records;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 6) throw ConfigError("parse_rounds_csv: bad row");
        RoundRecord rec;
        rec.index = static_cast<std::uint32_t>(std::stoul(fields[0]));
        if (fields[1] == "test") rec.type = RoundType::Test;
        else if (fields[1] == "key") rec.type = RoundType::Key;
        else throw ConfigError("parse_rounds_csv: bad round type");
        rec.x = std::stoi(fields[2]);
        rec.y = std::stoi(fields[3]);
        rec.a = std::stoi(fields[4]);
        rec.b = std::stoi(fields[5]);
        records.push_back(rec);
    }
    return records;
}

std::string transcript_to_lines(const CascadeTranscript& transcript) {
    std::ostringstream out;
    for (const auto& msg : transcript.parity_messages) {
        out << "parity," << msg.pass << ',' << msg.block << ','
            << (msg.direction == Direction::AliceToBob ? "A>B" : "B>A") << ','
            << msg.parity << '\n';
    }
    for (const auto& corr : transcript.corrections) {
        out << "correction," << corr.pass_discovered << ',' << corr.position << '\n';
    }
    return out.str();
}

}  // namespace diqkd
