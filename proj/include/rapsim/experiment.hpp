// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration: spec files, deterministic stream derivation
// per (experiment, sweep, trial), a worker pool whose degree never
// affects output, ordered aggregation and CSV emission.

#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rapsim/crapid.hpp"
#include "rapsim/erapid.hpp"
#include "rapsim/geometry.hpp"
#include "rapsim/rng.hpp"
#include "rapsim/stats.hpp"
#include "rapsim/sucre.hpp"
#include "rapsim/system_config.hpp"

namespace rapsim {

/// Malformed or inconsistent experiment description (CLI exit code 2).
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A self-check failed (CLI exit code 1).
struct ValidationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr uint32_t kSubPopulation = 0xFFFFFFF1u;

// ---------------------------------------------------------------------------
// Spec file: flat key-value text with [section] headers.

class KeyValueFile {
public:
    static KeyValueFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw SpecError("spec file: cannot open '" + path + "'");
        return parse_stream(in);
    }

    static KeyValueFile parse_stream(std::istream& in) {
        KeyValueFile kv;
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string t = trim(strip_comment(line));
            if (t.empty()) continue;
            if (t.front() == '[') {
                if (t.back() != ']') {
                    throw SpecError("spec line " + std::to_string(line_no) +
                                    ": unterminated section header");
                }
                section = trim(t.substr(1, t.size() - 2));
                continue;
            }
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw SpecError("spec line " + std::to_string(line_no) +
                                ": expected key = value");
            }
            const std::string key = trim(t.substr(0, eq));
            const std::string value = trim(t.substr(eq + 1));
            if (key.empty()) {
                throw SpecError("spec line " + std::to_string(line_no) + ": empty key");
            }
            kv.values_[section + "." + key] = value;
        }
        return kv;
    }

    bool has(const std::string& section, const std::string& key) const {
        return values_.count(section + "." + key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        const auto it = values_.find(section + "." + key);
        if (it == values_.end()) throw SpecError(section + "." + key + ": missing");
        consumed_.insert(it->first);
        return it->second;
    }

    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const {
        return has(section, key) ? get_string(section, key) : fallback;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return parse_double(section + "." + key, get_string(section, key));
    }

    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const {
        return has(section, key) ? get_double(section, key) : fallback;
    }

    long long get_int(const std::string& section, const std::string& key) const {
        return parse_int(section + "." + key, get_string(section, key));
    }

    long long get_int_or(const std::string& section, const std::string& key,
                         long long fallback) const {
        return has(section, key) ? get_int(section, key) : fallback;
    }

    std::vector<double> get_double_list(const std::string& section,
                                        const std::string& key) const {
        std::istringstream ss(get_string(section, key));
        std::vector<double> out;
        std::string tok;
        while (ss >> tok) out.push_back(parse_double(section + "." + key, tok));
        return out;
    }

    std::vector<int> get_int_list(const std::string& section, const std::string& key) const {
        std::istringstream ss(get_string(section, key));
        std::vector<int> out;
        std::string tok;
        while (ss >> tok) {
            out.push_back(static_cast<int>(parse_int(section + "." + key, tok)));
        }
        return out;
    }

    std::vector<int> get_int_list_or(const std::string& section, const std::string& key,
                                     std::vector<int> fallback) const {
        return has(section, key) ? get_int_list(section, key) : std::move(fallback);
    }

    std::vector<double> get_double_list_or(const std::string& section, const std::string& key,
                                           std::vector<double> fallback) const {
        return has(section, key) ? get_double_list(section, key) : std::move(fallback);
    }

    /// Rejects keys never consumed by a getter: catches typos early.
    void ensure_all_consumed() const {
        for (const auto& [key, value] : values_) {
            if (consumed_.count(key) == 0) {
                throw SpecError(key + ": unknown key");
            }
        }
    }

private:
    static std::string strip_comment(const std::string& s) {
        const auto pos = s.find_first_of("#;");
        return pos == std::string::npos ? s : s.substr(0, pos);
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& name, const std::string& s) {
        double v = 0.0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw SpecError(name + ": not a number: '" + s + "'");
        }
        return v;
    }

    static long long parse_int(const std::string& name, const std::string& s) {
        long long v = 0;
        const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size()) {
            throw SpecError(name + ": not an integer: '" + s + "'");
        }
        return v;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

// ---------------------------------------------------------------------------
// Experiment description.

enum class ExperimentKind { kSucreFig3, kErapidFig4, kCrapidFig5, kValidate };

inline uint32_t experiment_id(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kSucreFig3: return 1;
        case ExperimentKind::kErapidFig4: return 2;
        case ExperimentKind::kCrapidFig5: return 3;
        case ExperimentKind::kValidate: return 4;
    }
    throw SpecError("kind: unknown experiment kind");
}

inline std::string kind_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::kSucreFig3: return "sucre_fig3";
        case ExperimentKind::kErapidFig4: return "erapid_fig4";
        case ExperimentKind::kCrapidFig5: return "crapid_fig5";
        case ExperimentKind::kValidate: return "validate";
    }
    throw SpecError("kind: unknown experiment kind");
}

inline ExperimentKind kind_from_name(const std::string& name) {
    if (name == "sucre_fig3") return ExperimentKind::kSucreFig3;
    if (name == "erapid_fig4") return ExperimentKind::kErapidFig4;
    if (name == "crapid_fig5") return ExperimentKind::kCrapidFig5;
    if (name == "validate") return ExperimentKind::kValidate;
    throw SpecError("experiment.kind: unknown kind '" + name + "'");
}

struct SucreExperimentParams {
    SystemConfig system;
    SucreConfig sucre;
    double activation_prob = 0.001;
    std::uint64_t num_slots = 2000;
    std::uint64_t warmup_slots = 200;
};

struct ErapidExperimentParams {
    int num_devices = 800;
    std::vector<int> antenna_counts = {100, 400};
    double mean_gain = 1.0;
    double gain_spread = 0.25;
    double snr_db = 10.0;
    int mc_slots_search = 1000;
    int mc_slots_final = 2000;
};

struct CrapidExperimentParams {
    int num_devices = 535;
    std::vector<double> code_rates = {0.5, 1.0};
    double snr_db = 10.0;
    double gain_spread = 0.25;
    double cancellation_efficiency = 0.9;
    CrapidGrids grids = default_crapid_grids();
    int search_frames = 20;
    int final_frames = 40;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::kValidate;
    std::string sweep_name;
    std::vector<double> sweep_values;
    std::uint64_t master_seed = 1;
    int num_trials = 1;
    std::string output_path;

    SucreExperimentParams sucre;
    ErapidExperimentParams erapid;
    CrapidExperimentParams crapid;

    void validate() const {
        if (kind != ExperimentKind::kValidate && sweep_values.empty()) {
            throw SpecError("experiment.sweep_values: must be non-empty");
        }
        if (num_trials < 1) throw SpecError("experiment.trials: must be >= 1");
        if (kind != ExperimentKind::kValidate && output_path.empty()) {
            throw SpecError("experiment.out: missing output path");
        }
        try {
            switch (kind) {
                case ExperimentKind::kSucreFig3:
                    sucre.system.validate();
                    sucre.sucre.validate();
                    break;
                case ExperimentKind::kErapidFig4: {
                    if (erapid.antenna_counts.empty()) {
                        throw std::invalid_argument("antenna_counts: must be non-empty");
                    }
                    break;
                }
                case ExperimentKind::kCrapidFig5: {
                    if (crapid.code_rates.empty()) {
                        throw std::invalid_argument("code_rates: must be non-empty");
                    }
                    break;
                }
                case ExperimentKind::kValidate: break;
            }
        } catch (const std::invalid_argument& e) {
            throw SpecError(e.what());
        }
    }
};

inline ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    switch (kind) {
        case ExperimentKind::kSucreFig3:
            spec.sweep_name = "num_devices";
            spec.sweep_values = {100, 2000, 4000, 8000, 10000, 12000};
            spec.num_trials = 20;
            spec.output_path = "fig3.csv";
            // Fig. 3 exploits path-gain variation from distance and
            // shadowing; without the lognormal term the collision
            // resolution rate collapses at high K.
            spec.sucre.system.shadowing_std_db = 10.0;
            break;
        case ExperimentKind::kErapidFig4:
            spec.sweep_name = "slot_length";
            spec.sweep_values = {30, 60, 100, 150, 200, 300};
            spec.num_trials = 1;
            spec.output_path = "fig4.csv";
            break;
        case ExperimentKind::kCrapidFig5:
            spec.sweep_name = "num_antennas";
            spec.sweep_values = {64, 256, 400, 1024};
            spec.num_trials = 1;
            spec.output_path = "fig5.csv";
            break;
        case ExperimentKind::kValidate:
            spec.sweep_name = "none";
            spec.sweep_values = {0};
            spec.output_path = "";
            break;
    }
    return spec;
}

inline ExperimentSpec parse_spec(const KeyValueFile& kv) {
    const std::string kind_str = kv.get_string("experiment", "kind");
    ExperimentSpec spec = default_spec(kind_from_name(kind_str));

    if (kv.has("experiment", "sweep")) spec.sweep_name = kv.get_string("experiment", "sweep");
    spec.sweep_values =
        kv.get_double_list_or("experiment", "sweep_values", spec.sweep_values);
    spec.master_seed =
        static_cast<std::uint64_t>(kv.get_int_or("experiment", "seed", 1));
    spec.num_trials = static_cast<int>(
        kv.get_int_or("experiment", "trials", spec.num_trials));
    spec.output_path = kv.get_string_or("experiment", "out", spec.output_path);

    if (spec.kind == ExperimentKind::kSucreFig3) {
        auto& p = spec.sucre;
        p.system.num_antennas = static_cast<int>(
            kv.get_int_or("system", "num_antennas", p.system.num_antennas));
        p.system.num_pilots =
            static_cast<int>(kv.get_int_or("system", "num_pilots", p.system.num_pilots));
        p.system.slot_length =
            static_cast<int>(kv.get_int_or("system", "slot_length", p.system.slot_length));
        p.system.cell_radius_m =
            kv.get_double_or("system", "cell_radius_m", p.system.cell_radius_m);
        p.system.pathloss_exponent =
            kv.get_double_or("system", "pathloss_exponent", p.system.pathloss_exponent);
        p.system.edge_snr_db = kv.get_double_or("system", "edge_snr_db", p.system.edge_snr_db);
        p.system.shadowing_std_db =
            kv.get_double_or("system", "shadowing_std_db", p.system.shadowing_std_db);
        p.activation_prob = kv.get_double_or("sucre", "activation_prob", p.activation_prob);
        p.sucre.retry_prob = kv.get_double_or("sucre", "retry_prob", p.sucre.retry_prob);
        p.sucre.max_attempts =
            static_cast<int>(kv.get_int_or("sucre", "max_attempts", p.sucre.max_attempts));
        p.sucre.decision_bias =
            kv.get_double_or("sucre", "decision_bias", p.sucre.decision_bias);
        const std::string mode = kv.get_string_or("sucre", "estimator_mode", "ideal");
        if (mode == "ideal") {
            p.sucre.estimator_mode = EstimatorMode::kIdeal;
        } else if (mode == "noisy") {
            p.sucre.estimator_mode = EstimatorMode::kNoisy;
        } else {
            throw SpecError("sucre.estimator_mode: must be 'ideal' or 'noisy'");
        }
        p.num_slots = static_cast<std::uint64_t>(
            kv.get_int_or("sucre", "num_slots", static_cast<long long>(p.num_slots)));
        p.warmup_slots = static_cast<std::uint64_t>(
            kv.get_int_or("sucre", "warmup_slots", static_cast<long long>(p.warmup_slots)));
    } else if (spec.kind == ExperimentKind::kErapidFig4) {
        auto& p = spec.erapid;
        p.num_devices = static_cast<int>(kv.get_int_or("erapid", "num_devices", p.num_devices));
        p.antenna_counts = kv.get_int_list_or("erapid", "antenna_counts", p.antenna_counts);
        p.mean_gain = kv.get_double_or("erapid", "mean_gain", p.mean_gain);
        p.gain_spread = kv.get_double_or("erapid", "gain_spread", p.gain_spread);
        p.snr_db = kv.get_double_or("erapid", "snr_db", p.snr_db);
        p.mc_slots_search =
            static_cast<int>(kv.get_int_or("erapid", "mc_slots_search", p.mc_slots_search));
        p.mc_slots_final =
            static_cast<int>(kv.get_int_or("erapid", "mc_slots_final", p.mc_slots_final));
    } else if (spec.kind == ExperimentKind::kCrapidFig5) {
        auto& p = spec.crapid;
        p.num_devices = static_cast<int>(kv.get_int_or("crapid", "num_devices", p.num_devices));
        p.code_rates = kv.get_double_list_or("crapid", "code_rates", p.code_rates);
        p.snr_db = kv.get_double_or("crapid", "snr_db", p.snr_db);
        p.gain_spread = kv.get_double_or("crapid", "gain_spread", p.gain_spread);
        p.cancellation_efficiency = kv.get_double_or("crapid", "cancellation_efficiency",
                                                     p.cancellation_efficiency);
        p.grids.tp_grid = kv.get_int_list_or("crapid", "tp_grid", p.grids.tp_grid);
        p.grids.pa_grid = kv.get_double_list_or("crapid", "pa_grid", p.grids.pa_grid);
        p.grids.delta_grid = kv.get_int_list_or("crapid", "delta_grid", p.grids.delta_grid);
        p.search_frames =
            static_cast<int>(kv.get_int_or("crapid", "search_frames", p.search_frames));
        p.final_frames =
            static_cast<int>(kv.get_int_or("crapid", "final_frames", p.final_frames));
    }
    kv.ensure_all_consumed();
    spec.validate();
    return spec;
}

inline ExperimentSpec parse_spec_file(const std::string& path) {
    return parse_spec(KeyValueFile::parse_file(path));
}

// ---------------------------------------------------------------------------
// Results.

struct ResultRow {
    std::string experiment;
    std::string sweep_name;
    double sweep_value = 0.0;
    std::string mode;
    std::string metric;
    double mean = 0.0;
    double stderr_mean = 0.0;
    int trials = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, p);
}

struct TrialMetric {
    std::string mode;
    std::string metric;
    double value = 0.0;
};

}  // namespace detail

inline std::string to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "experiment,sweep_name,sweep_value,mode,metric,mean,stderr,trials,seed\n";
    for (const auto& r : rows) {
        out += r.experiment;
        out += ',';
        out += r.sweep_name;
        out += ',';
        out += detail::format_double(r.sweep_value);
        out += ',';
        out += r.mode;
        out += ',';
        out += r.metric;
        out += ',';
        out += detail::format_double(r.mean);
        out += ',';
        out += detail::format_double(r.stderr_mean);
        out += ',';
        out += std::to_string(r.trials);
        out += ',';
        out += std::to_string(r.seed);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-kind trial bodies. Each returns the metric list for one
// (sweep value, trial) cell; aggregation happens afterwards in trial
// order, independent of scheduling.

namespace detail {

inline std::vector<TrialMetric> run_sucre_trial(const ExperimentSpec& spec,
                                                double sweep_value,
                                                RandomStream& stream) {
    const auto& p = spec.sucre;
    SystemConfig cfg = p.system;
    cfg.validate();
    const int k = static_cast<int>(sweep_value);
    if (k < 1) throw SpecError("sweep_values: num_devices must be >= 1");
    RandomStream pop_rng = stream.fork(kSubPopulation);
    const Population pop = sample_population(cfg, k, p.activation_prob, pop_rng);

    std::vector<TrialMetric> out;
    for (const AccessMode mode : {AccessMode::kSucre, AccessMode::kBaseline}) {
        const CrowdStats stats =
            run_crowd_scenario(pop, cfg, p.sucre, mode, p.num_slots, stream, p.warmup_slots);
        const std::string name = mode == AccessMode::kSucre ? "sucre" : "baseline";
        out.push_back({name, "mean_attempts", stats.mean_attempts});
        out.push_back({name, "admission_fraction", stats.admission_fraction});
        out.push_back({name, "resolution_fraction", stats.resolution_fraction});
    }
    return out;
}

inline std::vector<TrialMetric> run_erapid_trial(const ExperimentSpec& spec,
                                                 double sweep_value,
                                                 RandomStream& stream) {
    const auto& p = spec.erapid;
    const int tau_u = static_cast<int>(sweep_value);
    if (tau_u < 2) throw SpecError("sweep_values: slot_length must be >= 2");
    std::vector<TrialMetric> out;
    for (const int m : p.antenna_counts) {
        ErapidConfig cfg;
        cfg.num_devices = p.num_devices;
        cfg.num_antennas = m;
        cfg.slot_length = tau_u;
        cfg.mean_gain = p.mean_gain;
        cfg.gain_spread = p.gain_spread;
        cfg.snr_db = p.snr_db;
        cfg.mc_slots = p.mc_slots_search;
        cfg.num_pilots = 1;  // grid sets it
        const auto pa_grid = default_erapid_pa_grid();
        const auto tp_grid = default_erapid_tp_grid(tau_u);
        ErapidOptimum opt = optimize_erapid(cfg, pa_grid, tp_grid, stream);
        ErapidConfig best = cfg;
        best.num_pilots = opt.num_pilots;
        best.activation_prob = opt.activation_prob;
        best.mc_slots = p.mc_slots_final;
        const RateBound bound = ergodic_sum_rate(best, stream);
        const std::string mode = "M=" + std::to_string(m);
        out.push_back({mode, "sum_rate", bound.sum_rate});
        out.push_back({mode, "mean_active", bound.mean_active});
        out.push_back({mode, "per_active_rate", bound.per_active_rate});
        out.push_back({mode, "opt_activation_prob", opt.activation_prob});
        out.push_back({mode, "opt_num_pilots", static_cast<double>(opt.num_pilots)});
    }
    return out;
}

inline std::vector<TrialMetric> run_crapid_trial(const ExperimentSpec& spec,
                                                 double sweep_value,
                                                 RandomStream& stream) {
    const auto& p = spec.crapid;
    const int m = static_cast<int>(sweep_value);
    if (m < 1) throw SpecError("sweep_values: num_antennas must be >= 1");
    CrapidConfig base;
    base.num_devices = p.num_devices;
    base.num_antennas = m;
    base.snr_db = p.snr_db;
    base.gain_spread = p.gain_spread;
    base.cancellation_efficiency = p.cancellation_efficiency;
    const std::vector<int> antennas = {m};
    const std::vector<SchemeResult> results =
        compare_schemes(base, antennas, p.code_rates, p.grids, stream, p.search_frames,
                        p.final_frames);
    std::vector<TrialMetric> out;
    for (const auto& r : results) {
        std::ostringstream mode;
        mode << r.scheme << "_R" << r.code_rate;
        out.push_back({mode.str(), "throughput", r.throughput});
        out.push_back({mode.str(), "opt_num_pilots", static_cast<double>(r.opt_tp)});
        out.push_back({mode.str(), "opt_activation_prob", r.opt_pa});
        out.push_back({mode.str(), "opt_frame_length", static_cast<double>(r.opt_delta)});
    }
    return out;
}

inline std::vector<TrialMetric> run_trial(const ExperimentSpec& spec, double sweep_value,
                                          RandomStream& stream) {
    switch (spec.kind) {
        case ExperimentKind::kSucreFig3: return run_sucre_trial(spec, sweep_value, stream);
        case ExperimentKind::kErapidFig4: return run_erapid_trial(spec, sweep_value, stream);
        case ExperimentKind::kCrapidFig5: return run_crapid_trial(spec, sweep_value, stream);
        case ExperimentKind::kValidate:
            throw SpecError("kind: validate has no trials");
    }
    throw SpecError("kind: unknown experiment kind");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parallel execution with index-ordered reduction.

inline std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, int workers = 1) {
    spec.validate();
    if (workers < 1) throw SpecError("workers: must be >= 1");
    if (spec.kind == ExperimentKind::kValidate) {
        throw SpecError("kind: run validate via the validation suite");
    }

    const std::size_t num_sweeps = spec.sweep_values.size();
    const auto num_trials = static_cast<std::size_t>(spec.num_trials);
    const std::size_t num_jobs = num_sweeps * num_trials;
    std::vector<std::vector<detail::TrialMetric>> cells(num_jobs);

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto body = [&]() {
        for (;;) {
            const std::size_t job = next.fetch_add(1);
            if (job >= num_jobs) return;
            const std::size_t sweep_index = job / num_trials;
            const std::size_t trial_index = job % num_trials;
            try {
                RandomStream stream = derive_stream(
                    spec.master_seed, experiment_id(spec.kind),
                    static_cast<uint32_t>(sweep_index), static_cast<uint32_t>(trial_index));
                cells[job] = detail::run_trial(spec, spec.sweep_values[sweep_index], stream);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(num_jobs);
                return;
            }
        }
    };

    const int pool = std::min<std::size_t>(static_cast<std::size_t>(workers), num_jobs);
    if (pool <= 1) {
        body();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int i = 0; i < pool; ++i) threads.emplace_back(body);
        for (auto& t : threads) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    // Reduction in (sweep, metric, trial) order: output is independent
    // of how jobs were scheduled above.
    std::vector<ResultRow> rows;
    for (std::size_t s = 0; s < num_sweeps; ++s) {
        const auto& shape = cells[s * num_trials];
        for (std::size_t mi = 0; mi < shape.size(); ++mi) {
            RunningStat stat;
            for (std::size_t t = 0; t < num_trials; ++t) {
                const auto& cell = cells[s * num_trials + t];
                if (cell.size() != shape.size() || cell[mi].mode != shape[mi].mode ||
                    cell[mi].metric != shape[mi].metric) {
                    throw std::logic_error("trial metric sets diverged across trials");
                }
                stat.push(cell[mi].value);
            }
            ResultRow row;
            row.experiment = kind_name(spec.kind);
            row.sweep_name = spec.sweep_name;
            row.sweep_value = spec.sweep_values[s];
            row.mode = shape[mi].mode;
            row.metric = shape[mi].metric;
            row.mean = stat.mean();
            row.stderr_mean = stat.stderr_mean();
            row.trials = spec.num_trials;
            row.seed = spec.master_seed;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("out: cannot open '" + path + "' for writing");
    out << to_csv(rows);
    if (!out) throw SpecError("out: write failed for '" + path + "'");
}

/// Runs the experiment and writes its CSV.
inline std::vector<ResultRow> run_experiment_to_csv(const ExperimentSpec& spec,
                                                    int workers = 1) {
    std::vector<ResultRow> rows = run_experiment(spec, workers);
    write_csv(rows, spec.output_path);
    return rows;
}

}  // namespace rapsim
