#pragma once

// Run configuration and the command implementations behind the CLI.
// Every output file gets a JSON sidecar holding the full configuration.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinecho/coherence.hpp"
#include "spinecho/fitting.hpp"
#include "spinecho/spinchain.hpp"

namespace spinecho {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    int n_spins = 18;
    /// Sizes for coherence-scan; empty means {n_spins}.
    std::vector<int> n_spins_list;

    double j_x = -0.47;
    double j_y = 0.79;
    double j_z = 0.37;

    double h_rms = NoiseModel::kDefaultHrms;
    double gamma = NoiseModel::kDefaultGamma;
    double delta_omega = NoiseModel::kDefaultDeltaOmega;
    int j_max = NoiseModel::kDefaultJmax;

    double dt = EchoSchedule::kDefaultDt;
    double tau0 = 15.0;
    /// Negative means 2 tau0.
    double t_end = -1.0;
    double record_interval = EchoSchedule::kDefaultRecordInterval;
    double reversal_error = 0.0;
    bool renormalize = false;
    /// Noise realizations in the magnetization command; realization 0 is also
    /// written on its own.
    int mz_realizations = 1;
    std::vector<double> tau0_grid = default_tau0_grid();

    int n_realizations = 200;
    std::uint64_t master_seed = 1;
    int bootstrap_resamples = 1000;
    /// interacting | noninteracting | both
    std::string channel = "both";
    int threads = 0;

    /// Fit windows in tau0; negative bounds select the defaults.
    double tail_window_lo = -1.0;
    double tail_window_hi = -1.0;
    double early_window_lo = -1.0;
    double early_window_hi = -1.0;

    int noise_seeds = 1000;
    double lag_max = 20.0;
    double lag_step = 1.0;
    /// Export h(t) over this many time units in noise-check (0 = off).
    double trace_length = 0.0;

    bool allow_strong_noise = false;
    bool resume = false;
    std::filesystem::path output_dir = "out";

    /// Paper-scale values (the defaults).
    static RunConfig paper_profile();
    /// Desk-scale values: N = 12, 100 realizations, j_max = 10000.
    static RunConfig desk_profile();

    /// Unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& j, RunConfig base);
    static RunConfig from_json(const nlohmann::json& j) { return from_json(j, RunConfig{}); }
    nlohmann::json to_json() const;

    /// Throws ConfigError on invalid values. Returns warnings.
    std::vector<std::string> validate() const;

    ChainCouplings couplings() const;
    NoiseModel noise_model() const;
    std::vector<int> sizes() const;
    EchoSchedule schedule() const;
    ScanConfig scan_config(int n) const;
};

/// Writes `<stem>.json` next to a data file: command, config, version, extras.
void write_sidecar(const std::filesystem::path& data_file, const std::string& command,
                   const RunConfig& config, const nlohmann::json& extra = nlohmann::json::object());

struct CommandResult {
    std::vector<std::filesystem::path> files;
    nlohmann::json summary = nlohmann::json::object();
    std::vector<std::string> warnings;
};

CommandResult cmd_magnetization(const RunConfig& config);
CommandResult cmd_coherence_scan(const RunConfig& config);
CommandResult cmd_noise_check(const RunConfig& config);
/// Refits stored curve CSVs (interacting curves get the linear fit,
/// noninteracting ones the exponential tail fit).
CommandResult cmd_fit(const RunConfig& config, const std::vector<std::filesystem::path>& curves);
CommandResult cmd_analytic(const RunConfig& config);

/// Machine-readable error document for CLI failures.
nlohmann::json error_json(const std::exception& e);

} // namespace spinecho
