#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "spinecho/errors.hpp"
#include "spinecho/harness.hpp"

namespace {

using spinecho::RunConfig;

struct Overrides {
    std::string profile = "paper";
    std::string config_file;
    std::optional<int> n_spins;
    std::vector<int> n_spins_list;
    std::optional<double> tau0;
    std::optional<double> t_end;
    std::optional<double> dt;
    std::optional<int> realizations;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> channel;
    std::optional<int> threads;
    std::optional<int> j_max;
    std::optional<double> h_rms;
    std::optional<double> gamma;
    std::optional<double> reversal_error;
    std::vector<double> tau0_grid;
    std::optional<int> noise_seeds;
    std::optional<int> mz_realizations;
    std::optional<double> lag_max;
    std::optional<double> trace_length;
    bool renormalize = false;
    bool allow_strong_noise = false;
    bool resume = false;
    std::vector<std::string> curves;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--profile", o.profile, "Base values: paper or desk")
        ->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option("--config", o.config_file, "JSON configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--n-spins", o.n_spins, "Chain length N");
    cmd->add_option("--dt", o.dt, "RK4 time step");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)");
    cmd->add_option("--j-max", o.j_max, "Noise harmonics cutoff");
    cmd->add_option("--h-rms", o.h_rms, "Noise rms amplitude");
    cmd->add_option("--gamma", o.gamma, "Noise correlation rate");
    cmd->add_flag("--allow-strong-noise", o.allow_strong_noise, "Run even when h_rms >= gamma");
}

RunConfig build_config(const Overrides& o)
{
    RunConfig c = o.profile == "desk" ? RunConfig::desk_profile() : RunConfig::paper_profile();
    if (!o.config_file.empty()) {
        std::ifstream in(o.config_file);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw spinecho::ConfigError(o.config_file + ": " + e.what());
        }
        c = RunConfig::from_json(j, c);
    }
    if (o.n_spins) c.n_spins = *o.n_spins;
    if (!o.n_spins_list.empty()) c.n_spins_list = o.n_spins_list;
    if (o.tau0) c.tau0 = *o.tau0;
    if (o.t_end) c.t_end = *o.t_end;
    if (o.dt) c.dt = *o.dt;
    if (o.realizations) c.n_realizations = *o.realizations;
    if (o.seed) c.master_seed = *o.seed;
    if (o.out) c.output_dir = *o.out;
    if (o.channel) c.channel = *o.channel;
    if (o.threads) c.threads = *o.threads;
    if (o.j_max) c.j_max = *o.j_max;
    if (o.h_rms) c.h_rms = *o.h_rms;
    if (o.gamma) c.gamma = *o.gamma;
    if (o.reversal_error) c.reversal_error = *o.reversal_error;
    if (!o.tau0_grid.empty()) c.tau0_grid = o.tau0_grid;
    if (o.noise_seeds) c.noise_seeds = *o.noise_seeds;
    if (o.mz_realizations) c.mz_realizations = *o.mz_realizations;
    if (o.lag_max) c.lag_max = *o.lag_max;
    if (o.trace_length) c.trace_length = *o.trace_length;
    if (o.renormalize) c.renormalize = true;
    if (o.allow_strong_noise) c.allow_strong_noise = true;
    if (o.resume) c.resume = true;
    return c;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Loschmidt-echo coherence of spin-chain cat states under colored noise"};
    app.set_version_flag("--version", spinecho::kVersion);
    app.require_subcommand(1);

    Overrides o;

    auto* mag = app.add_subcommand("magnetization", "Mz(t) for the all-up and all-down branches");
    add_common(mag, o);
    mag->add_option("--tau0", o.tau0, "Reversal time");
    mag->add_option("--t-end", o.t_end, "End time (default 2 tau0)");
    mag->add_option("--reversal-error", o.reversal_error, "Relative coupling error after reversal");
    mag->add_flag("--renormalize", o.renormalize, "Renormalize the state at record points");
    mag->add_option("--realizations", o.mz_realizations, "Noise realizations; adds ensemble-mean columns");

    auto* scan = app.add_subcommand("coherence-scan", "Coherence at the echo time over a tau0 grid");
    add_common(scan, o);
    scan->add_option("--realizations", o.realizations, "Noise realizations per point");
    scan->add_option("--channel", o.channel, "interacting, noninteracting or both")
        ->check(CLI::IsMember({"interacting", "noninteracting", "both"}));
    scan->add_option("--n-spins-list", o.n_spins_list, "Chain lengths to scan")->delimiter(',');
    scan->add_option("--tau0-grid", o.tau0_grid, "Comma-separated tau0 values")->delimiter(',');
    scan->add_option("--reversal-error", o.reversal_error, "Relative coupling error after reversal");
    scan->add_flag("--resume", o.resume, "Reuse finished points from the output directory");

    auto* noise = app.add_subcommand("noise-check", "Ensemble autocorrelation of the noise field");
    add_common(noise, o);
    noise->add_option("--noise-seeds", o.noise_seeds, "Realizations in the estimate");
    noise->add_option("--lag-max", o.lag_max, "Largest lag");
    noise->add_option("--trace-length", o.trace_length, "Also export one h(t) trace this long");

    auto* fit = app.add_subcommand("fit", "Fit decay rates to stored coherence curves");
    add_common(fit, o);
    fit->add_option("curves", o.curves, "Curve CSV files")->required()->check(CLI::ExistingFile);

    auto* analytic = app.add_subcommand("analytic", "Closed-form rates and the Gaussian decay law");
    add_common(analytic, o);
    analytic->add_option("--n-spins-list", o.n_spins_list, "Chain lengths")->delimiter(',');
    analytic->add_option("--tau0-grid", o.tau0_grid, "Comma-separated tau0 values")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const RunConfig config = build_config(o);
        spinecho::CommandResult result;
        if (*mag) {
            result = spinecho::cmd_magnetization(config);
        } else if (*scan) {
            result = spinecho::cmd_coherence_scan(config);
        } else if (*noise) {
            result = spinecho::cmd_noise_check(config);
        } else if (*fit) {
            std::vector<std::filesystem::path> paths(o.curves.begin(), o.curves.end());
            result = spinecho::cmd_fit(config, paths);
        } else {
            result = spinecho::cmd_analytic(config);
        }
        for (const auto& w : result.warnings) {
            std::cerr << "warning: " << w << '\n';
        }
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : result.files) {
            files.push_back(f.string());
        }
        std::cout << nlohmann::json{{"files", files}, {"summary", result.summary}}.dump(2) << '\n';
    } catch (const std::exception& e) {
        std::cerr << spinecho::error_json(e).dump() << '\n';
        return dynamic_cast<const spinecho::ConfigError*>(&e) != nullptr ? 2 : 1;
    }
    return 0;
}
