#include "spinecho/harness.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "spinecho/analytic.hpp"
#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"
#include "spinecho/rng.hpp"

namespace spinecho {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot open " + path.string() + " for writing");
    }
    out << doc.dump(2) << '\n';
}

json read_json(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

template <typename T>
T get_as(const json& v, const std::string& key)
{
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + key + "' has the wrong type");
    }
}

std::vector<double> lag_grid(double lag_max, double lag_step)
{
    std::vector<double> lags;
    const auto n = static_cast<int>(std::floor(lag_max / lag_step + 1e-9));
    for (int i = 0; i <= n; ++i) {
        lags.push_back(i * lag_step);
    }
    return lags;
}

std::vector<Channel> selected_channels(const std::string& channel)
{
    if (channel == "both") {
        return {Channel::noninteracting, Channel::interacting};
    }
    return {channel_from_string(channel)};
}

FitWindow pick_window(double lo, double hi, FitWindow fallback)
{
    if (lo >= 0.0) {
        fallback.lo = lo;
    }
    if (hi >= 0.0) {
        fallback.hi = hi;
    }
    return fallback;
}

json point_to_json(const CoherencePoint& p)
{
    return {{"tau0", p.tau0},
            {"c_value", p.c_value},
            {"std_error", p.std_error},
            {"n_realizations", p.n_realizations},
            {"channel", to_string(p.channel)}};
}

CoherencePoint point_from_json(const json& j)
{
    CoherencePoint p;
    p.tau0 = j.at("tau0").get<double>();
    p.c_value = j.at("c_value").get<double>();
    p.std_error = j.at("std_error").get<double>();
    p.n_realizations = j.at("n_realizations").get<int>();
    p.channel = channel_from_string(j.at("channel").get<std::string>());
    return p;
}

} // namespace

RunConfig RunConfig::paper_profile()
{
    return RunConfig{};
}

RunConfig RunConfig::desk_profile()
{
    RunConfig c;
    c.n_spins = 12;
    c.n_realizations = 100;
    c.j_max = NoiseModel::kReducedJmax;
    return c;
}

RunConfig RunConfig::from_json(const json& j, RunConfig c)
{
    if (!j.is_object()) {
        throw ConfigError("configuration must be a JSON object");
    }
    using Setter = std::function<void(const json&, const std::string&)>;
    const std::map<std::string, Setter> setters = {
        {"n_spins", [&](const json& v, const std::string& k) { c.n_spins = get_as<int>(v, k); }},
        {"n_spins_list",
         [&](const json& v, const std::string& k) { c.n_spins_list = get_as<std::vector<int>>(v, k); }},
        {"j_x", [&](const json& v, const std::string& k) { c.j_x = get_as<double>(v, k); }},
        {"j_y", [&](const json& v, const std::string& k) { c.j_y = get_as<double>(v, k); }},
        {"j_z", [&](const json& v, const std::string& k) { c.j_z = get_as<double>(v, k); }},
        {"h_rms", [&](const json& v, const std::string& k) { c.h_rms = get_as<double>(v, k); }},
        {"gamma", [&](const json& v, const std::string& k) { c.gamma = get_as<double>(v, k); }},
        {"delta_omega",
         [&](const json& v, const std::string& k) { c.delta_omega = get_as<double>(v, k); }},
        {"j_max", [&](const json& v, const std::string& k) { c.j_max = get_as<int>(v, k); }},
        {"dt", [&](const json& v, const std::string& k) { c.dt = get_as<double>(v, k); }},
        {"tau0", [&](const json& v, const std::string& k) { c.tau0 = get_as<double>(v, k); }},
        {"t_end", [&](const json& v, const std::string& k) { c.t_end = get_as<double>(v, k); }},
        {"record_interval",
         [&](const json& v, const std::string& k) { c.record_interval = get_as<double>(v, k); }},
        {"reversal_error",
         [&](const json& v, const std::string& k) { c.reversal_error = get_as<double>(v, k); }},
        {"renormalize",
         [&](const json& v, const std::string& k) { c.renormalize = get_as<bool>(v, k); }},
        {"tau0_grid",
         [&](const json& v, const std::string& k) { c.tau0_grid = get_as<std::vector<double>>(v, k); }},
        {"n_realizations",
         [&](const json& v, const std::string& k) { c.n_realizations = get_as<int>(v, k); }},
        {"master_seed",
         [&](const json& v, const std::string& k) { c.master_seed = get_as<std::uint64_t>(v, k); }},
        {"bootstrap_resamples",
         [&](const json& v, const std::string& k) { c.bootstrap_resamples = get_as<int>(v, k); }},
        {"channel",
         [&](const json& v, const std::string& k) { c.channel = get_as<std::string>(v, k); }},
        {"threads", [&](const json& v, const std::string& k) { c.threads = get_as<int>(v, k); }},
        {"tail_window_lo",
         [&](const json& v, const std::string& k) { c.tail_window_lo = get_as<double>(v, k); }},
        {"tail_window_hi",
         [&](const json& v, const std::string& k) { c.tail_window_hi = get_as<double>(v, k); }},
        {"early_window_lo",
         [&](const json& v, const std::string& k) { c.early_window_lo = get_as<double>(v, k); }},
        {"early_window_hi",
         [&](const json& v, const std::string& k) { c.early_window_hi = get_as<double>(v, k); }},
        {"mz_realizations",
         [&](const json& v, const std::string& k) { c.mz_realizations = get_as<int>(v, k); }},
        {"noise_seeds",
         [&](const json& v, const std::string& k) { c.noise_seeds = get_as<int>(v, k); }},
        {"lag_max", [&](const json& v, const std::string& k) { c.lag_max = get_as<double>(v, k); }},
        {"lag_step", [&](const json& v, const std::string& k) { c.lag_step = get_as<double>(v, k); }},
        {"trace_length",
         [&](const json& v, const std::string& k) { c.trace_length = get_as<double>(v, k); }},
        {"allow_strong_noise",
         [&](const json& v, const std::string& k) { c.allow_strong_noise = get_as<bool>(v, k); }},
        {"resume", [&](const json& v, const std::string& k) { c.resume = get_as<bool>(v, k); }},
        {"output_dir",
         [&](const json& v, const std::string& k) { c.output_dir = get_as<std::string>(v, k); }},
    };
    for (const auto& [key, value] : j.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
        it->second(value, key);
    }
    return c;
}

json RunConfig::to_json() const
{
    return {
        {"n_spins", n_spins},
        {"n_spins_list", n_spins_list},
        {"j_x", j_x},
        {"j_y", j_y},
        {"j_z", j_z},
        {"h_rms", h_rms},
        {"gamma", gamma},
        {"delta_omega", delta_omega},
        {"j_max", j_max},
        {"dt", dt},
        {"tau0", tau0},
        {"t_end", t_end},
        {"record_interval", record_interval},
        {"reversal_error", reversal_error},
        {"renormalize", renormalize},
        {"tau0_grid", tau0_grid},
        {"n_realizations", n_realizations},
        {"master_seed", master_seed},
        {"bootstrap_resamples", bootstrap_resamples},
        {"channel", channel},
        {"threads", threads},
        {"tail_window_lo", tail_window_lo},
        {"tail_window_hi", tail_window_hi},
        {"early_window_lo", early_window_lo},
        {"early_window_hi", early_window_hi},
        {"mz_realizations", mz_realizations},
        {"noise_seeds", noise_seeds},
        {"lag_max", lag_max},
        {"lag_step", lag_step},
        {"trace_length", trace_length},
        {"allow_strong_noise", allow_strong_noise},
        {"resume", resume},
        {"output_dir", output_dir.string()},
    };
}

std::vector<std::string> RunConfig::validate() const
{
    std::vector<std::string> warnings;
    for (int n : sizes()) {
        SpinBasis check(n);
        (void)check;
    }
    const NoiseModel noise = noise_model();
    if (h_rms >= gamma && !allow_strong_noise) {
        throw ConfigError("h_rms >= gamma leaves the weak-noise regime; pass "
                          "allow_strong_noise to run anyway");
    }
    if (noise.outside_weak_noise_regime()) {
        warnings.push_back("h_rms is not much smaller than gamma; the weak-noise "
                           "assumption behind the rate formulas may not hold");
    }
    if (channel != "both") {
        channel_from_string(channel);
    }
    if (n_realizations < 2) {
        throw ConfigError("n_realizations must be >= 2");
    }
    if (!(record_interval > 0.0)) {
        throw ConfigError("record_interval must be > 0");
    }
    if (mz_realizations < 1) {
        throw ConfigError("mz_realizations must be >= 1");
    }
    if (!(lag_step > 0.0) || !(lag_max >= 0.0)) {
        throw ConfigError("lag_step must be > 0 and lag_max >= 0");
    }
    if (threads < 0) {
        throw ConfigError("threads must be >= 0");
    }
    return warnings;
}

ChainCouplings RunConfig::couplings() const
{
    ChainCouplings c;
    c.j_x = j_x;
    c.j_y = j_y;
    c.j_z = j_z;
    return c;
}

NoiseModel RunConfig::noise_model() const
{
    return NoiseModel(h_rms, gamma, delta_omega, j_max);
}

std::vector<int> RunConfig::sizes() const
{
    return n_spins_list.empty() ? std::vector<int>{n_spins} : n_spins_list;
}

EchoSchedule RunConfig::schedule() const
{
    EchoSchedule s = EchoSchedule::echo(tau0, dt);
    if (t_end >= 0.0) {
        s.t_end = t_end;
    }
    s.record_stride = std::max(1, static_cast<int>(std::lround(record_interval / dt)));
    s.reversal_error = reversal_error;
    s.renormalize = renormalize;
    return s;
}

ScanConfig RunConfig::scan_config(int n) const
{
    ScanConfig s;
    s.n_spins = n;
    s.couplings = couplings();
    s.noise = std::make_shared<NoiseModel>(noise_model());
    s.dt = dt;
    s.reversal_error = reversal_error;
    s.master_seed = master_seed;
    s.bootstrap_resamples = bootstrap_resamples;
    s.threads = threads;
    return s;
}

void write_sidecar(const fs::path& data_file, const std::string& command,
                   const RunConfig& config, const json& extra)
{
    fs::path side = data_file;
    side.replace_extension(".json");
    json doc = {
        {"command", command},
        {"data_file", data_file.filename().string()},
        {"code_version", kVersion},
        {"config", config.to_json()},
        {"master_seed", config.master_seed},
        {"reduction_policy", "fixed-chunk reductions; bitwise identical for any worker count"},
    };
    for (const auto& [k, v] : extra.items()) {
        doc[k] = v;
    }
    write_json(side, doc);
}

CommandResult cmd_magnetization(const RunConfig& config)
{
    CommandResult result;
    result.warnings = config.validate();
    const ChainCouplings couplings = config.couplings();
    const auto model = std::make_shared<const NoiseModel>(config.noise_model());
    const EchoSchedule schedule = config.schedule();
    schedule.validate(config.n_spins, couplings, *model);

    std::vector<MagnetizationCurves> runs;
    for (int r = 0; r < config.mz_realizations; ++r) {
        const auto noise = sample_realization(
            model, stream_seed(config.master_seed, {static_cast<std::uint64_t>(r)}));
        runs.push_back(magnetization_curves(config.n_spins, couplings, noise, schedule));
    }
    const MagnetizationCurves& first = runs.front();
    const std::size_t n_times = first.times.size();
    std::vector<double> mean_up(n_times, 0.0), mean_down(n_times, 0.0);
    for (const auto& run : runs) {
        for (std::size_t i = 0; i < n_times; ++i) {
            mean_up[i] += run.up[i] / static_cast<double>(runs.size());
            mean_down[i] += run.down[i] / static_cast<double>(runs.size());
        }
    }

    fs::create_directories(config.output_dir);
    const std::vector<std::string> columns{"t", "mz_up", "mz_down", "mz_up_mean", "mz_down_mean"};
    const fs::path csv_path = config.output_dir / "magnetization.csv";
    {
        CsvWriter csv(csv_path, columns);
        for (std::size_t i = 0; i < n_times; ++i) {
            csv << first.times[i] << first.up[i] << first.down[i] << mean_up[i] << mean_down[i];
            csv.end_row();
        }
    }
    write_sidecar(csv_path, "magnetization", config,
                  {{"noise_seed", stream_seed(config.master_seed, {0})},
                   {"n_realizations", runs.size()},
                   {"renormalize", schedule.renormalize},
                   {"columns", columns}});
    result.files = {csv_path, fs::path(csv_path).replace_extension(".json")};

    if (runs.size() > 1) {
        const std::vector<std::string> run_columns{"realization", "t", "mz_up", "mz_down"};
        const fs::path runs_path = config.output_dir / "magnetization_runs.csv";
        {
            CsvWriter csv(runs_path, run_columns);
            for (std::size_t r = 0; r < runs.size(); ++r) {
                for (std::size_t i = 0; i < n_times; ++i) {
                    csv << static_cast<int>(r) << runs[r].times[i] << runs[r].up[i] << runs[r].down[i];
                    csv.end_row();
                }
            }
        }
        write_sidecar(runs_path, "magnetization_runs", config, {{"columns", run_columns}});
        result.files.push_back(runs_path);
        result.files.push_back(fs::path(runs_path).replace_extension(".json"));
    }
    result.summary = {{"n_points", n_times},
                      {"n_realizations", runs.size()},
                      {"mz_up_initial", first.up.front()},
                      {"mz_up_final", first.up.back()},
                      {"mz_down_final", first.down.back()},
                      {"mz_up_mean_final", mean_up.back()}};
    return result;
}

CommandResult cmd_coherence_scan(const RunConfig& config)
{
    CommandResult result;
    result.warnings = config.validate();
    const auto channels = selected_channels(config.channel);
    fs::create_directories(config.output_dir / "points");

    std::vector<RateRow> rates;
    json fits = json::array();

    for (int n : config.sizes()) {
        const ScanConfig scan = config.scan_config(n);
        for (Channel ch : channels) {
            const std::string tag = "N" + std::to_string(n) + "_" + std::string(to_string(ch));
            json fingerprint = to_json(scan);
            fingerprint["channel"] = to_string(ch);
            fingerprint["n_realizations"] = config.n_realizations;

            ScanHooks hooks;
            auto point_path = [&](std::size_t i) {
                return config.output_dir / "points" / (tag + "_" + std::to_string(i) + ".json");
            };
            hooks.lookup = [&](std::size_t i, double tau0) -> std::optional<CoherencePoint> {
                if (!config.resume || !fs::exists(point_path(i))) {
                    return std::nullopt;
                }
                const json doc = read_json(point_path(i));
                if (doc.value("fingerprint", json()) != fingerprint ||
                    doc.at("point").at("tau0").get<double>() != tau0) {
                    return std::nullopt;
                }
                return point_from_json(doc.at("point"));
            };
            hooks.on_point = [&](std::size_t i, const CoherencePoint& p) {
                write_json(point_path(i), {{"fingerprint", fingerprint}, {"point", point_to_json(p)}});
            };

            const fs::path csv_path = config.output_dir / ("curve_" + tag + ".csv");
            CoherenceCurve curve;
            try {
                curve = coherence_scan(scan, ch, config.tau0_grid, config.n_realizations, hooks);
            } catch (const ScanAborted& e) {
                write_curve_csv(csv_path, e.partial());
                write_sidecar(csv_path, "coherence-scan", config,
                              {{"status", "partial"},
                               {"error", e.what()},
                               {"scan", e.partial().parameters}});
                throw;
            }
            write_curve_csv(csv_path, curve);

            json fit_doc = {{"n_spins", n}, {"channel", to_string(ch)}};
            try {
                RateFit fit;
                if (ch == Channel::noninteracting) {
                    fit = fit_exponential_tail(curve,
                                               pick_window(config.tail_window_lo,
                                                           config.tail_window_hi,
                                                           default_tail_window(config.gamma)));
                } else {
                    fit = fit_linear_early(curve,
                                           pick_window(config.early_window_lo,
                                                       config.early_window_hi,
                                                       default_early_window(scan.couplings.j_eff())));
                }
                fit_doc["fit"] = to_json(fit);
                rates.push_back({n, ch, fit});
            } catch (const FitError& e) {
                fit_doc["error"] = e.what();
            }
            fits.push_back(fit_doc);

            write_sidecar(csv_path, "coherence-scan", config,
                          {{"status", "complete"}, {"scan", curve.parameters}, {"fit", fit_doc}});
            result.files.push_back(csv_path);
        }
    }

    const fs::path rates_path = config.output_dir / "rates.csv";
    write_rates_csv(rates_path, rates);
    write_sidecar(rates_path, "coherence-scan", config, {{"fits", fits}});
    result.files.push_back(rates_path);
    result.summary = {{"fits", fits}};
    return result;
}

CommandResult cmd_noise_check(const RunConfig& config)
{
    CommandResult result;
    result.warnings = config.validate();
    const auto model = std::make_shared<const NoiseModel>(config.noise_model());
    const auto lags = lag_grid(config.lag_max, config.lag_step);
    const auto est = autocorrelation_estimate(model, lags, config.noise_seeds, config.master_seed);

    fs::create_directories(config.output_dir);
    const fs::path csv_path = config.output_dir / "noise_check.csv";
    const double var = config.h_rms * config.h_rms;
    double max_dev = 0.0;
    {
        CsvWriter csv(csv_path, {"lag", "mean", "std_error", "target", "model"});
        for (const auto& e : est) {
            csv << e.lag << e.mean << e.std_error << e.target << model->model_correlation(e.lag);
            csv.end_row();
            if (var > 0.0) {
                max_dev = std::max(max_dev, std::abs(e.mean - e.target) / var);
            }
        }
    }
    write_sidecar(csv_path, "noise-check", config,
                  {{"max_deviation_over_h_rms_sq", max_dev}, {"period", model->period()}});
    result.files = {csv_path};

    if (config.trace_length > 0.0) {
        const fs::path trace_path = config.output_dir / "noise_trace.csv";
        const auto noise = sample_realization(model, stream_seed(config.master_seed, {0}));
        const auto count = static_cast<std::size_t>(std::floor(config.trace_length / config.dt)) + 1;
        write_noise_trace_csv(trace_path, noise, config.dt, count);
        write_sidecar(trace_path, "noise-check", config, {{"noise_seed", noise.seed()}});
        result.files.push_back(trace_path);
    }
    result.summary = {{"max_deviation_over_h_rms_sq", max_dev}, {"n_seeds", config.noise_seeds}};
    return result;
}

CommandResult cmd_fit(const RunConfig& config, const std::vector<fs::path>& curves)
{
    CommandResult result;
    if (curves.empty()) {
        throw ConfigError("fit needs at least one curve CSV");
    }
    std::vector<RateRow> rates;
    json fits = json::array();
    for (const auto& path : curves) {
        CoherenceCurve curve = read_curve_csv(path);
        int n = config.n_spins;
        double j_eff = config.couplings().j_eff();
        double gamma = config.gamma;
        fs::path side = path;
        side.replace_extension(".json");
        if (fs::exists(side)) {
            const json doc = read_json(side);
            if (doc.contains("scan")) {
                const json& scan = doc.at("scan");
                n = scan.value("n_spins", n);
                j_eff = scan.value("j_eff", j_eff);
                gamma = scan.value("gamma", gamma);
            }
        }
        json fit_doc = {{"curve", path.string()}, {"n_spins", n}, {"channel", to_string(curve.channel)}};
        try {
            RateFit fit = curve.channel == Channel::noninteracting
                              ? fit_exponential_tail(curve, pick_window(config.tail_window_lo,
                                                                        config.tail_window_hi,
                                                                        default_tail_window(gamma)))
                              : fit_linear_early(curve, pick_window(config.early_window_lo,
                                                                    config.early_window_hi,
                                                                    default_early_window(j_eff)));
            fit_doc["fit"] = to_json(fit);
            rates.push_back({n, curve.channel, fit});
        } catch (const FitError& e) {
            fit_doc["error"] = e.what();
        }
        fits.push_back(fit_doc);
    }
    fs::create_directories(config.output_dir);
    const fs::path rates_path = config.output_dir / "rates.csv";
    write_rates_csv(rates_path, rates);
    write_sidecar(rates_path, "fit", config, {{"fits", fits}});
    result.files = {rates_path};
    result.summary = {{"fits", fits}};
    return result;
}

CommandResult cmd_analytic(const RunConfig& config)
{
    CommandResult result;
    result.warnings = config.validate();
    const NoiseModel noise = config.noise_model();
    const double j_eff = config.couplings().j_eff();

    json per_size = json::array();
    fs::create_directories(config.output_dir);
    const fs::path csv_path = config.output_dir / "analytic.csv";
    {
        CsvWriter csv(csv_path, {"n_spins", "tau0", "anderson_weiss"});
        for (int n : config.sizes()) {
            const auto params = DephasingParams::all_up_all_down(n, noise);
            for (double tau0 : config.tau0_grid) {
                csv << n << tau0 << anderson_weiss(params, 2.0 * tau0);
                csv.end_row();
            }
            const double gn = gamma_n(params);
            const double gi = gamma_i_estimate(n, config.h_rms, j_eff);
            per_size.push_back({{"n_spins", n},
                                {"gamma_n", gn},
                                {"gamma_i_estimate", gi},
                                {"gamma_n_over_gamma_i_estimate", gn / gi},
                                {"protection_ratio", protection_ratio(n, j_eff, config.gamma)}});
        }
    }
    write_sidecar(csv_path, "analytic", config, {{"rates", per_size}, {"j_eff", j_eff}});
    result.files = {csv_path};
    result.summary = {{"j_eff", j_eff}, {"rates", per_size}};
    return result;
}

json error_json(const std::exception& e)
{
    std::string kind = "error";
    json doc;
    if (const auto* ie = dynamic_cast<const IntegrationError*>(&e)) {
        kind = "integration_error";
        doc["time"] = ie->time();
    } else if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        kind = "config_error";
    } else if (dynamic_cast<const FitError*>(&e) != nullptr) {
        kind = "fit_error";
    } else if (dynamic_cast<const ScanAborted*>(&e) != nullptr) {
        kind = "scan_aborted";
    }
    doc["error"] = kind;
    doc["message"] = e.what();
    return doc;
}

} // namespace spinecho
