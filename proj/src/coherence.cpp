#include "spinecho/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include <omp.h>

#include "spinecho/analytic.hpp"
#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"
#include "spinecho/rng.hpp"

namespace spinecho {

namespace {

constexpr std::uint64_t kNoninteractingStream = 0x6e6f6e696e74ULL;
constexpr std::uint64_t kBootstrapStream = 0x626f6f74ULL;

int worker_count(int requested)
{
    return requested > 0 ? requested : omp_get_max_threads();
}

} // namespace

std::string_view to_string(Channel c) noexcept
{
    return c == Channel::interacting ? "interacting" : "noninteracting";
}

Channel channel_from_string(std::string_view name)
{
    if (name == "interacting") {
        return Channel::interacting;
    }
    if (name == "noninteracting") {
        return Channel::noninteracting;
    }
    throw ConfigError("unknown channel '" + std::string(name) + "'");
}

void CoherenceCurve::validate() const
{
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].channel != channel) {
            throw ConfigError("coherence curve mixes channels");
        }
        if (i > 0 && !(points[i].tau0 > points[i - 1].tau0)) {
            throw ConfigError("coherence curve tau0 values must increase strictly");
        }
    }
}

double bootstrap_coherence_error(std::span<const Amplitude> products, int resamples,
                                 std::uint64_t seed)
{
    const std::size_t n = products.size();
    if (n < 2 || resamples < 2) {
        return 0.0;
    }
    StreamRng rng(seed);
    std::vector<double> stats(static_cast<std::size_t>(resamples));
    for (auto& s : stats) {
        Amplitude acc{};
        for (std::size_t i = 0; i < n; ++i) {
            acc += products[static_cast<std::size_t>(rng.next() % n)];
        }
        s = 2.0 * std::abs(acc / static_cast<double>(n));
    }
    const double mean = std::accumulate(stats.begin(), stats.end(), 0.0) / resamples;
    double var = 0.0;
    for (double s : stats) {
        var += (s - mean) * (s - mean);
    }
    return std::sqrt(var / (resamples - 1));
}

CoherencePoint coherence_from_ensemble(std::span<const EchoRunRecord> records,
                                       int bootstrap_resamples)
{
    if (records.size() < 2) {
        throw ConfigError("coherence_from_ensemble needs at least two records");
    }
    std::vector<const EchoRunRecord*> sorted;
    sorted.reserve(records.size());
    for (const auto& r : records) {
        if (!(r.parameters == records.front().parameters)) {
            throw ConfigError("coherence_from_ensemble refuses records with mixed parameters");
        }
        sorted.push_back(&r);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->seed < b->seed; });
    std::uint64_t seed_digest = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i > 0 && sorted[i]->seed == sorted[i - 1]->seed) {
            throw ConfigError("coherence_from_ensemble needs distinct noise seeds");
        }
        seed_digest = mix64(seed_digest ^ sorted[i]->seed);
    }

    std::vector<Amplitude> products;
    products.reserve(sorted.size());
    Amplitude sum{};
    for (const auto* r : sorted) {
        products.push_back(std::conj(r->c1) * r->c2);
        sum += products.back();
    }
    const auto n = static_cast<double>(products.size());

    CoherencePoint pt;
    pt.tau0 = records.front().parameters.schedule.tau0;
    pt.c_value = 2.0 * std::abs(sum / n);
    pt.n_realizations = static_cast<int>(products.size());
    pt.std_error = bootstrap_coherence_error(products, bootstrap_resamples,
                                             stream_seed(seed_digest, {kBootstrapStream}));
    pt.channel = Channel::interacting;
    return pt;
}

std::vector<double> default_tau0_grid()
{
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(1.5 * i);
    }
    return grid;
}

nlohmann::json to_json(const ScanConfig& c)
{
    return {
        {"n_spins", c.n_spins},
        {"j_x", c.couplings.j_x},
        {"j_y", c.couplings.j_y},
        {"j_z", c.couplings.j_z},
        {"j_eff", c.couplings.j_eff()},
        {"h_rms", c.noise->h_rms()},
        {"gamma", c.noise->gamma()},
        {"delta_omega", c.noise->delta_omega()},
        {"j_max", c.noise->j_max()},
        {"dt", c.dt},
        {"reversal_error", c.reversal_error},
        {"master_seed", c.master_seed},
        {"bootstrap_resamples", c.bootstrap_resamples},
    };
}

CoherenceCurve coherence_scan(const ScanConfig& config, Channel channel,
                              std::span<const double> tau0_grid, int n_realizations,
                              const ScanHooks& hooks)
{
    if (!config.noise) {
        throw ConfigError("coherence_scan needs a noise model");
    }
    if (n_realizations < 2) {
        throw ConfigError("coherence_scan needs n_realizations >= 2");
    }
    CoherenceCurve curve;
    curve.channel = channel;
    curve.parameters = to_json(config);
    curve.parameters["channel"] = to_string(channel);
    curve.parameters["n_realizations"] = n_realizations;
    curve.parameters["tau0_grid"] = std::vector<double>(tau0_grid.begin(), tau0_grid.end());

    const SpinBasis basis(config.n_spins);
    const double max_tau0 =
        tau0_grid.empty() ? 0.0 : *std::max_element(tau0_grid.begin(), tau0_grid.end());
    // Validate every schedule up front so a bad grid fails before any work.
    for (double tau0 : tau0_grid) {
        EchoSchedule s = EchoSchedule::echo(tau0, config.dt);
        s.reversal_error = config.reversal_error;
        s.validate(config.n_spins, config.couplings, *config.noise);
    }
    if (!(2.0 * max_tau0 < config.noise->period())) {
        throw ConfigError("2 max(tau0) must stay below the noise period");
    }

    const SpinState initial = cat_state(basis, basis.all_up(), SpinBasis::all_down());
    const DephasingParams dephasing = DephasingParams::all_up_all_down(config.n_spins,
                                                                       *config.noise);

    for (std::size_t i = 0; i < tau0_grid.size(); ++i) {
        const double tau0 = tau0_grid[i];
        if (hooks.lookup) {
            if (auto cached = hooks.lookup(i, tau0)) {
                curve.points.push_back(*cached);
                continue;
            }
        }

        CoherencePoint pt;
        if (channel == Channel::noninteracting) {
            pt = cn_monte_carlo(dephasing, tau0, n_realizations,
                                stream_seed(config.master_seed, {i, kNoninteractingStream}));
        } else {
            EchoSchedule schedule = EchoSchedule::echo(tau0, config.dt);
            schedule.reversal_error = config.reversal_error;
            EvolveOptions opts;
            opts.keep_final_state = false;
            opts.record_observables = false;

            std::vector<EchoRunRecord> records(static_cast<std::size_t>(n_realizations));
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_realizations));
            const int workers = worker_count(config.threads);
#pragma omp parallel for schedule(dynamic) num_threads(workers)
            for (int r = 0; r < n_realizations; ++r) {
                try {
                    const auto seed = stream_seed(config.master_seed,
                                                  {i, static_cast<std::uint64_t>(r)});
                    const auto noise = sample_realization(config.noise, seed);
                    records[static_cast<std::size_t>(r)] =
                        evolve(initial, config.couplings, noise, schedule, opts);
                } catch (...) {
                    errors[static_cast<std::size_t>(r)] = std::current_exception();
                }
            }
            for (const auto& e : errors) {
                if (e) {
                    std::string what = "coherence scan aborted at tau0 = " + format_double(tau0);
                    try {
                        std::rethrow_exception(e);
                    } catch (const std::exception& ex) {
                        what += ": ";
                        what += ex.what();
                    }
                    throw ScanAborted(what, curve);
                }
            }
            pt = coherence_from_ensemble(records, config.bootstrap_resamples);
        }
        pt.tau0 = tau0;
        curve.points.push_back(pt);
        if (hooks.on_point) {
            hooks.on_point(i, pt);
        }
    }
    return curve;
}

void write_curve_csv(const std::filesystem::path& path, const CoherenceCurve& curve)
{
    CsvWriter csv(path, {"tau0", "c_value", "std_error", "n_realizations", "channel"});
    for (const auto& p : curve.points) {
        csv << p.tau0 << p.c_value << p.std_error << p.n_realizations << to_string(p.channel);
        csv.end_row();
    }
}

CoherenceCurve read_curve_csv(const std::filesystem::path& path)
{
    const CsvTable table = read_csv(path);
    const auto c_tau = table.column("tau0");
    const auto c_val = table.column("c_value");
    const auto c_err = table.column("std_error");
    const auto c_n = table.column("n_realizations");
    const auto c_ch = table.column("channel");
    CoherenceCurve curve;
    for (const auto& row : table.rows) {
        CoherencePoint p;
        p.tau0 = std::stod(row[c_tau]);
        p.c_value = std::stod(row[c_val]);
        p.std_error = std::stod(row[c_err]);
        p.n_realizations = std::stoi(row[c_n]);
        p.channel = channel_from_string(row[c_ch]);
        curve.points.push_back(p);
    }
    if (!curve.points.empty()) {
        curve.channel = curve.points.front().channel;
    }
    curve.validate();
    return curve;
}

} // namespace spinecho
