// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            CI variants (reduced ensemble for the rate-trend check)
//   acceptance --full     desk/paper-scale presets (hours)
//   acceptance --only 1,4 run a subset

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spinecho/analytic.hpp"
#include "spinecho/coherence.hpp"
#include "spinecho/dynamics.hpp"
#include "spinecho/errors.hpp"
#include "spinecho/fitting.hpp"
#include "spinecho/harness.hpp"
#include "spinecho/noise.hpp"
#include "spinecho/rng.hpp"
#include "spinecho/spinchain.hpp"

#include "../oracles.hpp"

using namespace spinecho;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Options {
    bool full = false;
};

std::string fmt(double v, int digits = 4)
{
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

std::shared_ptr<const NoiseModel> model(double h_rms, int j_max = NoiseModel::kDefaultJmax)
{
    return std::make_shared<const NoiseModel>(h_rms, NoiseModel::kDefaultGamma,
                                              NoiseModel::kDefaultDeltaOmega, j_max);
}

// 1. Noiseless echo fidelity.
Outcome perfect_echo(const Options&)
{
    const auto quiet = sample_realization(model(0.0, 10), 1);
    double worst = 1.0;
    for (int n : {4, 8, 12}) {
        const SpinBasis basis(n);
        const SpinState psi0 = cat_state(basis, basis.all_up(), SpinBasis::all_down());
        for (double tau0 : {5.0, 15.0}) {
            EvolveOptions opts;
            opts.record_observables = false;
            const auto rec = evolve(psi0, ChainCouplings{}, quiet, EchoSchedule::echo(tau0), opts);
            worst = std::min(worst, std::abs(psi0.inner(*rec.final_state)));
        }
    }
    return {worst >= 1.0 - 1e-6, "min |<psi(0)|psi(2 tau0)>| = " + fmt(worst, 15)};
}

// 2. Matrix-free H against the Kronecker-product oracle.
Outcome oracle_equivalence(const Options&)
{
    StreamRng rng(stream_seed(2, {0}));
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 7);
        const double jx = rng.normal(), jy = rng.normal(), jz = rng.normal();
        const double h = 0.1 * rng.normal();
        const SpinBasis basis(n);
        const Eigen::VectorXcd v = oracle::random_vector(basis.dimension(), rng);
        const Eigen::VectorXcd expect = oracle::kron_hamiltonian(n, jx, jy, jz, h) * v;
        ChainCouplings c;
        c.j_x = jx;
        c.j_y = jy;
        c.j_z = jz;
        Eigen::VectorXcd got(v.size());
        ChainOperator(basis, c).apply({v.data(), static_cast<std::size_t>(v.size())},
                                      {got.data(), static_cast<std::size_t>(got.size())}, h);
        worst = std::max(worst, (got - expect).norm() / expect.norm());
    }
    return {worst <= 1e-12, "max relative error over 100 cases (N <= 8) = " + fmt(worst, 3)};
}

// 3. RK4 convergence order with noise. The desk-profile band (j_max = 10000)
// keeps the field smooth on the dt scale; the full band is reported only.
double rk4_ratio(int j_max)
{
    const SpinBasis basis(6);
    const auto noise = sample_realization(model(NoiseModel::kDefaultHrms, j_max), stream_seed(3, {0}));
    const SpinState psi0 = cat_state(basis, basis.all_up(), SpinBasis::all_down());
    auto terminal = [&](double dt) {
        EvolveOptions opts;
        opts.record_observables = false;
        opts.max_norm_drift = 1e-3;
        return *evolve(psi0, ChainCouplings{}, noise, EchoSchedule::echo(4.0, dt), opts).final_state;
    };
    const double dt = 0.08;
    const SpinState a = terminal(dt), b = terminal(dt / 2), ref = terminal(dt / 8);
    double ea = 0.0, eb = 0.0;
    for (std::uint64_t i = 0; i < basis.dimension(); ++i) {
        ea += std::norm(a[i] - ref[i]);
        eb += std::norm(b[i] - ref[i]);
    }
    return std::sqrt(ea / eb);
}

Outcome rk4_order(const Options&)
{
    const double ratio = rk4_ratio(NoiseModel::kReducedJmax);
    const double full_band = rk4_ratio(NoiseModel::kDefaultJmax);
    return {ratio >= 12.0 && ratio <= 20.0,
            "error ratio dt/(dt/2) = " + fmt(ratio) + " (dt = 0.08, N = 6, tau0 = 4, j_max = 10000); "
            "full band j_max = 100000: " + fmt(full_band) + " (informational)"};
}

// 4. Noise autocorrelation at default parameters.
Outcome noise_statistics(const Options&)
{
    const auto m = model(NoiseModel::kDefaultHrms);
    std::vector<double> lags;
    for (int t = 0; t <= 20; ++t) {
        lags.push_back(t);
    }
    const int n_seeds = 2000;
    const auto est = autocorrelation_estimate(m, lags, n_seeds, 4);
    const double var = m->h_rms() * m->h_rms();
    double worst_abs = 0.0;
    double worst_rel = 0.0;
    for (const auto& e : est) {
        worst_abs = std::max(worst_abs, std::abs(e.mean - e.target) / var);
        worst_rel = std::max(worst_rel, std::abs(e.mean - e.target) / e.target);
    }
    return {worst_abs <= 0.1, "max |C_est - C_target| / h_rms^2 = " + fmt(worst_abs) + " over " +
                                  std::to_string(n_seeds) + " seeds (max relative to target " +
                                  fmt(worst_rel) + ")"};
}

// 5. Monte Carlo noninteracting coherence against the closed form, plus the
// tail fit of the closed-form curve.
Outcome anderson_weiss_agreement(const Options&)
{
    const NoiseModel noise;
    const std::vector<int> sizes{10, 14, 18};
    std::vector<double> dms;
    for (int n : sizes) {
        dms.push_back(-n);
    }
    bool ok = true;
    double worst_dev = 0.0;
    double worst_z = 0.0;
    std::uint64_t idx = 0;
    for (double tau0 : {2.0, 5.0, 10.0, 15.0}) {
        const auto pts = cn_monte_carlo_sweep(noise, dms, tau0, 10000, stream_seed(5, {idx++}));
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            const double aw = anderson_weiss(DephasingParams::all_up_all_down(sizes[k], noise), 2 * tau0);
            const double dev = std::abs(pts[k].c_value - aw);
            ok = ok && dev <= 3.0 * pts[k].std_error + 0.02;
            worst_dev = std::max(worst_dev, dev);
            worst_z = std::max(worst_z, dev / pts[k].std_error);
        }
    }

    const auto p18 = DephasingParams::all_up_all_down(18, noise);
    const double gn = gamma_n(p18);
    CoherenceCurve curve;
    curve.channel = Channel::noninteracting;
    for (double tau0 : default_tau0_grid()) {
        curve.points.push_back({tau0, anderson_weiss(p18, 2 * tau0), 0, 0.0, Channel::noninteracting});
    }
    const auto fit = fit_exponential_tail(curve, default_tail_window(noise.gamma()));
    const double fit_dev = std::abs(fit.rate / gn - 1.0);
    ok = ok && std::abs(gn - 9.36e-2) <= 0.005 * 9.36e-2 && fit_dev <= 0.02;
    return {ok, "max |MC - AW| = " + fmt(worst_dev) + ", max |MC - AW| / se = " + fmt(worst_z) +
                    " (limit 3 se + 0.02); Gamma_N(18) = " +
                    fmt(gn) + ", analytic tail fit " + fmt(fit.rate) + " (" +
                    fmt(100 * fit_dev, 2) + "% off)"};
}

// 6. Gamma_N from Monte Carlo tail fits scales as N^2.
Outcome gamma_n_scaling(const Options&)
{
    const NoiseModel noise;
    const std::vector<int> sizes{10, 12, 14, 18};
    std::vector<double> dms;
    for (int n : sizes) {
        dms.push_back(-n);
    }
    std::vector<CoherenceCurve> curves(sizes.size());
    std::uint64_t idx = 0;
    for (double tau0 = 6.0; tau0 <= 30.0; tau0 += 3.0) {
        const auto pts = cn_monte_carlo_sweep(noise, dms, tau0, 10000, stream_seed(6, {idx++}));
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            curves[k].channel = Channel::noninteracting;
            curves[k].points.push_back(pts[k]);
        }
    }
    bool ok = true;
    std::string detail;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
        const double expect = gamma_n(DephasingParams::all_up_all_down(sizes[k], noise));
        try {
            const auto fit = fit_exponential_tail(curves[k], default_tail_window(noise.gamma()));
            const double rel = fit.rate / expect;
            ok = ok && std::abs(rel - 1.0) <= 0.10;
            detail += "N=" + std::to_string(sizes[k]) + ": " + fmt(fit.rate) + "/" + fmt(expect) +
                      " = " + fmt(rel, 3) + "; ";
        } catch (const FitError& e) {
            ok = false;
            detail += "N=" + std::to_string(sizes[k]) + ": " + e.what() + "; ";
        }
    }
    return {ok, "fitted/formula " + detail};
}

// 7. Magnetization thermalizes and revives at the echo time.
Outcome magnetization_revival(const Options&)
{
    const int n = 12;
    const RunConfig cfg = RunConfig::paper_profile();
    const auto noise = sample_realization(std::make_shared<const NoiseModel>(cfg.noise_model()),
                                          stream_seed(cfg.master_seed, {0}));
    const auto curves = magnetization_curves(n, cfg.couplings(), noise, EchoSchedule::echo(15.0));
    const double bound = 1.5 * std::sqrt(n) / 2.0;
    double worst_plateau = 0.0;
    for (std::size_t i = 0; i < curves.times.size(); ++i) {
        if (curves.times[i] >= 10.0 - 1e-9 && curves.times[i] <= 15.0 + 1e-9) {
            worst_plateau = std::max(worst_plateau, std::abs(curves.up[i]));
        }
    }
    const double revival = curves.up.back();
    const bool ok = worst_plateau < bound && std::abs(revival - n / 2.0) <= 0.05 * n / 2.0;
    return {ok, "max |Mz| on [10, 15] = " + fmt(worst_plateau) + " (bound " + fmt(bound) +
                    "), Mz(30) = " + fmt(revival) + " (target 6 +- 0.3)"};
}

// 8. Protection of the echo against noise at desk scale.
Outcome protection_effect(const Options& opt)
{
    RunConfig cfg = RunConfig::desk_profile();
    ScanConfig scan = cfg.scan_config(12);
    const std::vector<double> grid{0.5, 1.0, 15.0};
    const auto ci = coherence_scan(scan, Channel::interacting, grid, cfg.n_realizations);
    const auto cn = coherence_scan(scan, Channel::noninteracting, grid, cfg.n_realizations);
    bool short_ok = true;
    std::string short_detail;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& a = ci.points[i];
        const auto& b = cn.points[i];
        const double joint = std::hypot(a.std_error, b.std_error);
        short_ok = short_ok && std::abs(a.c_value - b.c_value) <= 3.0 * joint;
        short_detail += "tau0=" + fmt(a.tau0) + ": C_I=" + fmt(a.c_value) + " C_N=" + fmt(b.c_value) +
                        " (3 sigma " + fmt(3 * joint, 2) + "); ";
    }
    const double c_i = ci.points[2].c_value, c_n = cn.points[2].c_value;
    const bool ratio_ok = c_i >= 5.0 * c_n;
    std::string detail = "tau0=15: C_I=" + fmt(c_i) + " +- " + fmt(ci.points[2].std_error, 2) +
                         ", C_N=" + fmt(c_n) + " +- " + fmt(cn.points[2].std_error, 2) +
                         ", C_I/C_N=" + fmt(c_i / c_n, 3) + " (need >= 5); " + short_detail;

    if (opt.full) {
        RunConfig paper = RunConfig::paper_profile();
        ScanConfig big = paper.scan_config(18);
        const std::vector<double> g{15.0};
        const auto pi = coherence_scan(big, Channel::interacting, g, paper.n_realizations);
        const auto pn = coherence_scan(big, Channel::noninteracting, g, paper.n_realizations);
        detail += "paper scale N=18 tau0=15: C_I/C_N=" +
                  fmt(pi.points[0].c_value / pn.points[0].c_value, 3) + " (informational)";
    }
    return {ratio_ok && short_ok, detail};
}

// 9. Gamma_I magnitude and trend from linear early fits.
Outcome gamma_i_trend(const Options& opt)
{
    RunConfig cfg = RunConfig::desk_profile();
    std::vector<double> grid{4.0, 10.0, 16.0, 22.0, 28.0};
    int realizations = 50;
    double factor = 3.0;
    if (opt.full) {
        grid = default_tau0_grid();
        realizations = cfg.n_realizations;
        factor = 2.0;
    } else {
        cfg.dt = 0.02;
    }
    bool ok = true;
    std::string detail;
    std::vector<double> rates;
    for (int n : {10, 12, 14}) {
        const ScanConfig scan = cfg.scan_config(n);
        const auto curve = coherence_scan(scan, Channel::interacting, grid, realizations);
        const double expect = gamma_i_estimate(n, cfg.h_rms, scan.couplings.j_eff());
        try {
            const auto fit = fit_linear_early(curve, default_early_window(scan.couplings.j_eff()));
            const double rel = fit.rate / expect;
            ok = ok && rel <= factor && rel >= 1.0 / factor;
            rates.push_back(fit.rate);
            detail += "N=" + std::to_string(n) + ": " + fmt(fit.rate) + " +- " +
                      fmt(fit.rate_error(), 2) + " (x" + fmt(rel, 3) + " of estimate); ";
        } catch (const FitError& e) {
            ok = false;
            detail += "N=" + std::to_string(n) + ": " + e.what() + "; ";
        }
    }
    const bool monotone = rates.size() == 3 && rates[0] < rates[1] && rates[1] < rates[2];
    detail += monotone ? "monotone" : "NOT monotone";
    detail += " (" + std::to_string(realizations) + " realizations, factor " + fmt(factor, 2) + ")";
    return {ok && monotone, detail};
}

// 10. Imperfect reversal degrades the echo on the noise scale.
Outcome imperfect_reversal(const Options&)
{
    RunConfig cfg = RunConfig::desk_profile();
    const double j_eff = cfg.couplings().j_eff();
    const std::vector<double> grid{15.0};
    auto c_at = [&](double eps) {
        ScanConfig scan = cfg.scan_config(10);
        scan.reversal_error = eps;
        return coherence_scan(scan, Channel::interacting, grid, cfg.n_realizations).points[0];
    };
    const auto c0 = c_at(0.0);
    const auto c1 = c_at(cfg.h_rms / j_eff);
    const auto c10 = c_at(10.0 * cfg.h_rms / j_eff);
    const bool mild = c1.c_value > 0.5 * c0.c_value;
    const bool strong = c10.c_value < 0.5 * c0.c_value;
    auto show = [](const CoherencePoint& p) { return fmt(p.c_value) + " +- " + fmt(p.std_error, 2); };
    return {mild && strong, "C_I(eps=0) = " + show(c0) + ", C_I(eps J = h) = " + show(c1) +
                                ", C_I(eps J = 10 h) = " + show(c10) + " (ratio " +
                                fmt(c10.c_value / c0.c_value, 3) + ", need < 0.5)"};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance criteria"};
    Options opt;
    std::vector<int> only;
    app.add_flag("--full", opt.full, "Run desk/paper-scale presets instead of CI variants");
    app.add_option("--only", only, "Criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome(const Options&)>>> criteria = {
        {"perfect echo", perfect_echo},
        {"oracle equivalence", oracle_equivalence},
        {"RK4 order", rk4_order},
        {"noise statistics", noise_statistics},
        {"Anderson-Weiss agreement", anderson_weiss_agreement},
        {"Gamma_N scaling", gamma_n_scaling},
        {"magnetization thermalization", magnetization_revival},
        {"protection effect", protection_effect},
        {"Gamma_I magnitude and trend", gamma_i_trend},
        {"imperfect reversal", imperfect_reversal},
    };
    const std::set<int> selected(only.begin(), only.end());

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && selected.count(id) == 0) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[i].second(opt);
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id,
                    criteria[i].first.c_str(), out.detail.c_str(), secs);
        std::fflush(stdout);
        failures += out.pass ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
