#include "spinecho/analytic.hpp"

#include <cmath>
#include <sstream>

#include "spinecho/errors.hpp"
#include "spinecho/rng.hpp"

namespace spinecho {

namespace {

// gamma T - 1 + exp(-gamma T), accurate for small arguments.
double aw_kernel(double x)
{
    if (x < 1e-3) {
        return x * x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
    }
    return x + std::expm1(-x);
}

// Phi(tau0) for every sample; Phi is the integrated field over [0, 2 tau0].
std::vector<double> integrated_phases(const NoiseModel& noise, double tau0, int n_samples,
                                      std::uint64_t seed)
{
    if (n_samples < 100) {
        throw ConfigError("cn_monte_carlo needs n_samples >= 100");
    }
    if (!(tau0 >= 0.0) || !std::isfinite(tau0)) {
        throw ConfigError("tau0 must be finite and >= 0");
    }
    const std::size_t n = noise.n_harmonics();
    const auto amps = noise.amplitudes();
    std::vector<double> weight(n);
    std::vector<double> shift(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = noise.frequency(k);
        // sin(w tau0) / w -> tau0 at w = 0.
        const double sinc = w == 0.0 ? tau0 : std::sin(w * tau0) / w;
        weight[k] = 2.0 * amps[k] * sinc;
        shift[k] = w * tau0;
    }

    std::vector<double> phi(static_cast<std::size_t>(n_samples));
#pragma omp parallel for schedule(static)
    for (int s = 0; s < n_samples; ++s) {
        StreamRng rng(stream_seed(seed, {static_cast<std::uint64_t>(s)}));
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            sum += weight[k] * std::cos(shift[k] + rng.phase());
        }
        phi[static_cast<std::size_t>(s)] = sum;
    }
    return phi;
}

CoherencePoint average_cosine(std::span<const double> phi, double delta_mz, double tau0)
{
    const auto n = static_cast<double>(phi.size());
    double mean = 0.0;
    for (double p : phi) {
        mean += std::cos(delta_mz * p);
    }
    mean /= n;
    double var = 0.0;
    for (double p : phi) {
        const double d = std::cos(delta_mz * p) - mean;
        var += d * d;
    }
    var /= (n - 1.0);
    CoherencePoint pt;
    pt.tau0 = tau0;
    pt.c_value = std::abs(mean);
    pt.n_realizations = static_cast<int>(phi.size());
    pt.std_error = std::sqrt(var / n);
    pt.channel = Channel::noninteracting;
    return pt;
}

} // namespace

DephasingParams DephasingParams::all_up_all_down(int n_spins, NoiseModel noise)
{
    DephasingParams p{n_spins, -static_cast<double>(n_spins), std::move(noise)};
    p.validate();
    return p;
}

void DephasingParams::validate() const
{
    if (n_spins < 1) {
        throw ConfigError("n_spins must be >= 1");
    }
    if (std::abs(delta_mz) > n_spins) {
        std::ostringstream msg;
        msg << "|delta_mz| = " << std::abs(delta_mz) << " exceeds n_spins = " << n_spins;
        throw ConfigError(msg.str());
    }
}

CoherencePoint cn_monte_carlo(const DephasingParams& params, double tau0, int n_samples,
                              std::uint64_t seed)
{
    params.validate();
    const auto phi = integrated_phases(params.noise, tau0, n_samples, seed);
    return average_cosine(phi, params.delta_mz, tau0);
}

std::vector<CoherencePoint> cn_monte_carlo_sweep(const NoiseModel& noise,
                                                 std::span<const double> delta_mz, double tau0,
                                                 int n_samples, std::uint64_t seed)
{
    const auto phi = integrated_phases(noise, tau0, n_samples, seed);
    std::vector<CoherencePoint> out;
    out.reserve(delta_mz.size());
    for (double dm : delta_mz) {
        out.push_back(average_cosine(phi, dm, tau0));
    }
    return out;
}

double anderson_weiss(const DephasingParams& params, double big_t)
{
    if (!(big_t >= 0.0)) {
        throw ConfigError("anderson_weiss needs T >= 0");
    }
    const double g = params.noise.gamma();
    return std::exp(-params.omega_phi_sq() * aw_kernel(g * big_t) / (g * g));
}

double gamma_n(const DephasingParams& params)
{
    return params.omega_phi_sq() / params.noise.gamma();
}

double gamma_i_estimate(int n_spins, double h_rms, double j_eff, double prefactor)
{
    if (!(j_eff > 0.0)) {
        throw ConfigError("gamma_i_estimate needs j_eff > 0");
    }
    return prefactor * n_spins * h_rms * h_rms / j_eff;
}

double protection_ratio(int n_spins, double j_eff, double gamma)
{
    if (!(gamma > 0.0)) {
        throw ConfigError("protection_ratio needs gamma > 0");
    }
    return n_spins * j_eff / gamma;
}

} // namespace spinecho
