#pragma once

// Noninteracting-channel coherence and the rate laws.
//
// For H_N = h(t) M_z the superposition of two M_z eigenstates picks up the
// phase difference dM * int_0^T h, so C_N(T) = |<cos(dM * Phi)>| with
//
//   Phi(tau0) = 2 sum_j a_j sin(w_j tau0) / w_j * cos(w_j tau0 + alpha_j),
//
// the exact integral of h over [0, 2 tau0]. The Anderson-Weiss form is
// exp(-w_phi^2 (gamma T - 1 + exp(-gamma T)) / gamma^2) with w_phi^2 = dM^2 h_rms^2.

#include <cstdint>
#include <span>
#include <vector>

#include "spinecho/coherence_types.hpp"
#include "spinecho/noise.hpp"

namespace spinecho {

struct DephasingParams {
    int n_spins = 18;
    /// M_{z,2} - M_{z,1}; -N for the all-up / all-down pair.
    double delta_mz = -18.0;
    NoiseModel noise;

    /// All-up / all-down pair on an N-site chain.
    static DephasingParams all_up_all_down(int n_spins, NoiseModel noise);

    /// Throws ConfigError when |delta_mz| > n_spins.
    void validate() const;

    double omega_phi_sq() const noexcept
    {
        return delta_mz * delta_mz * noise.h_rms() * noise.h_rms();
    }
};

/// Monte Carlo average of cos(dM Phi) over `n_samples` random phase sets
/// with per-sample streams stream_seed(seed, {sample}). n_samples >= 100.
CoherencePoint cn_monte_carlo(const DephasingParams& params, double tau0, int n_samples,
                              std::uint64_t seed);

/// Same draws evaluated for several dM at once (the integrated phase Phi is
/// shared, only the prefactor differs). One point per entry of `delta_mz`.
std::vector<CoherencePoint> cn_monte_carlo_sweep(const NoiseModel& noise,
                                                 std::span<const double> delta_mz, double tau0,
                                                 int n_samples, std::uint64_t seed);

/// Closed-form Anderson-Weiss coherence at T = big_t (= 2 tau0).
double anderson_weiss(const DephasingParams& params, double big_t);

/// dM^2 h_rms^2 / gamma; equals N^2 h_rms^2 / gamma for the all-up/all-down pair.
double gamma_n(const DephasingParams& params);

/// Order-of-magnitude estimate prefactor * N h_rms^2 / J_eff.
double gamma_i_estimate(int n_spins, double h_rms, double j_eff, double prefactor = 0.96);

/// N J_eff / gamma, no prefactor.
double protection_ratio(int n_spins, double j_eff, double gamma);

} // namespace spinecho
