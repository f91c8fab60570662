#pragma once

// Time evolution under H(t) = +/-H_int + h(t) M_z with classical RK4 and a
// Loschmidt-echo reversal of the interaction at tau0. The noise term is
// never reversed.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spinecho/noise.hpp"
#include "spinecho/spinchain.hpp"

namespace spinecho {

struct EchoSchedule {
    static constexpr double kDefaultDt = 0.01;
    static constexpr double kDefaultRecordInterval = 0.25;

    double tau0 = 15.0;
    double t_end = 30.0;
    double dt = kDefaultDt;
    int record_stride = 25;
    double reversal_error = 0.0;
    /// Opt-in: rescale to unit norm after every step. Recorded in metadata.
    bool renormalize = false;

    /// Echo run ending at 2 tau0, recording every 0.25 time units.
    static EchoSchedule echo(double tau0, double dt = kDefaultDt);

    std::int64_t reversal_step() const;
    std::int64_t total_steps() const;

    /// Throws ConfigError on any violated schedule invariant:
    /// tau0 on the dt grid, t_end on the dt grid and >= tau0, t_end below the
    /// noise period, and dt * max(J_eff, gamma, N h_rms) <= 0.1.
    void validate(int n_spins, const ChainCouplings& couplings, const NoiseModel& noise) const;

    friend bool operator==(const EchoSchedule&, const EchoSchedule&) = default;
};

/// Everything that must agree for two runs to belong to one ensemble.
struct RunParameters {
    int n_spins = 0;
    double j_x = 0.0;
    double j_y = 0.0;
    double j_z = 0.0;
    double h_rms = 0.0;
    double gamma = 0.0;
    double delta_omega = 0.0;
    int j_max = 0;
    EchoSchedule schedule;

    friend bool operator==(const RunParameters&, const RunParameters&) = default;
};

struct BranchPair {
    std::uint64_t first;  // psi_1
    std::uint64_t second; // psi_2

    /// |up up ...> and |down down ...>.
    static BranchPair all_up_all_down(const SpinBasis& basis)
    {
        return {basis.all_up(), SpinBasis::all_down()};
    }
};

struct EchoRunRecord {
    RunParameters parameters;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> mz_series;
    std::vector<double> norm_series;
    std::optional<SpinState> final_state;
    Amplitude c1;
    Amplitude c2;
    double c_phi_sq = 0.0;
};

struct EvolveOptions {
    /// Reference states for c1, c2; defaults to all-up / all-down.
    std::optional<BranchPair> branches;
    bool keep_final_state = true;
    bool record_observables = true;
    /// Abort threshold on |norm - 1|.
    double max_norm_drift = 1e-6;
};

/// Single classical RK4 step for dPsi/dt = -i H(t) Psi, with the field taken
/// from the exact harmonic sum at t, t + dt/2 and t + dt.
SpinState rk4_step(const SpinState& state, const ChainCouplings& couplings,
                   const NoiseRealization& noise, double t, double dt);

/// Integrates 0 -> tau0 under +H_int, flips the couplings (perturbed when
/// schedule.reversal_error > 0), integrates tau0 -> t_end, and extracts
/// c1 = <psi_1|Psi(t_end)>, c2 = <psi_2|Psi(t_end)>.
///
/// Throws IntegrationError when amplitudes go non-finite or the norm drifts
/// by more than options.max_norm_drift.
EchoRunRecord evolve(const SpinState& initial, const ChainCouplings& couplings,
                     const NoiseRealization& noise, const EchoSchedule& schedule,
                     const EvolveOptions& options = {});

/// Couplings used after the flip for a run seeded with `run_seed`: the
/// perturbation draws xi_a ~ N(0, 1) are fixed per run.
ChainCouplings reversed_couplings(const ChainCouplings& couplings, double reversal_error,
                                  std::uint64_t run_seed);

struct MagnetizationCurves {
    std::vector<double> times;
    std::vector<double> up;   // <M_z>_1(t), start |up up ...>
    std::vector<double> down; // <M_z>_2(t), start |down down ...>
};

/// Two runs with the same noise realization, from all-up and from all-down.
MagnetizationCurves magnetization_curves(int n_spins, const ChainCouplings& couplings,
                                         const NoiseRealization& noise,
                                         const EchoSchedule& schedule);

/// Columns t,mz,norm.
void write_series_csv(const std::filesystem::path& path, const EchoRunRecord& record);

} // namespace spinecho
