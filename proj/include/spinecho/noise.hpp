#pragma once

// Classical colored noise h(t) = sum_j a_j cos(w_j t + alpha_j) on the
// harmonic grid w_j = dw * j, j in [-j_max, j_max], with Lorentzian
// amplitudes a_j = A h_rms / sqrt(w_j^2 + gamma^2). A is fixed by
// sum_j a_j^2 / 2 = h_rms^2, so Var h = h_rms^2 and the ensemble correlation
// approaches h_rms^2 exp(-gamma |t|) in the dense-grid limit.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

namespace spinecho {

class NoiseModel {
public:
    static constexpr double kDefaultHrms = 0.0085;
    static constexpr double kDefaultGamma = 0.25;
    static constexpr double kDefaultDeltaOmega = std::numbers::pi / 1000.0;
    static constexpr int kDefaultJmax = 100000;
    /// Reduced grid used by the desk-scale profile.
    static constexpr int kReducedJmax = 10000;

    NoiseModel(double h_rms = kDefaultHrms, double gamma = kDefaultGamma,
               double delta_omega = kDefaultDeltaOmega, int j_max = kDefaultJmax);

    double h_rms() const noexcept { return h_rms_; }
    double gamma() const noexcept { return gamma_; }
    double delta_omega() const noexcept { return delta_omega_; }
    int j_max() const noexcept { return j_max_; }
    double normalization() const noexcept { return normalization_; }

    std::size_t n_harmonics() const noexcept { return amplitudes_.size(); }
    /// Harmonic k in [0, n_harmonics) has j = k - j_max.
    int harmonic_index(std::size_t k) const noexcept { return static_cast<int>(k) - j_max_; }
    double frequency(std::size_t k) const noexcept
    {
        return delta_omega_ * harmonic_index(k);
    }
    std::span<const double> amplitudes() const noexcept { return amplitudes_; }

    /// h(t) is exactly periodic with this period (2 pi / dw).
    double period() const noexcept { return 2.0 * std::numbers::pi / delta_omega_; }

    /// h_rms^2 exp(-gamma |t|).
    double target_correlation(double t) const;
    /// Exact ensemble correlation of the harmonic model, sum_j a_j^2 cos(w_j t) / 2.
    double model_correlation(double t) const;

    /// True when h_rms << gamma is violated (h_rms >= gamma / 10).
    bool outside_weak_noise_regime() const noexcept { return h_rms_ >= 0.1 * gamma_; }

    friend bool operator==(const NoiseModel& a, const NoiseModel& b) noexcept
    {
        return a.h_rms_ == b.h_rms_ && a.gamma_ == b.gamma_ &&
               a.delta_omega_ == b.delta_omega_ && a.j_max_ == b.j_max_;
    }

private:
    double h_rms_;
    double gamma_;
    double delta_omega_;
    int j_max_;
    double normalization_;
    std::vector<double> amplitudes_;
};

/// One sampled trajectory h(t): the model plus one random phase per harmonic.
class NoiseRealization {
public:
    NoiseRealization(std::shared_ptr<const NoiseModel> model, std::vector<double> phases,
                     std::uint64_t seed);

    const NoiseModel& model() const noexcept { return *model_; }
    std::shared_ptr<const NoiseModel> model_ptr() const noexcept { return model_; }
    std::span<const double> phases() const noexcept { return phases_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Direct harmonic sum at time t; O(n_harmonics).
    double evaluate(double t) const;

    /// h(t0 + k step) for k = 0..count-1 via phasor rotation, re-anchored to the
    /// exact phases every block so the drift stays at roundoff level.
    std::vector<double> trace(double t0, double step, std::size_t count) const;

private:
    std::shared_ptr<const NoiseModel> model_;
    std::vector<double> phases_;
    std::uint64_t seed_;
};

/// Phases drawn i.i.d. uniform on [0, 2 pi) from the stream addressed by `seed`.
NoiseRealization sample_realization(std::shared_ptr<const NoiseModel> model, std::uint64_t seed);

struct CorrelationEstimate {
    double lag;
    double mean;
    double std_error;
    double target;
};

/// Ensemble estimate of <h(0) h(t)> over `n_seeds` realizations with seeds
/// stream_seed(master_seed, {i}). Requires n_seeds >= 100.
std::vector<CorrelationEstimate> autocorrelation_estimate(std::shared_ptr<const NoiseModel> model,
                                                          std::span<const double> lags,
                                                          int n_seeds,
                                                          std::uint64_t master_seed);

/// Writes columns t,h for k = 0..count-1 at t = k * step.
void write_noise_trace_csv(const std::filesystem::path& path, const NoiseRealization& noise,
                           double step, std::size_t count);

} // namespace spinecho
