#pragma once

// Decay-rate extraction from coherence curves.
//
//   exponential tail: log C = log A - rate * (2 tau0)
//   linear early:     C = b (1 - 2 rate tau0)
//
// Both are weighted least squares with weights 1 / sigma^2 from the points'
// std_error; when any point in the window has zero error the fit is
// unweighted and the covariance is scaled by the residual variance.

#include <array>
#include <filesystem>
#include <limits>
#include <vector>

#include <json.hpp>

#include "spinecho/coherence_types.hpp"

namespace spinecho {

struct FitWindow {
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    bool contains(double tau0) const noexcept { return tau0 >= lo && tau0 <= hi; }
};

enum class FitKind { exponential_tail, linear_early };

struct RateFit {
    FitKind kind = FitKind::exponential_tail;
    double rate = 0.0;
    /// b for linear fits, amplitude A for exponential fits.
    double prefactor = 0.0;
    FitWindow window;
    int n_points = 0;
    double residual_rms = 0.0;
    /// Covariance of (rate, prefactor).
    std::array<std::array<double, 2>, 2> covariance{};

    double rate_error() const;
    double prefactor_error() const;
};

/// Tail window 2 tau0 >= 3 / gamma.
FitWindow default_tail_window(double gamma);
/// Early window tau0 in [2 / J_eff, 30].
FitWindow default_early_window(double j_eff);

/// Points with c_value <= 5 std_error are below the noise floor and skipped.
/// Throws FitError with fewer than four usable points or a nonpositive value.
RateFit fit_exponential_tail(const CoherenceCurve& curve, FitWindow window);

/// Throws FitError with fewer than four points or a nonpositive intercept.
RateFit fit_linear_early(const CoherenceCurve& curve, FitWindow window);

nlohmann::json to_json(const RateFit& fit);

struct RateRow {
    int n_spins;
    Channel channel;
    RateFit fit;
};

/// Columns n_spins,channel,rate,rate_err,prefactor,window_lo,window_hi.
void write_rates_csv(const std::filesystem::path& path, const std::vector<RateRow>& rows);

} // namespace spinecho
