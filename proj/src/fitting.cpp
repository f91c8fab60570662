#include "spinecho/fitting.hpp"

#include <cmath>
#include <sstream>

#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"

namespace spinecho {

namespace {

constexpr int kMinPoints = 4;
constexpr double kNoiseFloor = 5.0;

struct LineFit {
    double intercept;
    double slope;
    // Covariance of (intercept, slope).
    double var_a;
    double var_s;
    double cov_as;
    double residual_rms;
};

// Weighted straight-line fit y = a + s x. Zero sigma anywhere => unweighted,
// covariance scaled by the residual variance.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<double>& sigma)
{
    const std::size_t n = x.size();
    bool weighted = true;
    for (double s : sigma) {
        if (!(s > 0.0)) {
            weighted = false;
        }
    }
    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weighted ? 1.0 / (sigma[i] * sigma[i]) : 1.0;
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(det > 0.0)) {
        throw FitError("degenerate abscissae in fit window");
    }
    LineFit f{};
    f.slope = (sw * sxy - sx * sy) / det;
    f.intercept = (sxx * sy - sx * sxy) / det;

    double rss = 0.0;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        rss += r * r;
        chi2 += weighted ? r * r / (sigma[i] * sigma[i]) : r * r;
    }
    f.residual_rms = std::sqrt(rss / static_cast<double>(n));
    const double scale = weighted ? 1.0 : chi2 / static_cast<double>(n - 2);
    f.var_a = scale * sxx / det;
    f.var_s = scale * sw / det;
    f.cov_as = -scale * sx / det;
    return f;
}

std::string window_text(FitWindow w)
{
    std::ostringstream s;
    s << "[" << w.lo << ", " << w.hi << "]";
    return s.str();
}

} // namespace

double RateFit::rate_error() const
{
    return std::sqrt(std::max(0.0, covariance[0][0]));
}

double RateFit::prefactor_error() const
{
    return std::sqrt(std::max(0.0, covariance[1][1]));
}

FitWindow default_tail_window(double gamma)
{
    return {1.5 / gamma, std::numeric_limits<double>::infinity()};
}

FitWindow default_early_window(double j_eff)
{
    return {2.0 / j_eff, 30.0};
}

RateFit fit_exponential_tail(const CoherenceCurve& curve, FitWindow window)
{
    std::vector<double> x, y, sigma;
    for (const auto& p : curve.points) {
        if (!window.contains(p.tau0)) {
            continue;
        }
        if (p.std_error > 0.0 && p.c_value <= kNoiseFloor * p.std_error) {
            continue;
        }
        if (!(p.c_value > 0.0)) {
            throw FitError("nonpositive coherence at tau0 = " + format_double(p.tau0) +
                           " in exponential fit window");
        }
        x.push_back(2.0 * p.tau0);
        y.push_back(std::log(p.c_value));
        sigma.push_back(p.std_error / p.c_value);
    }
    if (static_cast<int>(x.size()) < kMinPoints) {
        throw FitError("exponential tail fit needs >= 4 points above the noise floor in " +
                       window_text(window) + ", found " + std::to_string(x.size()));
    }
    const LineFit line = fit_line(x, y, sigma);

    RateFit fit;
    fit.kind = FitKind::exponential_tail;
    fit.rate = -line.slope;
    fit.prefactor = std::exp(line.intercept);
    fit.window = window;
    fit.n_points = static_cast<int>(x.size());
    fit.residual_rms = line.residual_rms;
    // (rate, A) = (-s, e^a)
    fit.covariance[0][0] = line.var_s;
    fit.covariance[1][1] = fit.prefactor * fit.prefactor * line.var_a;
    fit.covariance[0][1] = fit.covariance[1][0] = -fit.prefactor * line.cov_as;
    return fit;
}

RateFit fit_linear_early(const CoherenceCurve& curve, FitWindow window)
{
    std::vector<double> x, y, sigma;
    for (const auto& p : curve.points) {
        if (!window.contains(p.tau0)) {
            continue;
        }
        x.push_back(p.tau0);
        y.push_back(p.c_value);
        sigma.push_back(p.std_error);
    }
    if (static_cast<int>(x.size()) < kMinPoints) {
        throw FitError("linear early fit needs >= 4 points in " + window_text(window) +
                       ", found " + std::to_string(x.size()));
    }
    const LineFit line = fit_line(x, y, sigma);
    if (!(line.intercept > 0.0)) {
        throw FitError("linear early fit has nonpositive intercept " +
                       format_double(line.intercept));
    }

    // C = b - 2 b rate tau0, so b = a and rate = -s / (2 a).
    const double a = line.intercept;
    const double s = line.slope;
    const double d_rate_da = s / (2.0 * a * a);
    const double d_rate_ds = -1.0 / (2.0 * a);

    RateFit fit;
    fit.kind = FitKind::linear_early;
    fit.rate = -s / (2.0 * a);
    fit.prefactor = a;
    fit.window = window;
    fit.n_points = static_cast<int>(x.size());
    fit.residual_rms = line.residual_rms;
    fit.covariance[0][0] = d_rate_da * d_rate_da * line.var_a +
                           2.0 * d_rate_da * d_rate_ds * line.cov_as +
                           d_rate_ds * d_rate_ds * line.var_s;
    fit.covariance[1][1] = line.var_a;
    fit.covariance[0][1] = fit.covariance[1][0] = d_rate_da * line.var_a + d_rate_ds * line.cov_as;
    return fit;
}

nlohmann::json to_json(const RateFit& fit)
{
    auto finite_or_null = [](double v) -> nlohmann::json {
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    };
    return {
        {"kind", fit.kind == FitKind::exponential_tail ? "exponential_tail" : "linear_early"},
        {"rate", fit.rate},
        {"rate_err", fit.rate_error()},
        {"prefactor", fit.prefactor},
        {"prefactor_err", fit.prefactor_error()},
        {"window_lo", finite_or_null(fit.window.lo)},
        {"window_hi", finite_or_null(fit.window.hi)},
        {"n_points", fit.n_points},
        {"residual_rms", fit.residual_rms},
        {"covariance",
         {{fit.covariance[0][0], fit.covariance[0][1]},
          {fit.covariance[1][0], fit.covariance[1][1]}}},
    };
}

void write_rates_csv(const std::filesystem::path& path, const std::vector<RateRow>& rows)
{
    CsvWriter csv(path, {"n_spins", "channel", "rate", "rate_err", "prefactor", "window_lo",
                         "window_hi"});
    for (const auto& r : rows) {
        csv << r.n_spins << to_string(r.channel) << r.fit.rate << r.fit.rate_error()
            << r.fit.prefactor << r.fit.window.lo << r.fit.window.hi;
        csv.end_row();
    }
}

} // namespace spinecho
