#include <doctest.h>

#include <cmath>
#include <filesystem>

#include <Eigen/Dense>

#include "spinecho/errors.hpp"
#include "spinecho/fitting.hpp"
#include "spinecho/io.hpp"
#include "spinecho/rng.hpp"

using namespace spinecho;

namespace {

CoherenceCurve make_curve(Channel ch, const std::vector<double>& tau, const std::vector<double>& c,
                          const std::vector<double>& err)
{
    CoherenceCurve curve;
    curve.channel = ch;
    for (std::size_t i = 0; i < tau.size(); ++i) {
        curve.points.push_back({tau[i], c[i], 100, err[i], ch});
    }
    return curve;
}

struct WlsResult {
    Eigen::Vector2d beta; // (intercept, slope)
    Eigen::Matrix2d cov;
};

// Weighted least squares through a QR solve of the whitened design matrix.
WlsResult wls_oracle(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sigma)
{
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = 1.0 / sigma[i];
        a(i, 1) = x[i] / sigma[i];
        b[i] = y[i] / sigma[i];
    }
    WlsResult r;
    r.beta = a.colPivHouseholderQr().solve(b);
    r.cov = (a.transpose() * a).inverse();
    return r;
}

} // namespace

TEST_CASE("exact exponential data recovers rate and amplitude")
{
    std::vector<double> tau, c, err;
    for (int i = 0; i < 10; ++i) {
        tau.push_back(6.0 + 2.0 * i);
        c.push_back(0.8 * std::exp(-0.09 * 2.0 * tau.back()));
        err.push_back(0.001);
    }
    const auto fit = fit_exponential_tail(make_curve(Channel::noninteracting, tau, c, err), {6.0});
    CHECK(fit.rate == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(fit.prefactor == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(fit.n_points == 10);
    CHECK(fit.residual_rms < 1e-12);
}

TEST_CASE("exponential fit matches a weighted least-squares oracle on noisy data")
{
    StreamRng rng(31);
    std::vector<double> tau, c, err, x, y, s;
    for (int i = 0; i < 12; ++i) {
        tau.push_back(3.0 + 1.5 * i);
        const double sigma = 0.002 + 0.001 * rng.uniform();
        c.push_back(0.9 * std::exp(-0.05 * 2.0 * tau.back()) + sigma * rng.normal());
        err.push_back(sigma);
        x.push_back(2.0 * tau.back());
        y.push_back(std::log(c.back()));
        s.push_back(sigma / c.back());
    }
    const auto fit = fit_exponential_tail(make_curve(Channel::noninteracting, tau, c, err), {0.0});
    const auto oracle = wls_oracle(x, y, s);
    CHECK(fit.rate == doctest::Approx(-oracle.beta[1]).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(std::exp(oracle.beta[0])).epsilon(1e-10));
    CHECK(fit.rate_error() == doctest::Approx(std::sqrt(oracle.cov(1, 1))).epsilon(1e-8));
    CHECK(std::abs(fit.rate - 0.05) < 5.0 * fit.rate_error());
}

TEST_CASE("points under the noise floor are skipped")
{
    std::vector<double> tau{1, 2, 3, 4, 5, 6}, err(6, 0.01), c;
    for (double t : tau) {
        c.push_back(std::exp(-0.1 * 2.0 * t));
    }
    c[5] = 0.04; // 4 sigma
    const auto fit = fit_exponential_tail(make_curve(Channel::noninteracting, tau, c, err), {0.0});
    CHECK(fit.n_points == 5);
    CHECK(fit.rate == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("fits need at least four points")
{
    std::vector<double> tau{1, 2, 3}, c{0.9, 0.8, 0.7}, err(3, 0.01);
    CHECK_THROWS_AS(fit_exponential_tail(make_curve(Channel::noninteracting, tau, c, err), {0.0}),
                    FitError);
    CHECK_THROWS_AS(fit_linear_early(make_curve(Channel::interacting, tau, c, err), {0.0}), FitError);
    std::vector<double> tau5{1, 2, 3, 4, 5}, c5{0.9, 0.8, 0.7, 0.6, 0.5}, err5(5, 0.01);
    CHECK_THROWS_AS(fit_linear_early(make_curve(Channel::interacting, tau5, c5, err5), {3.5, 10.0}),
                    FitError);
}

TEST_CASE("linear early fit recovers rate and intercept")
{
    std::vector<double> tau, c, err;
    for (int i = 0; i < 8; ++i) {
        tau.push_back(2.0 + 4.0 * i);
        c.push_back(0.97 * (1.0 - 2.0 * 0.004 * tau.back()));
        err.push_back(0.005);
    }
    const auto fit = fit_linear_early(make_curve(Channel::interacting, tau, c, err), {2.0, 30.0});
    CHECK(fit.rate == doctest::Approx(0.004).epsilon(1e-12));
    CHECK(fit.prefactor == doctest::Approx(0.97).epsilon(1e-12));
    CHECK(fit.n_points == 8);
    CHECK(fit.kind == FitKind::linear_early);
}

TEST_CASE("linear fit error propagation matches the oracle covariance")
{
    StreamRng rng(4);
    std::vector<double> tau, c, err;
    for (int i = 0; i < 10; ++i) {
        tau.push_back(2.0 + 3.0 * i);
        c.push_back(1.0 - 0.01 * tau.back() + 0.004 * rng.normal());
        err.push_back(0.004);
    }
    const auto fit = fit_linear_early(make_curve(Channel::interacting, tau, c, err), {0.0, 40.0});
    const auto o = wls_oracle(tau, c, err);
    const double a = o.beta[0], s = o.beta[1];
    CHECK(fit.rate == doctest::Approx(-s / (2.0 * a)).epsilon(1e-10));
    // Gradient of -s / (2a) with respect to (a, s).
    const Eigen::Vector2d g(s / (2.0 * a * a), -1.0 / (2.0 * a));
    CHECK(fit.rate_error() == doctest::Approx(std::sqrt(g.dot(o.cov * g))).epsilon(1e-8));
    CHECK(fit.prefactor_error() == doctest::Approx(std::sqrt(o.cov(0, 0))).epsilon(1e-8));
}

TEST_CASE("zero errors switch to an unweighted fit with residual-scaled covariance")
{
    std::vector<double> tau{1, 2, 3, 4, 5}, c{1.0, 0.9, 0.82, 0.69, 0.6}, err(5, 0.0);
    const auto fit = fit_linear_early(make_curve(Channel::interacting, tau, c, err), {0.0, 10.0});
    const auto o = wls_oracle(tau, c, std::vector<double>(5, 1.0));
    double rss = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double r = c[i] - o.beta[0] - o.beta[1] * tau[i];
        rss += r * r;
    }
    CHECK(fit.prefactor == doctest::Approx(o.beta[0]).epsilon(1e-12));
    CHECK(fit.prefactor_error() == doctest::Approx(std::sqrt(o.cov(0, 0) * rss / 3.0)).epsilon(1e-8));
}

TEST_CASE("default windows and JSON/CSV export")
{
    const auto tail = default_tail_window(0.25);
    CHECK(tail.lo == 6.0);
    CHECK(std::isinf(tail.hi));
    const auto early = default_early_window(1.0);
    CHECK(early.lo == 2.0);
    CHECK(early.hi == 30.0);

    RateFit fit;
    fit.rate = 0.1;
    fit.window = tail;
    const auto j = to_json(fit);
    CHECK(j.at("window_hi").is_null());
    CHECK(j.at("kind") == "exponential_tail");

    const auto path = std::filesystem::temp_directory_path() / "spinecho_rates.csv";
    write_rates_csv(path, {{18, Channel::noninteracting, fit}});
    const auto t = read_csv(path);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][t.column("channel")] == "noninteracting");
    CHECK(std::stod(t.rows[0][t.column("rate")]) == 0.1);
}
