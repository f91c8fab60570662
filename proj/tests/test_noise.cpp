#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>
#include <numbers>
#include <vector>

#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"
#include "spinecho/noise.hpp"

using namespace spinecho;

namespace {

std::shared_ptr<const NoiseModel> reduced_model(double h = 0.0085, double gamma = 0.25)
{
    return std::make_shared<const NoiseModel>(h, gamma, NoiseModel::kDefaultDeltaOmega,
                                              NoiseModel::kReducedJmax);
}

} // namespace

TEST_CASE("parameter validation")
{
    CHECK_THROWS_AS(NoiseModel(-1.0), ConfigError);
    CHECK_THROWS_AS(NoiseModel(0.01, 0.0), ConfigError);
    CHECK_THROWS_AS(NoiseModel(0.01, 0.25, 0.0), ConfigError);
    CHECK_THROWS_AS(NoiseModel(0.01, 0.25, 0.1, -1), ConfigError);
    CHECK_FALSE(NoiseModel().outside_weak_noise_regime());
    CHECK(NoiseModel(0.05, 0.25).outside_weak_noise_regime());
}

TEST_CASE("amplitudes are even, Lorentzian and normalized to the variance")
{
    const NoiseModel m(0.0085, 0.25, NoiseModel::kDefaultDeltaOmega, 5000);
    const auto a = m.amplitudes();
    REQUIRE(a.size() == 10001);
    const double ref = a[5000] * a[5000] * (0.25 * 0.25);
    for (std::size_t k = 0; k < a.size(); k += 37) {
        CHECK(a[k] == a[a.size() - 1 - k]);
        const double w = m.frequency(k);
        CHECK(a[k] * a[k] * (w * w + 0.0625) == doctest::Approx(ref).epsilon(1e-12));
    }
    double var = 0.0;
    for (double x : a) {
        var += 0.5 * x * x;
    }
    CHECK(var == doctest::Approx(0.0085 * 0.0085).epsilon(1e-13));
    CHECK(m.model_correlation(0.0) == doctest::Approx(0.0085 * 0.0085).epsilon(1e-13));
    CHECK(m.period() == doctest::Approx(2000.0));
}

TEST_CASE("full grid reproduces the exponential correlation")
{
    // The harmonic sum approximates the closed-form exp(-gamma |t|) up to the
    // frequency cutoff and the periodic image at t - 2000.
    const NoiseModel m;
    const double h2 = m.h_rms() * m.h_rms();
    for (double t : {0.5, 1.0, 3.0, 7.5, 12.0, 20.0}) {
        CHECK(std::abs(m.model_correlation(t) - h2 * std::exp(-0.25 * t)) < 2e-3 * h2);
        CHECK(m.target_correlation(t) == doctest::Approx(h2 * std::exp(-0.25 * t)));
        CHECK(m.model_correlation(-t) == doctest::Approx(m.model_correlation(t)));
    }
}

TEST_CASE("trace agrees with the direct harmonic sum")
{
    const auto model = reduced_model();
    const auto noise = sample_realization(model, 17);
    const std::size_t count = 3001;
    const double step = 0.005;
    const auto trace = noise.trace(1.25, step, count);
    REQUIRE(trace.size() == count);
    double worst = 0.0;
    for (std::size_t k = 0; k < count; k += 7) {
        worst = std::max(worst, std::abs(trace[k] - noise.evaluate(1.25 + step * k)));
    }
    CHECK(worst < 1e-12 * model->h_rms() * 1e3);
}

TEST_CASE("realizations are reproducible by seed and periodic")
{
    const auto model = reduced_model();
    const auto a = sample_realization(model, 5);
    const auto b = sample_realization(model, 5);
    const auto c = sample_realization(model, 6);
    CHECK(a.evaluate(3.3) == b.evaluate(3.3));
    CHECK(a.evaluate(3.3) != c.evaluate(3.3));
    CHECK(a.evaluate(3.3) == doctest::Approx(a.evaluate(3.3 + model->period())).epsilon(1e-8));
    CHECK_THROWS_AS(NoiseRealization(model, std::vector<double>(3), 1), ConfigError);
}

TEST_CASE("ensemble autocorrelation is consistent with the model")
{
    const auto model = reduced_model();
    std::vector<double> lags{0.0, 2.0, 5.0, 10.0, 20.0};
    CHECK_THROWS_AS(autocorrelation_estimate(model, lags, 50, 1), ConfigError);
    const auto est = autocorrelation_estimate(model, lags, 400, 1);
    REQUIRE(est.size() == lags.size());
    for (const auto& e : est) {
        CHECK(e.target == model->target_correlation(e.lag));
        CHECK(e.std_error > 0.0);
        CHECK(std::abs(e.mean - model->model_correlation(e.lag)) < 5.0 * e.std_error);
    }
    const auto again = autocorrelation_estimate(model, lags, 400, 1);
    CHECK(again[3].mean == est[3].mean);
}

TEST_CASE("trace export writes one row per sample")
{
    const auto model = reduced_model();
    const auto noise = sample_realization(model, 3);
    const auto path = std::filesystem::temp_directory_path() / "spinecho_noise_trace.csv";
    write_noise_trace_csv(path, noise, 0.5, 11);
    const CsvTable t = read_csv(path);
    REQUIRE(t.rows.size() == 11);
    CHECK(std::stod(t.rows[4][t.column("t")]) == 2.0);
    CHECK(std::stod(t.rows[4][t.column("h")]) == doctest::Approx(noise.evaluate(2.0)).epsilon(1e-12));
}
