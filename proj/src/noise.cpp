#include "spinecho/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"
#include "spinecho/rng.hpp"

namespace spinecho {

namespace {

constexpr std::size_t kAnchorBlock = 256;

// Unit phasors e^{i w_k dt} for every harmonic.
struct RotationTable {
    std::vector<double> re;
    std::vector<double> im;
};

RotationTable rotation_table(const NoiseModel& model, double dt)
{
    const std::size_t n = model.n_harmonics();
    RotationTable r{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        const double arg = model.frequency(k) * dt;
        r.re[k] = std::cos(arg);
        r.im[k] = std::sin(arg);
    }
    return r;
}

// z_k <- z_k * r_k, returns sum_k Re z_k after the rotation.
double rotate_and_sum(std::vector<double>& zr, std::vector<double>& zi, const RotationTable& r)
{
    const std::size_t n = zr.size();
    double* __restrict a = zr.data();
    double* __restrict b = zi.data();
    const double* __restrict c = r.re.data();
    const double* __restrict s = r.im.data();
    double sum = 0.0;
#pragma omp simd reduction(+ : sum)
    for (std::size_t k = 0; k < n; ++k) {
        const double re = a[k] * c[k] - b[k] * s[k];
        const double im = a[k] * s[k] + b[k] * c[k];
        a[k] = re;
        b[k] = im;
        sum += re;
    }
    return sum;
}

} // namespace

NoiseModel::NoiseModel(double h_rms, double gamma, double delta_omega, int j_max)
    : h_rms_(h_rms), gamma_(gamma), delta_omega_(delta_omega), j_max_(j_max)
{
    if (!(h_rms >= 0.0) || !std::isfinite(h_rms)) {
        throw ConfigError("h_rms must be finite and >= 0");
    }
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
        throw ConfigError("gamma must be finite and > 0");
    }
    if (!(delta_omega > 0.0) || !std::isfinite(delta_omega)) {
        throw ConfigError("delta_omega must be finite and > 0");
    }
    if (j_max < 0) {
        throw ConfigError("j_max must be >= 0");
    }

    const std::size_t n = 2 * static_cast<std::size_t>(j_max) + 1;
    std::vector<double> lorentz(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double w = frequency(k);
        lorentz[k] = 1.0 / std::sqrt(w * w + gamma * gamma);
    }
    // Sum smallest terms first; the spectrum is largest at j = 0.
    double sum_sq = 0.0;
    for (std::size_t d = static_cast<std::size_t>(j_max); d > 0; --d) {
        sum_sq += lorentz[static_cast<std::size_t>(j_max) - d] * lorentz[static_cast<std::size_t>(j_max) - d];
        sum_sq += lorentz[static_cast<std::size_t>(j_max) + d] * lorentz[static_cast<std::size_t>(j_max) + d];
    }
    sum_sq += lorentz[static_cast<std::size_t>(j_max)] * lorentz[static_cast<std::size_t>(j_max)];

    normalization_ = std::sqrt(2.0 / sum_sq);
    amplitudes_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        amplitudes_[k] = normalization_ * h_rms * lorentz[k];
    }
    // Exact evenness: mirror the negative-frequency half.
    for (std::size_t d = 1; d <= static_cast<std::size_t>(j_max); ++d) {
        amplitudes_[static_cast<std::size_t>(j_max) - d] =
            amplitudes_[static_cast<std::size_t>(j_max) + d];
    }
}

double NoiseModel::target_correlation(double t) const
{
    return h_rms_ * h_rms_ * std::exp(-gamma_ * std::abs(t));
}

double NoiseModel::model_correlation(double t) const
{
    double sum = 0.0;
    for (std::size_t k = 0; k < amplitudes_.size(); ++k) {
        sum += 0.5 * amplitudes_[k] * amplitudes_[k] * std::cos(frequency(k) * t);
    }
    return sum;
}

NoiseRealization::NoiseRealization(std::shared_ptr<const NoiseModel> model,
                                   std::vector<double> phases, std::uint64_t seed)
    : model_(std::move(model)), phases_(std::move(phases)), seed_(seed)
{
    if (!model_) {
        throw ConfigError("NoiseRealization needs a model");
    }
    if (phases_.size() != model_->n_harmonics()) {
        throw ConfigError("phase count " + std::to_string(phases_.size()) +
                          " does not match harmonic count " +
                          std::to_string(model_->n_harmonics()));
    }
}

double NoiseRealization::evaluate(double t) const
{
    const auto amps = model_->amplitudes();
    double sum = 0.0;
    for (std::size_t k = 0; k < amps.size(); ++k) {
        sum += amps[k] * std::cos(model_->frequency(k) * t + phases_[k]);
    }
    return sum;
}

std::vector<double> NoiseRealization::trace(double t0, double step, std::size_t count) const
{
    std::vector<double> out(count, 0.0);
    if (count == 0 || model_->h_rms() == 0.0) {
        return out;
    }
    const NoiseModel& m = *model_;
    const auto amps = m.amplitudes();
    const std::size_t n = m.n_harmonics();
    const RotationTable rot = rotation_table(m, step);
    const auto n_blocks = static_cast<std::int64_t>((count + kAnchorBlock - 1) / kAnchorBlock);

#pragma omp parallel
    {
        std::vector<double> zr(n);
        std::vector<double> zi(n);
#pragma omp for schedule(static)
        for (std::int64_t blk = 0; blk < n_blocks; ++blk) {
            const std::size_t k0 = static_cast<std::size_t>(blk) * kAnchorBlock;
            const std::size_t k1 = std::min(count, k0 + kAnchorBlock);
            const double t = t0 + static_cast<double>(k0) * step;
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double arg = m.frequency(k) * t + phases_[k];
                zr[k] = amps[k] * std::cos(arg);
                zi[k] = amps[k] * std::sin(arg);
                sum += zr[k];
            }
            out[k0] = sum;
            for (std::size_t i = k0 + 1; i < k1; ++i) {
                out[i] = rotate_and_sum(zr, zi, rot);
            }
        }
    }
    return out;
}

NoiseRealization sample_realization(std::shared_ptr<const NoiseModel> model, std::uint64_t seed)
{
    if (!model) {
        throw ConfigError("sample_realization needs a model");
    }
    StreamRng rng(seed);
    std::vector<double> phases(model->n_harmonics());
    for (auto& p : phases) {
        p = rng.phase();
    }
    return NoiseRealization(std::move(model), std::move(phases), seed);
}

std::vector<CorrelationEstimate> autocorrelation_estimate(std::shared_ptr<const NoiseModel> model,
                                                          std::span<const double> lags,
                                                          int n_seeds,
                                                          std::uint64_t master_seed)
{
    if (!model) {
        throw ConfigError("autocorrelation_estimate needs a model");
    }
    if (n_seeds < 100) {
        throw ConfigError("autocorrelation_estimate needs n_seeds >= 100");
    }
    const NoiseModel& m = *model;
    const std::size_t n = m.n_harmonics();
    const std::size_t n_lags = lags.size();

    // Visit lags in ascending |t| order and rotate between them.
    std::vector<std::size_t> order(n_lags);
    for (std::size_t i = 0; i < n_lags; ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return std::abs(lags[a]) < std::abs(lags[b]); });
    std::map<double, RotationTable> tables;
    std::vector<const RotationTable*> steps(n_lags);
    double previous = 0.0;
    for (std::size_t i = 0; i < n_lags; ++i) {
        const double gap = std::abs(lags[order[i]]) - previous;
        auto it = tables.find(gap);
        if (it == tables.end()) {
            it = tables.emplace(gap, rotation_table(m, gap)).first;
        }
        steps[i] = &it->second;
        previous = std::abs(lags[order[i]]);
    }

    std::vector<double> products(static_cast<std::size_t>(n_seeds) * n_lags);
    const auto amps = m.amplitudes();

#pragma omp parallel
    {
        std::vector<double> zr(n);
        std::vector<double> zi(n);
#pragma omp for schedule(static)
        for (int s = 0; s < n_seeds; ++s) {
            StreamRng rng(stream_seed(master_seed, {static_cast<std::uint64_t>(s)}));
            double h0 = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double alpha = rng.phase();
                zr[k] = amps[k] * std::cos(alpha);
                zi[k] = amps[k] * std::sin(alpha);
                h0 += zr[k];
            }
            double* row = products.data() + static_cast<std::size_t>(s) * n_lags;
            for (std::size_t i = 0; i < n_lags; ++i) {
                // h is real and the spectrum even, so h(-t) statistics equal h(t).
                row[order[i]] = h0 * rotate_and_sum(zr, zi, *steps[i]);
            }
        }
    }

    std::vector<CorrelationEstimate> out(n_lags);
    for (std::size_t i = 0; i < n_lags; ++i) {
        double mean = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            mean += products[static_cast<std::size_t>(s) * n_lags + i];
        }
        mean /= n_seeds;
        double var = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            const double d = products[static_cast<std::size_t>(s) * n_lags + i] - mean;
            var += d * d;
        }
        var /= (n_seeds - 1);
        out[i] = {lags[i], mean, std::sqrt(var / n_seeds), m.target_correlation(lags[i])};
    }
    return out;
}

void write_noise_trace_csv(const std::filesystem::path& path, const NoiseRealization& noise,
                           double step, std::size_t count)
{
    const auto h = noise.trace(0.0, step, count);
    CsvWriter csv(path, {"t", "h"});
    for (std::size_t k = 0; k < count; ++k) {
        csv << static_cast<double>(k) * step << h[k];
        csv.end_row();
    }
}

} // namespace spinecho
