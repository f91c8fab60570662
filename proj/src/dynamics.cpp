#include "spinecho/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "spinecho/errors.hpp"
#include "spinecho/io.hpp"
#include "spinecho/rng.hpp"

namespace spinecho {

namespace {

constexpr double kGridTolerance = 1e-9;
constexpr double kAccuracyGuard = 0.1;
constexpr std::uint64_t kReversalStream = 0x7265766572736531ULL;

std::int64_t steps_on_grid(double t, double dt, const char* what)
{
    const double ratio = t / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > kGridTolerance) {
        std::ostringstream msg;
        msg << what << " = " << t << " is not on the dt = " << dt << " grid";
        throw ConfigError(msg.str());
    }
    return static_cast<std::int64_t>(rounded);
}

// Fused RK4 state for one run. The field is pre-sampled on the half-step
// grid, h_half[2k] = h(k dt), h_half[2k+1] = h((k + 1/2) dt).
class Rk4Integrator {
public:
    explicit Rk4Integrator(std::uint64_t dim) : k_(dim), stage_(dim), acc_(dim) {}

    void step(const ChainOperator& op, std::span<Amplitude> psi, double dt, double h0,
              double h_mid, double h1)
    {
        const auto n = static_cast<std::int64_t>(psi.size());
        Amplitude* p = psi.data();
        Amplitude* k = k_.data();
        Amplitude* s = stage_.data();
        Amplitude* a = acc_.data();
        const double half = 0.5 * dt;

        op.apply_generator(psi, k_, h0);
#pragma omp parallel for simd schedule(static) if (n >= kParallel)
        for (std::int64_t i = 0; i < n; ++i) {
            a[i] = k[i];
            s[i] = p[i] + half * k[i];
        }
        op.apply_generator(stage_, k_, h_mid);
#pragma omp parallel for simd schedule(static) if (n >= kParallel)
        for (std::int64_t i = 0; i < n; ++i) {
            a[i] += 2.0 * k[i];
            s[i] = p[i] + half * k[i];
        }
        op.apply_generator(stage_, k_, h_mid);
#pragma omp parallel for simd schedule(static) if (n >= kParallel)
        for (std::int64_t i = 0; i < n; ++i) {
            a[i] += 2.0 * k[i];
            s[i] = p[i] + dt * k[i];
        }
        op.apply_generator(stage_, k_, h1);
        const double sixth = dt / 6.0;
#pragma omp parallel for simd schedule(static) if (n >= kParallel)
        for (std::int64_t i = 0; i < n; ++i) {
            p[i] += sixth * (a[i] + k[i]);
        }
    }

private:
    static constexpr std::int64_t kParallel = 1 << 12;
    std::vector<Amplitude> k_;
    std::vector<Amplitude> stage_;
    std::vector<Amplitude> acc_;
};

void check_finite_norm(double norm_sq, double t, double max_drift)
{
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "non-finite amplitudes at t = " << t;
        throw IntegrationError(msg.str(), t);
    }
    if (std::abs(norm - 1.0) > max_drift) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "norm drift " << std::abs(norm - 1.0) << " exceeds " << max_drift
            << " at t = " << t << "; reduce dt";
        throw IntegrationError(msg.str(), t);
    }
}

} // namespace

EchoSchedule EchoSchedule::echo(double tau0, double dt)
{
    EchoSchedule s;
    s.tau0 = tau0;
    s.t_end = 2.0 * tau0;
    s.dt = dt;
    s.record_stride = std::max(1, static_cast<int>(std::lround(kDefaultRecordInterval / dt)));
    return s;
}

std::int64_t EchoSchedule::reversal_step() const
{
    return steps_on_grid(tau0, dt, "tau0");
}

std::int64_t EchoSchedule::total_steps() const
{
    return steps_on_grid(t_end, dt, "t_end");
}

void EchoSchedule::validate(int n_spins, const ChainCouplings& couplings,
                            const NoiseModel& noise) const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ConfigError("dt must be finite and > 0");
    }
    if (!(tau0 >= 0.0) || !std::isfinite(tau0)) {
        throw ConfigError("tau0 must be finite and >= 0");
    }
    if (tau0 > 0.0 && dt > tau0) {
        throw ConfigError("dt must not exceed tau0");
    }
    if (!(t_end >= tau0)) {
        throw ConfigError("t_end must be >= tau0");
    }
    if (record_stride < 1) {
        throw ConfigError("record_stride must be >= 1");
    }
    if (!(reversal_error >= 0.0)) {
        throw ConfigError("reversal_error must be >= 0");
    }
    reversal_step();
    total_steps();
    if (!(t_end < noise.period())) {
        std::ostringstream msg;
        msg << "t_end = " << t_end << " must stay below the noise period " << noise.period();
        throw ConfigError(msg.str());
    }
    const double fastest = std::max({couplings.j_eff(), noise.gamma(), n_spins * noise.h_rms()});
    if (dt * fastest > kAccuracyGuard) {
        std::ostringstream msg;
        msg << "dt * max(J_eff, gamma, N h_rms) = " << dt * fastest << " exceeds "
            << kAccuracyGuard;
        throw ConfigError(msg.str());
    }
}

SpinState rk4_step(const SpinState& state, const ChainCouplings& couplings,
                   const NoiseRealization& noise, double t, double dt)
{
    ChainOperator op(state.basis(), couplings);
    SpinState next = state;
    Rk4Integrator rk(state.dimension());
    rk.step(op, next.amplitudes(), dt, noise.evaluate(t), noise.evaluate(t + 0.5 * dt),
            noise.evaluate(t + dt));
    const double norm_sq = squared_norm(next.amplitudes());
    if (!std::isfinite(norm_sq)) {
        std::ostringstream msg;
        msg << "non-finite amplitudes after step at t = " << t;
        throw IntegrationError(msg.str(), t + dt);
    }
    return next;
}

ChainCouplings reversed_couplings(const ChainCouplings& couplings, double reversal_error,
                                  std::uint64_t run_seed)
{
    ChainCouplings r = couplings;
    r.reversed = !couplings.reversed;
    r.reversal_error = reversal_error;
    r.reversal_noise = {0.0, 0.0, 0.0};
    if (reversal_error > 0.0) {
        StreamRng rng(stream_seed(run_seed, {kReversalStream}));
        for (auto& xi : r.reversal_noise) {
            xi = rng.normal();
        }
    }
    return r;
}

EchoRunRecord evolve(const SpinState& initial, const ChainCouplings& couplings,
                     const NoiseRealization& noise, const EchoSchedule& schedule,
                     const EvolveOptions& options)
{
    const SpinBasis& basis = initial.basis();
    const NoiseModel& model = noise.model();
    schedule.validate(basis.n_spins(), couplings, model);

    const std::int64_t flip_at = schedule.reversal_step();
    const std::int64_t n_steps = schedule.total_steps();
    const double dt = schedule.dt;

    EchoRunRecord rec;
    rec.parameters = {basis.n_spins(), couplings.j_x, couplings.j_y, couplings.j_z,
                      model.h_rms(),   model.gamma(), model.delta_omega(), model.j_max(),
                      schedule};
    rec.seed = noise.seed();

    const auto h = noise.trace(0.0, 0.5 * dt, static_cast<std::size_t>(2 * n_steps + 1));

    SpinState psi = initial;
    auto amps = psi.amplitudes();
    Rk4Integrator rk(basis.dimension());
    std::optional<ChainOperator> forward(std::in_place, basis, couplings);
    std::optional<ChainOperator> backward;
    if (flip_at < n_steps) {
        backward.emplace(basis, reversed_couplings(couplings, schedule.reversal_error,
                                                   noise.seed()));
    }

    auto record = [&](std::int64_t step, double norm_sq) {
        if (!options.record_observables) {
            return;
        }
        rec.times.push_back(static_cast<double>(step) * dt);
        rec.mz_series.push_back(weighted_mz(basis, amps));
        rec.norm_series.push_back(std::sqrt(norm_sq));
    };

    record(0, squared_norm(amps));
    for (std::int64_t step = 0; step < n_steps; ++step) {
        const ChainOperator& op = step < flip_at ? *forward : *backward;
        const auto i = static_cast<std::size_t>(2 * step);
        rk.step(op, amps, dt, h[i], h[i + 1], h[i + 2]);

        const std::int64_t done = step + 1;
        const bool at_record = done % schedule.record_stride == 0 || done == n_steps;
        if (at_record || schedule.renormalize) {
            const double norm_sq = squared_norm(amps);
            const double t = static_cast<double>(done) * dt;
            if (schedule.renormalize) {
                if (!std::isfinite(norm_sq) || norm_sq == 0.0) {
                    check_finite_norm(norm_sq, t, options.max_norm_drift);
                }
                const double scale = 1.0 / std::sqrt(norm_sq);
                for (auto& a : amps) {
                    a *= scale;
                }
            } else {
                check_finite_norm(norm_sq, t, options.max_norm_drift);
            }
            if (at_record) {
                record(done, schedule.renormalize ? 1.0 : norm_sq);
            }
        }
    }

    const BranchPair branches = options.branches.value_or(BranchPair::all_up_all_down(basis));
    rec.c1 = psi[branches.first];
    rec.c2 = psi[branches.second];
    rec.c_phi_sq = 1.0 - std::norm(rec.c1) - std::norm(rec.c2);
    if (options.keep_final_state) {
        rec.final_state = std::move(psi);
    }
    return rec;
}

MagnetizationCurves magnetization_curves(int n_spins, const ChainCouplings& couplings,
                                         const NoiseRealization& noise,
                                         const EchoSchedule& schedule)
{
    const SpinBasis basis(n_spins);
    EvolveOptions opts;
    opts.keep_final_state = false;

    SpinState up(basis);
    up[basis.all_up()] = 1.0;
    SpinState down(basis);
    down[SpinBasis::all_down()] = 1.0;

    auto r_up = evolve(up, couplings, noise, schedule, opts);
    auto r_down = evolve(down, couplings, noise, schedule, opts);
    return {std::move(r_up.times), std::move(r_up.mz_series), std::move(r_down.mz_series)};
}

void write_series_csv(const std::filesystem::path& path, const EchoRunRecord& record)
{
    CsvWriter csv(path, {"t", "mz", "norm"});
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        csv << record.times[i] << record.mz_series[i] << record.norm_series[i];
        csv.end_row();
    }
}

} // namespace spinecho
