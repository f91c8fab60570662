#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>

#include "spinecho/coherence_types.hpp"
#include "spinecho/dynamics.hpp"
#include "spinecho/noise.hpp"

namespace spinecho {

/// C = 2 |mean_r c1^* c2| over the records; the modulus is taken after the
/// average. Records are folded in seed order, so the result does not depend
/// on the order they are passed in. std_error is a nonparametric bootstrap
/// over realizations.
///
/// Throws ConfigError for fewer than two records, mixed parameters or
/// repeated seeds.
CoherencePoint coherence_from_ensemble(std::span<const EchoRunRecord> records,
                                       int bootstrap_resamples = 1000);

/// Bootstrap standard error of 2 |mean z| for per-realization values z.
double bootstrap_coherence_error(std::span<const Amplitude> products, int resamples,
                                 std::uint64_t seed);

struct ScanConfig {
    int n_spins = 12;
    ChainCouplings couplings;
    std::shared_ptr<const NoiseModel> noise = std::make_shared<NoiseModel>();
    double dt = EchoSchedule::kDefaultDt;
    double reversal_error = 0.0;
    std::uint64_t master_seed = 1;
    int bootstrap_resamples = 1000;
    /// Worker count for the realization loop; 0 keeps the OpenMP default.
    int threads = 0;
};

/// Optional persistence hooks: `lookup` may return an already computed point
/// (resume), `on_point` sees every freshly computed point.
struct ScanHooks {
    std::function<std::optional<CoherencePoint>(std::size_t index, double tau0)> lookup;
    std::function<void(std::size_t index, const CoherencePoint&)> on_point;
};

/// Thrown when a realization fails mid-scan; carries the points finished so far.
class ScanAborted : public std::runtime_error {
public:
    ScanAborted(const std::string& what, CoherenceCurve partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}

    const CoherenceCurve& partial() const noexcept { return partial_; }

private:
    CoherenceCurve partial_;
};

/// Default grid 0, 1.5, ..., 30.
std::vector<double> default_tau0_grid();

/// For every tau0: the interacting channel runs `n_realizations` echo runs
/// from (|psi_1> + |psi_2>)/sqrt(2) with seeds stream_seed(master, {index, r});
/// the noninteracting channel evaluates cn_monte_carlo with as many samples.
CoherenceCurve coherence_scan(const ScanConfig& config, Channel channel,
                              std::span<const double> tau0_grid, int n_realizations,
                              const ScanHooks& hooks = {});

/// Columns tau0,c_value,std_error,n_realizations,channel.
void write_curve_csv(const std::filesystem::path& path, const CoherenceCurve& curve);
CoherenceCurve read_curve_csv(const std::filesystem::path& path);

nlohmann::json to_json(const ScanConfig& config);

} // namespace spinecho
